#include "shalika/padic.hpp"

#include <ostream>
#include <sstream>

namespace shalika {

using boost::multiprecision::cpp_int;

namespace {

// a * b mod m with 128-bit intermediate.
std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(a) * b) % m);
}

// Inverse of a modulo m (a coprime to m), by extended Euclid.
std::uint64_t invmod(std::uint64_t a, std::uint64_t m) {
    long long t = 0, newt = 1;
    long long r = static_cast<long long>(m), newr = static_cast<long long>(a % m);
    while (newr != 0) {
        long long q = r / newr;
        long long tmp = t - q * newt;
        t = newt;
        newt = tmp;
        tmp = r - q * newr;
        r = newr;
        newr = tmp;
    }
    if (r != 1)
        throw std::invalid_argument("invmod: arguments not coprime");
    if (t < 0) t += static_cast<long long>(m);
    return static_cast<std::uint64_t>(t);
}

} // namespace

PadicScalar::PadicScalar(const FieldConfig* cfg)
    : cfg_(cfg), zero_(true), val_(0), unit_(0), rel_prec_(0), exact_(true),
      exq_(0) {}

PadicScalar::PadicScalar(const FieldConfig* cfg, int val, std::uint64_t unit,
                         int rel_prec)
    : cfg_(cfg), zero_(false), val_(val), unit_(unit), rel_prec_(rel_prec) {
    unit_ %= cfg->p_pow(rel_prec_);
}

void PadicScalar::check_same_config(const PadicScalar& o) const {
    if (cfg_ != o.cfg_)
        throw std::invalid_argument(
            "PadicScalar: mixing scalars from different field configurations");
}

PadicScalar PadicScalar::from_exact(const FieldConfig* cfg,
                                    const BigRational& x) {
    if (x == 0) return PadicScalar(cfg);
    cpp_int num = numerator(x), den = denominator(x);
    int v = 0;
    while (num % cfg->p() == 0) {
        num /= cfg->p();
        ++v;
    }
    while (den % cfg->p() == 0) {
        den /= cfg->p();
        --v;
    }
    cpp_int m = cfg->unit_modulus();
    cpp_int nu = ((num % m) + m) % m;
    std::uint64_t du = (((den % m) + m) % m).convert_to<std::uint64_t>();
    std::uint64_t u =
        mulmod(nu.convert_to<std::uint64_t>(),
               invmod(du, cfg->unit_modulus()), cfg->unit_modulus());
    PadicScalar s(cfg, v, u, cfg->precision());
    s.exact_ = true;
    s.exq_ = x;
    return s;
}

PadicScalar PadicScalar::from_int(const FieldConfig* cfg, long long n) {
    return from_exact(cfg, BigRational(n));
}

PadicScalar PadicScalar::from_rational(const FieldConfig* cfg, long long num,
                                       long long den) {
    if (den == 0)
        throw std::invalid_argument("PadicScalar::from_rational: zero denominator");
    return from_exact(cfg, BigRational(num) / den);
}

PadicScalar PadicScalar::from_truncated(const FieldConfig* cfg, int val,
                                        std::uint64_t unit, int rel_prec) {
    if (rel_prec < 1 || rel_prec > cfg->precision())
        throw std::invalid_argument("PadicScalar::from_truncated: bad precision");
    if (unit % cfg->p() == 0)
        throw std::invalid_argument("PadicScalar::from_truncated: unit not a unit");
    return PadicScalar(cfg, val, unit, rel_prec);
}

PadicScalar PadicScalar::uniformizer_pow(const FieldConfig* cfg, int k) {
    cpp_int pk = 1;
    for (int i = 0; i < (k < 0 ? -k : k); ++i) pk *= cfg->p();
    return from_exact(cfg, k >= 0 ? BigRational(pk)
                                  : BigRational(1) / BigRational(pk));
}

const PadicScalar::BigRational& PadicScalar::exact_value() const {
    if (!exact_)
        throw std::logic_error("PadicScalar::exact_value: truncated scalar");
    return exq_;
}

int PadicScalar::valuation() const {
    if (zero_)
        throw std::logic_error("PadicScalar::valuation: zero has no valuation");
    return val_;
}

PadicScalar PadicScalar::operator-() const {
    if (zero_) return *this;
    if (exact_) return from_exact(cfg_, -exq_);
    std::uint64_t m = cfg_->p_pow(rel_prec_);
    return PadicScalar(cfg_, val_, m - unit_, rel_prec_);
}

PadicScalar PadicScalar::operator+(const PadicScalar& o) const {
    check_same_config(o);
    if (zero_) return o;
    if (o.zero_) return *this;
    if (exact_ && o.exact_) return from_exact(cfg_, exq_ + o.exq_);
    const PadicScalar* lo = this;
    const PadicScalar* hi = &o;
    if (lo->val_ > hi->val_) std::swap(lo, hi);
    int shift = hi->val_ - lo->val_;
    if (shift > 0) {
        // No cancellation possible: the low-valuation unit survives.
        int r = std::min(lo->rel_prec_, shift + hi->rel_prec_);
        std::uint64_t m = cfg_->p_pow(r);
        std::uint64_t u = lo->unit_ % m;
        if (shift < r)
            u = (u + mulmod(hi->unit_, cfg_->p_pow(shift), m)) % m;
        return PadicScalar(cfg_, lo->val_, u, r);
    }
    // Equal valuations: unit parts may cancel.
    int r = std::min(lo->rel_prec_, hi->rel_prec_);
    std::uint64_t m = cfg_->p_pow(r);
    std::uint64_t s = (lo->unit_ % m + hi->unit_ % m) % m;
    if (s == 0)
        throw PrecisionExhausted(
            "PadicScalar: addition cancelled all " + std::to_string(r) +
            " known digits; the result is indistinguishable from zero");
    int w = 0;
    while (s % cfg_->p() == 0) {
        s /= cfg_->p();
        ++w;
    }
    if (r - w < 1)
        throw PrecisionExhausted(
            "PadicScalar: addition left no known digits after cancellation");
    return PadicScalar(cfg_, lo->val_ + w, s, r - w);
}

PadicScalar PadicScalar::operator-(const PadicScalar& o) const {
    return *this + (-o);
}

PadicScalar PadicScalar::operator*(const PadicScalar& o) const {
    check_same_config(o);
    if (zero_ || o.zero_) return PadicScalar(cfg_);
    if (exact_ && o.exact_) return from_exact(cfg_, exq_ * o.exq_);
    int r = std::min(rel_prec_, o.rel_prec_);
    std::uint64_t m = cfg_->p_pow(r);
    return PadicScalar(cfg_, val_ + o.val_, mulmod(unit_ % m, o.unit_ % m, m), r);
}

PadicScalar PadicScalar::inverse() const {
    if (zero_)
        throw std::domain_error("PadicScalar::inverse: division by zero");
    if (exact_) return from_exact(cfg_, BigRational(1) / exq_);
    std::uint64_t m = cfg_->p_pow(rel_prec_);
    return PadicScalar(cfg_, -val_, invmod(unit_, m), rel_prec_);
}

PadicScalar PadicScalar::operator/(const PadicScalar& o) const {
    return *this * o.inverse();
}

PadicScalar PadicScalar::pow(int k) const {
    if (zero_) {
        if (k <= 0)
            throw std::domain_error("PadicScalar::pow: 0 to a nonpositive power");
        return *this;
    }
    PadicScalar base = k < 0 ? inverse() : *this;
    int e = k < 0 ? -k : k;
    PadicScalar acc = one(cfg_);
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    // An all-exact chain keeps N digits; otherwise the product chain has
    // already tracked the joint precision.
    if (!exact_ && acc.rel_prec_ > rel_prec_) {
        acc.exact_ = false;
        acc.rel_prec_ = rel_prec_;
        acc.unit_ %= cfg_->p_pow(rel_prec_);
    }
    return acc;
}

bool PadicScalar::equals(const PadicScalar& o) const {
    check_same_config(o);
    if (exact_ && o.exact_) return exq_ == o.exq_;
    if (zero_ || o.zero_) return zero_ && o.zero_;
    if (val_ != o.val_) return false;
    int r = std::min(rel_prec_, o.rel_prec_);
    std::uint64_t m = cfg_->p_pow(r);
    return unit_ % m == o.unit_ % m;
}

std::uint64_t PadicScalar::residue(int a) const {
    if (a < 0 || a > cfg_->precision())
        throw std::invalid_argument("PadicScalar::residue: modulus exponent out of range");
    if (zero_ || val_ >= a) return 0;
    if (val_ < 0)
        throw std::domain_error("PadicScalar::residue: scalar is not integral");
    if (val_ + rel_prec_ < a)
        throw PrecisionExhausted(
            "PadicScalar::residue: only " + std::to_string(val_ + rel_prec_) +
            " digits known, " + std::to_string(a) + " requested");
    return mulmod(unit_ % cfg_->p_pow(a - val_), cfg_->p_pow(val_),
                  cfg_->p_pow(a));
}

PadicScalar PadicScalar::reduced_mod(int a) const {
    std::uint64_t r = residue(a);
    if (r == 0) return PadicScalar(cfg_);
    return from_int(cfg_, static_cast<long long>(r));
}

std::string PadicScalar::str() const {
    if (zero_) return "0";
    std::ostringstream os;
    if (val_ != 0) os << "p^" << val_ << "*";
    os << unit_ << " (mod p^" << rel_prec_ << ")";
    return os.str();
}

std::ostream& operator<<(std::ostream& os, const PadicScalar& x) {
    return os << x.str();
}

} // namespace shalika
