#include "shalika/characters.hpp"

#include <numeric>
#include <sstream>

namespace shalika {

namespace {

// zeta_M^k with the level reduced by gcd(k, M) so rational values drop
// to level 1 and levels stay small.
Cyclo reduced_root(std::uint64_t M, std::uint64_t k) {
    k %= M;
    if (k == 0) return Cyclo::one();
    std::uint64_t g = std::gcd(M, k);
    M /= g;
    k /= g;
    if (M > 2'000'000)
        throw TruncationCapExceeded(
            "character value needs a root of unity of order " +
            std::to_string(M) + ", beyond the supported range");
    return Cyclo::root_of_unity(static_cast<unsigned>(M),
                                static_cast<long long>(k));
}

std::uint64_t pow_u64(std::uint64_t b, int e) {
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > (std::uint64_t(1) << 62) / b)
            throw TruncationCapExceeded("p-power overflow in character depth");
        r *= b;
    }
    return r;
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(a) * b) % m);
}

} // namespace

Cyclo AdditiveChar::value(const PadicScalar& x) const {
    if (x.is_zero() || x.valuation() >= 0) return Cyclo::one();
    int j = -x.valuation();
    if (x.rel_prec() < j)
        throw PrecisionExhausted(
            "AdditiveChar: fractional part of the argument is not fully known");
    std::uint64_t pj = pow_u64(cfg_->p(), j);
    return reduced_root(pj, x.unit() % pj);
}

Cyclo AdditiveChar::value_of_sum(const std::vector<PadicScalar>& xs) const {
    // Add fractional parts exactly as residues mod p^jmax.
    int jmax = 0;
    for (const PadicScalar& x : xs)
        if (!x.is_zero() && x.valuation() < 0)
            jmax = std::max(jmax, -x.valuation());
    if (jmax == 0) return Cyclo::one();
    std::uint64_t m = pow_u64(cfg_->p(), jmax);
    std::uint64_t s = 0;
    for (const PadicScalar& x : xs) {
        if (x.is_zero() || x.valuation() >= 0) continue;
        int j = -x.valuation();
        if (x.rel_prec() < j)
            throw PrecisionExhausted(
                "AdditiveChar: fractional part of a summand is not fully known");
        std::uint64_t pj = pow_u64(cfg_->p(), j);
        s = (s + mulmod(x.unit() % pj, m / pj, m)) % m;
    }
    return reduced_root(m, s);
}

MultChar::MultChar(const FieldConfig* cfg, int e, long long gen_index)
    : cfg_(cfg), e_(e), gen_index_(gen_index) {
    if (e == 0) {
        unit_order_ = 1;
        return;
    }
    if (cfg->p() == 2)
        throw std::invalid_argument(
            "MultChar: ramified characters over Q_2 are not supported "
            "(the relevant unit groups are trivial or non-cyclic)");
    std::uint64_t pe = pow_u64(cfg->p(), e);
    std::uint64_t n = pe - pe / cfg->p(); // phi(p^e), cyclic for odd p
    // Smallest generator of (Z/p^e)^x: order test against maximal
    // subgroups n/l for prime factors l of n.
    std::vector<std::uint64_t> prime_factors;
    {
        std::uint64_t m = n;
        for (std::uint64_t d = 2; d * d <= m; ++d)
            while (m % d == 0) {
                if (prime_factors.empty() || prime_factors.back() != d)
                    prime_factors.push_back(d);
                m /= d;
            }
        if (m > 1) prime_factors.push_back(m);
    }
    auto powmod = [&](std::uint64_t b, std::uint64_t ex) {
        std::uint64_t r = 1;
        b %= pe;
        while (ex) {
            if (ex & 1) r = mulmod(r, b, pe);
            b = mulmod(b, b, pe);
            ex >>= 1;
        }
        return r;
    };
    std::uint64_t g = 0;
    for (std::uint64_t c = 2; c < pe; ++c) {
        if (c % cfg->p() == 0) continue;
        bool gen = true;
        for (std::uint64_t l : prime_factors)
            if (powmod(c, n / l) == 1) {
                gen = false;
                break;
            }
        if (gen) {
            g = c;
            break;
        }
    }
    if (g == 0) throw std::logic_error("MultChar: no generator found");
    dlog_.assign(pe, 0);
    std::uint64_t cur = 1;
    for (std::uint64_t i = 0; i < n; ++i) {
        dlog_[cur] = static_cast<unsigned>(i);
        cur = mulmod(cur, g, pe);
    }
    std::uint64_t k = ((gen_index % static_cast<long long>(n)) + n) % n;
    unit_order_ = static_cast<unsigned>(n / std::gcd(n, k));
    gen_index_ = static_cast<long long>(k);
    // Primitivity of the conductor: chi must be nontrivial on 1 + p^{e-1}.
    if (e == 1) {
        if (k == 0)
            throw std::invalid_argument(
                "MultChar: trivial character has conductor 0, not 1");
    } else {
        std::uint64_t probe = 1 + pow_u64(cfg->p(), e - 1);
        if (k * dlog_[probe] % n == 0)
            throw std::invalid_argument(
                "MultChar: character is not primitive of the stated conductor");
    }
}

MultChar MultChar::unramified(const FieldConfig* cfg) {
    return MultChar(cfg, 0, 0);
}

MultChar MultChar::ramified(const FieldConfig* cfg, int e, long long gen_index) {
    if (e < 1) throw std::invalid_argument("MultChar::ramified: need e >= 1");
    return MultChar(cfg, e, gen_index);
}

Cyclo MultChar::unit_value(std::uint64_t u) const {
    if (e_ == 0) return Cyclo::one();
    std::uint64_t pe = pow_u64(cfg_->p(), e_);
    u %= pe;
    if (u % cfg_->p() == 0)
        throw std::invalid_argument("MultChar::unit_value: residue is not a unit");
    std::uint64_t n = pe - pe / cfg_->p();
    return reduced_root(n, static_cast<std::uint64_t>(gen_index_) * dlog_[u] % n);
}

std::pair<std::uint64_t, std::uint64_t> MultChar::unit_root_exponent(
    std::uint64_t u) const {
    if (e_ == 0) return {1, 0};
    std::uint64_t pe = pow_u64(cfg_->p(), e_);
    u %= pe;
    if (u % cfg_->p() == 0)
        throw std::invalid_argument(
            "MultChar::unit_root_exponent: residue is not a unit");
    std::uint64_t n = pe - pe / cfg_->p();
    return {n, static_cast<std::uint64_t>(gen_index_) * dlog_[u] % n};
}

CycloLaurent MultChar::value(const PadicScalar& x) const {
    if (x.is_zero())
        throw std::domain_error("MultChar::value: chi is not defined at 0");
    if (e_ > 0 && x.rel_prec() < e_)
        throw PrecisionExhausted("MultChar::value: unit part not known mod p^e");
    Cyclo c = e_ == 0 ? Cyclo::one()
                      : unit_value(x.unit() % cfg_->p_pow(std::min(
                            e_, cfg_->precision())));
    return CycloLaurent::monomial(c, x.valuation());
}

CycloLaurent MultChar::norm_twisted_value(const PadicScalar& x, int s) const {
    CycloLaurent v = value(x);
    long long ex = static_cast<long long>(s) * x.valuation();
    Rational scale = ex >= 0
        ? Rational(1) / Rational(boost::multiprecision::pow(
              boost::multiprecision::cpp_int(cfg_->p()), static_cast<unsigned>(ex)))
        : Rational(boost::multiprecision::pow(
              boost::multiprecision::cpp_int(cfg_->p()), static_cast<unsigned>(-ex)));
    return v * scale;
}

bool GaussSumValue::operator==(const GaussSumValue& o) const {
    if (!(tail_coeff == o.tail_coeff)) return false;
    // Roll both tails forward to the same start; the skipped terms are a
    // finite geometric piece.
    int t = std::max(tail_start, o.tail_start);
    auto rolled = [&](const GaussSumValue& v) {
        CycloLaurent f = v.finite;
        if (v.has_tail())
            for (int k = v.tail_start; k < t; ++k) {
                Rational qk(1);
                for (int i = 0; i < k; ++i) qk /= Rational(v.cfg->p());
                f = f + CycloLaurent::monomial(v.tail_coeff * qk, k);
            }
        return f;
    };
    return rolled(*this) == rolled(o);
}

std::string GaussSumValue::str() const {
    std::ostringstream os;
    os << finite.str();
    if (has_tail())
        os << " + (" << tail_coeff.str() << ") * sum_{k>=" << tail_start
           << "} (X/q)^k";
    return os.str();
}

namespace {

Rational q_pow(std::uint64_t p, long long ex) {
    Rational r(1);
    for (long long i = 0; i < std::llabs(ex); ++i)
        ex > 0 ? r *= Rational(p) : r /= Rational(p);
    return r;
}

// The k-th valuation shell  int_{p^k O^x} chi(x) psi(a x) dx  as a
// monomial  X^k * (cyclotomic coefficient).  psi is nontrivial on the
// shell exactly when j0 = -o(a) - k > 0.
CycloLaurent gauss_shell(const MultChar& chi, const PadicScalar& a, int k) {
    const FieldConfig* cfg = chi.config();
    const std::uint64_t p = cfg->p();
    const int e = chi.conductor();
    const int j0 = a.is_zero() ? 0 : std::max(0, -a.valuation() - k);
    const int j = std::max({e, j0, 1}); // residue level needed
    if (j0 > 0 && a.rel_prec() < j0)
        throw PrecisionExhausted("gauss_sum: scale argument underresolved");
    std::uint64_t pj = pow_u64(p, j);
    std::uint64_t pj0 = pow_u64(p, j0);
    std::uint64_t au = j0 > 0 ? a.unit() % pj0 : 0;
    // Accumulate the shell as integer counts of zeta_M powers, with
    // M = lcm(p^{j0}, order of chi on units): one reduction per shell.
    std::uint64_t n = chi.unit_root_exponent(1).first;
    std::uint64_t M = std::lcm(pj0, n);
    if (M > 2'000'000)
        throw TruncationCapExceeded("gauss_sum: root-of-unity order too large");
    std::vector<boost::multiprecision::cpp_int> counts(M);
    for (std::uint64_t u = 1; u < pj; ++u) {
        if (u % p == 0) continue;
        std::uint64_t expo =
            j0 > 0 ? mulmod(au, u % pj0, pj0) * (M / pj0) % M : 0;
        if (e > 0) {
            auto [nn, ke] = chi.unit_root_exponent(u);
            expo = (expo + ke * (M / nn)) % M;
        }
        counts[expo] += 1;
    }
    Cyclo shell = cyclo_from_root_counts(static_cast<unsigned>(M), counts);
    // measure weight q^{-k} for the shell times q^{-j} per residue
    return CycloLaurent::monomial(shell * q_pow(p, -(k + j)), k);
}

// Trivial-psi tail coefficient: shells k >= k_end each contribute
// X^k q^{-k-j} * (plain unit character sum), which vanishes for ramified
// chi by orthogonality and yields (1 - 1/q) (X/q)^k otherwise.
void attach_trivial_tail(GaussSumValue& out, const MultChar& chi, int k_end) {
    const std::uint64_t p = chi.config()->p();
    const int e = chi.conductor();
    if (e > 0) return; // orthogonality kills every trivial-psi shell
    out.tail_coeff = Cyclo(Rational(p - 1) / Rational(p));
    out.tail_start = k_end;
}

} // namespace

GaussSumValue gauss_sum(const MultChar& chi, const AdditiveChar& psi,
                        const PadicScalar& a) {
    const FieldConfig* cfg = chi.config();
    if (psi.config() != cfg)
        throw std::invalid_argument("gauss_sum: mixed configurations");
    GaussSumValue out;
    out.cfg = cfg;
    const int k_end = a.is_zero() ? 0 : std::max(0, -a.valuation());
    for (int k = 0; k < k_end; ++k)
        out.finite = out.finite + gauss_shell(chi, a, k);
    attach_trivial_tail(out, chi, k_end);
    return out;
}

GaussSumValue gauss_sum_unit_shell(const MultChar& chi,
                                   const AdditiveChar& psi,
                                   const PadicScalar& a) {
    const FieldConfig* cfg = chi.config();
    if (psi.config() != cfg)
        throw std::invalid_argument("gauss_sum: mixed configurations");
    GaussSumValue out;
    out.cfg = cfg;
    out.finite = gauss_shell(chi, a, 0);
    return out;
}

GaussSumValue gauss_sum_principal(const MultChar& chi,
                                  const AdditiveChar& psi,
                                  const PadicScalar& a) {
    const FieldConfig* cfg = chi.config();
    if (psi.config() != cfg)
        throw std::invalid_argument("gauss_sum: mixed configurations");
    if (a.is_zero())
        throw std::domain_error("gauss_sum_principal: requires a != 0");
    GaussSumValue out;
    out.cfg = cfg;
    // Shells with psi depth j0 > max(e, 1) vanish by additive
    // orthogonality within chi-cosets, so the principal value reduces to
    // the window  -o(a) - max(e,1) <= k < -o(a)  plus the trivial tail.
    const int k_end = -a.valuation();
    const int k_lo = k_end - std::max(chi.conductor(), 1);
    for (int k = k_lo; k < k_end; ++k)
        out.finite = out.finite + gauss_shell(chi, a, k);
    attach_trivial_tail(out, chi, k_end);
    return out;
}

Cyclo gauss_sum_at_conductor(const MultChar& chi, const AdditiveChar& psi) {
    if (!chi.is_ramified())
        throw std::invalid_argument(
            "gauss_sum_at_conductor: requires a ramified character");
    PadicScalar a =
        PadicScalar::uniformizer_pow(chi.config(), -chi.conductor());
    GaussSumValue g = gauss_sum(chi, psi, a);
    if (g.has_tail())
        throw std::logic_error("gauss_sum_at_conductor: unexpected tail");
    const auto& c = g.finite.coefficients();
    if (c.empty()) return Cyclo::zero();
    if (c.size() != 1 || c.begin()->first != 0)
        throw std::logic_error("gauss_sum_at_conductor: unexpected X powers");
    return c.begin()->second;
}

} // namespace shalika
