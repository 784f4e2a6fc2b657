#include "shalika/cyclo.hpp"

#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace shalika {

using boost::multiprecision::cpp_int;

namespace {

// Divide the integer polynomial a (constant first) by the monic b,
// exactly; returns the quotient.  Used only where divisibility is known
// (cyclotomic factorizations of x^M - 1).
std::vector<cpp_int> exact_div(std::vector<cpp_int> a,
                               const std::vector<cpp_int>& b) {
    const size_t db = b.size() - 1;
    if (a.size() < b.size())
        throw std::logic_error("exact_div: degree underflow");
    std::vector<cpp_int> q(a.size() - db);
    for (size_t k = q.size(); k-- > 0;) {
        cpp_int c = a[k + db]; // leading coefficient of current remainder
        q[k] = c;
        if (c != 0)
            for (size_t j = 0; j <= db; ++j) a[k + j] -= c * b[j];
    }
    for (const cpp_int& c : a)
        if (c != 0) throw std::logic_error("exact_div: nonzero remainder");
    return q;
}

// Phi_M = (x^M - 1) / prod_{d | M, d < M} Phi_d, cached.  The lock is
// held across the recursion, so the recursive lookups use an unlocked
// helper.
std::unordered_map<unsigned, std::vector<cpp_int>> g_cyclo_cache;
std::mutex g_cyclo_mutex;

const std::vector<cpp_int>& cyclotomic_poly_unlocked(unsigned M) {
    auto it = g_cyclo_cache.find(M);
    if (it != g_cyclo_cache.end()) return it->second;
    std::vector<cpp_int> poly(M + 1);
    poly[0] = -1;
    poly[M] = 1;
    for (unsigned d = 1; d < M; ++d)
        if (M % d == 0)
            poly = exact_div(std::move(poly), cyclotomic_poly_unlocked(d));
    return g_cyclo_cache.emplace(M, std::move(poly)).first->second;
}

const std::vector<cpp_int>& cyclotomic_poly(unsigned M) {
    std::lock_guard<std::mutex> lock(g_cyclo_mutex);
    return cyclotomic_poly_unlocked(M);
}

} // namespace

CycloField::CycloField(unsigned M) : M_(M) {
    if (M == 0) throw std::invalid_argument("CycloField: level must be positive");
    phi_ = cyclotomic_poly(M);
}

std::shared_ptr<const CycloField> CycloField::get(unsigned M) {
    static std::unordered_map<unsigned, std::shared_ptr<const CycloField>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(M);
    if (it == cache.end())
        it = cache.emplace(M, std::shared_ptr<const CycloField>(new CycloField(M)))
                 .first;
    return it->second;
}

Cyclo::Cyclo() : field_(CycloField::get(1)), coeff_(1, Rational(0)) {}

Cyclo::Cyclo(const Rational& r)
    : field_(CycloField::get(1)), coeff_(1, r) {}

Cyclo::Cyclo(std::shared_ptr<const CycloField> f, std::vector<Rational> c)
    : field_(std::move(f)), coeff_(std::move(c)) {
    coeff_.resize(field_->degree(), Rational(0));
}

namespace {

// Reduce a polynomial (any degree) modulo the monic modulus of `f`.
std::vector<Rational> reduce_mod(std::vector<Rational> a, const CycloField& f) {
    const auto& phi = f.modulus();
    const size_t d = f.degree();
    while (a.size() > d) {
        Rational lead = a.back();
        size_t top = a.size() - 1;
        a.pop_back();
        if (lead != 0)
            for (size_t j = 0; j < d; ++j)
                a[top - d + j] -= lead * Rational(phi[j]);
    }
    a.resize(d, Rational(0));
    return a;
}

} // namespace

Cyclo Cyclo::root_of_unity(unsigned M, long long k) {
    auto f = CycloField::get(M);
    long long kk = ((k % static_cast<long long>(M)) + M) % M;
    std::vector<Rational> a(static_cast<size_t>(kk) + 1, Rational(0));
    a[static_cast<size_t>(kk)] = 1;
    Cyclo out(f, reduce_mod(std::move(a), *f));
    out.trim();
    return out;
}

bool Cyclo::is_zero() const {
    for (const Rational& c : coeff_)
        if (c != 0) return false;
    return true;
}

bool Cyclo::is_rational() const {
    for (size_t i = 1; i < coeff_.size(); ++i)
        if (coeff_[i] != 0) return false;
    return true;
}

Rational Cyclo::rational_value() const {
    if (!is_rational())
        throw std::logic_error("Cyclo::rational_value: element is irrational");
    return coeff_[0];
}

Cyclo Cyclo::lifted(unsigned M2) const {
    if (M2 == level()) return *this;
    if (M2 % level() != 0)
        throw std::logic_error("Cyclo::lifted: target level not a multiple");
    unsigned s = M2 / level();
    auto f2 = CycloField::get(M2);
    // zeta_M^i = zeta_{M2}^{s i}
    std::vector<Rational> a(static_cast<size_t>(s) * (coeff_.size() - 1) + 1,
                            Rational(0));
    for (size_t i = 0; i < coeff_.size(); ++i) a[s * i] = coeff_[i];
    return Cyclo(f2, reduce_mod(std::move(a), *f2));
}

void Cyclo::trim() {
    // Drop to the prime field when the element is rational; this keeps
    // levels (and hence lcm growth) small.
    if (level() != 1 && is_rational()) *this = Cyclo(coeff_[0]);
}

Cyclo Cyclo::operator-() const {
    std::vector<Rational> c(coeff_);
    for (Rational& x : c) x = -x;
    return Cyclo(field_, std::move(c));
}

Cyclo Cyclo::operator+(const Cyclo& o) const {
    unsigned M = std::lcm(level(), o.level());
    Cyclo a = lifted(M), b = o.lifted(M);
    for (size_t i = 0; i < a.coeff_.size(); ++i) a.coeff_[i] += b.coeff_[i];
    a.trim();
    return a;
}

Cyclo Cyclo::operator-(const Cyclo& o) const { return *this + (-o); }

Cyclo Cyclo::operator*(const Cyclo& o) const {
    unsigned M = std::lcm(level(), o.level());
    Cyclo a = lifted(M), b = o.lifted(M);
    std::vector<Rational> prod(2 * a.coeff_.size(), Rational(0));
    for (size_t i = 0; i < a.coeff_.size(); ++i) {
        if (a.coeff_[i] == 0) continue;
        for (size_t j = 0; j < b.coeff_.size(); ++j)
            if (b.coeff_[j] != 0) prod[i + j] += a.coeff_[i] * b.coeff_[j];
    }
    Cyclo r(a.field_, reduce_mod(std::move(prod), *a.field_));
    r.trim();
    return r;
}

Cyclo Cyclo::operator*(const Rational& r) const {
    std::vector<Rational> c(coeff_);
    for (Rational& x : c) x *= r;
    Cyclo out(field_, std::move(c));
    out.trim();
    return out;
}

Cyclo Cyclo::inverse() const {
    if (is_zero()) throw std::domain_error("Cyclo::inverse: zero element");
    if (is_rational()) return Cyclo(Rational(1) / coeff_[0]);
    // Solve (multiplication-by-a) x = 1 by Gaussian elimination over Q.
    const unsigned d = field_->degree();
    // Columns of the multiplication matrix: a * zeta^j reduced.
    std::vector<std::vector<Rational>> A(d, std::vector<Rational>(d + 1, Rational(0)));
    for (unsigned j = 0; j < d; ++j) {
        std::vector<Rational> col(coeff_.size() + j, Rational(0));
        for (size_t i = 0; i < coeff_.size(); ++i) col[i + j] = coeff_[i];
        col = reduce_mod(std::move(col), *field_);
        for (unsigned i = 0; i < d; ++i) A[i][j] = col[i];
    }
    A[0][d] = 1; // right-hand side e_0
    for (unsigned c = 0, r = 0; c < d && r < d; ++c) {
        unsigned piv = r;
        while (piv < d && A[piv][c] == 0) ++piv;
        if (piv == d) continue;
        std::swap(A[piv], A[r]);
        Rational inv = Rational(1) / A[r][c];
        for (unsigned j = c; j <= d; ++j) A[r][j] *= inv;
        for (unsigned i = 0; i < d; ++i) {
            if (i == r || A[i][c] == 0) continue;
            Rational f = A[i][c];
            for (unsigned j = c; j <= d; ++j) A[i][j] -= f * A[r][j];
        }
        ++r;
    }
    std::vector<Rational> x(d, Rational(0));
    for (unsigned i = 0; i < d; ++i) x[i] = A[i][d];
    Cyclo out(field_, std::move(x));
    if (!((*this) * out == Cyclo::one()))
        throw std::logic_error("Cyclo::inverse: verification failed");
    return out;
}

bool Cyclo::operator==(const Cyclo& o) const {
    return (*this - o).is_zero();
}

Cyclo Cyclo::galois(long long t) const {
    unsigned M = level();
    long long tt = ((t % static_cast<long long>(M)) + M) % M;
    if (std::gcd(static_cast<unsigned long long>(tt),
                 static_cast<unsigned long long>(M)) != 1)
        throw std::invalid_argument("Cyclo::galois: exponent not coprime to level");
    Cyclo out = Cyclo::zero();
    for (size_t i = 0; i < coeff_.size(); ++i)
        if (coeff_[i] != 0)
            out = out + root_of_unity(M, tt * static_cast<long long>(i)) * coeff_[i];
    return out;
}

std::string Cyclo::str() const {
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < coeff_.size(); ++i) {
        if (coeff_[i] == 0) continue;
        if (!first) os << " + ";
        os << coeff_[i];
        if (i > 0) os << "*z" << level() << "^" << i;
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

Cyclo cyclo_from_root_counts(unsigned M,
                             const std::vector<cpp_int>& counts) {
    if (counts.size() != M)
        throw std::invalid_argument("cyclo_from_root_counts: size mismatch");
    auto f = CycloField::get(M);
    std::vector<Rational> a(M, Rational(0));
    for (unsigned k = 0; k < M; ++k)
        if (counts[k] != 0) a[k] = Rational(counts[k]);
    Cyclo out(f, reduce_mod(std::move(a), *f));
    out.trim();
    return out;
}

CycloLaurent::CycloLaurent(const Cyclo& constant) {
    insert(0, constant);
}

CycloLaurent CycloLaurent::monomial(const Cyclo& c, int k) {
    CycloLaurent out;
    out.insert(k, c);
    return out;
}

void CycloLaurent::insert(int k, const Cyclo& c) {
    if (c.is_zero()) return;
    auto it = coeff_.find(k);
    if (it == coeff_.end()) {
        coeff_.emplace(k, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) coeff_.erase(it);
    }
}

bool CycloLaurent::is_constant() const {
    return coeff_.empty() || (coeff_.size() == 1 && coeff_.begin()->first == 0);
}

Cyclo CycloLaurent::constant_value() const {
    if (!is_constant())
        throw std::logic_error("CycloLaurent::constant_value: not constant");
    return coeff_.empty() ? Cyclo::zero() : coeff_.begin()->second;
}

CycloLaurent CycloLaurent::operator-() const {
    CycloLaurent out;
    for (const auto& [k, c] : coeff_) out.coeff_.emplace(k, -c);
    return out;
}

CycloLaurent CycloLaurent::operator+(const CycloLaurent& o) const {
    CycloLaurent out = *this;
    for (const auto& [k, c] : o.coeff_) out.insert(k, c);
    return out;
}

CycloLaurent CycloLaurent::operator-(const CycloLaurent& o) const {
    return *this + (-o);
}

CycloLaurent CycloLaurent::operator*(const CycloLaurent& o) const {
    CycloLaurent out;
    for (const auto& [k1, c1] : coeff_)
        for (const auto& [k2, c2] : o.coeff_) out.insert(k1 + k2, c1 * c2);
    return out;
}

CycloLaurent CycloLaurent::operator*(const Rational& r) const {
    CycloLaurent out;
    if (r == 0) return out;
    for (const auto& [k, c] : coeff_) out.coeff_.emplace(k, c * r);
    return out;
}

CycloLaurent CycloLaurent::operator*(const Cyclo& c0) const {
    CycloLaurent out;
    for (const auto& [k, c] : coeff_) out.insert(k, c * c0);
    return out;
}

bool CycloLaurent::operator==(const CycloLaurent& o) const {
    return (*this - o).is_zero();
}

Cyclo CycloLaurent::substitute(const Cyclo& x) const {
    Cyclo out = Cyclo::zero();
    for (const auto& [k, c] : coeff_) {
        Cyclo xp = Cyclo::one();
        Cyclo base = k >= 0 ? x : x.inverse();
        for (int i = 0; i < std::abs(k); ++i) xp = xp * base;
        out = out + c * xp;
    }
    return out;
}

CycloLaurent CycloLaurent::conj_and_invert_x() const {
    CycloLaurent out;
    for (const auto& [k, c] : coeff_) out.insert(-k, c.conj());
    return out;
}

std::string CycloLaurent::str() const {
    if (coeff_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : coeff_) {
        if (!first) os << " + ";
        os << "(" << c.str() << ")";
        if (k != 0) os << "*X^" << k;
        first = false;
    }
    return os.str();
}

} // namespace shalika
