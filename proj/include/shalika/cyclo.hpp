#ifndef SHALIKA_CYCLO_HPP
#define SHALIKA_CYCLO_HPP

// Exact arithmetic in cyclotomic fields Q(zeta_M) and in Laurent
// polynomials over them.
//
// Character values in this project are roots of unity with exact rational
// combinations; they are represented in the power basis
// 1, zeta, ..., zeta^{phi(M)-1} reduced modulo the M-th cyclotomic
// polynomial, so zero-testing and equality are exact.  The level M is
// grown lazily: elements from different levels are lifted to the lcm
// before combining.
//
// An unramified multiplicative character is only pinned down by the free
// value X = chi(uniformizer); such values live in Laurent polynomials
// in X with cyclotomic coefficients (class CycloLaurent).

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace shalika {

using Rational = boost::multiprecision::cpp_rational;

// The field Q(zeta_M); holds the cyclotomic polynomial Phi_M.  Instances
// are shared and cached per level M.
class CycloField {
public:
    static std::shared_ptr<const CycloField> get(unsigned M);

    unsigned level() const { return M_; }
    unsigned degree() const { return static_cast<unsigned>(phi_.size()) - 1; }

    // Coefficients of Phi_M, constant term first, monic.
    const std::vector<boost::multiprecision::cpp_int>& modulus() const {
        return phi_;
    }

private:
    explicit CycloField(unsigned M);
    unsigned M_;
    std::vector<boost::multiprecision::cpp_int> phi_;
};

// An element of Q(zeta_M) in the power basis.
class Cyclo {
public:
    Cyclo();                       // zero in Q(zeta_1) = Q
    explicit Cyclo(const Rational& r);
    static Cyclo zero() { return Cyclo(); }
    static Cyclo one() { return Cyclo(Rational(1)); }

    // zeta_M^k (k may be negative).
    static Cyclo root_of_unity(unsigned M, long long k);

    bool is_zero() const;
    bool is_rational() const;
    // The rational value, when is_rational() holds.
    Rational rational_value() const;

    unsigned level() const { return field_->level(); }

    Cyclo operator-() const;
    Cyclo operator+(const Cyclo& o) const;
    Cyclo operator-(const Cyclo& o) const;
    Cyclo operator*(const Cyclo& o) const;
    Cyclo operator*(const Rational& r) const;
    Cyclo inverse() const;         // exact, via linear algebra
    Cyclo operator/(const Cyclo& o) const { return *this * o.inverse(); }
    bool operator==(const Cyclo& o) const;
    bool operator!=(const Cyclo& o) const { return !(*this == o); }

    // The Galois image zeta |-> zeta^t (t coprime to the level).  t = -1
    // is complex conjugation.
    Cyclo galois(long long t) const;
    Cyclo conj() const { return galois(-1); }

    std::string str() const;

private:
    friend Cyclo cyclo_from_root_counts(
        unsigned M, const std::vector<boost::multiprecision::cpp_int>& counts);

    Cyclo(std::shared_ptr<const CycloField> f, std::vector<Rational> c);
    // Rewrite in Q(zeta_{M'}) for M' a multiple of the current level.
    Cyclo lifted(unsigned M2) const;
    void trim();

    std::shared_ptr<const CycloField> field_;
    std::vector<Rational> coeff_; // size degree(), zeta-power basis
};

// sum_k counts[k] * zeta_M^k as a single reduction (much faster than
// accumulating one root at a time when summing over large residue sets).
Cyclo cyclo_from_root_counts(
    unsigned M, const std::vector<boost::multiprecision::cpp_int>& counts);

// Laurent polynomial sum_k c_k X^k with cyclotomic coefficients.
class CycloLaurent {
public:
    CycloLaurent() = default;
    explicit CycloLaurent(const Cyclo& constant);
    explicit CycloLaurent(const Rational& r) : CycloLaurent(Cyclo(r)) {}
    static CycloLaurent monomial(const Cyclo& c, int k);
    static CycloLaurent zero() { return CycloLaurent(); }
    static CycloLaurent one() { return CycloLaurent(Cyclo::one()); }

    bool is_zero() const { return coeff_.empty(); }
    bool is_constant() const;
    Cyclo constant_value() const;  // value when is_constant()
    const std::map<int, Cyclo>& coefficients() const { return coeff_; }

    CycloLaurent operator-() const;
    CycloLaurent operator+(const CycloLaurent& o) const;
    CycloLaurent operator-(const CycloLaurent& o) const;
    CycloLaurent operator*(const CycloLaurent& o) const;
    CycloLaurent operator*(const Rational& r) const;
    CycloLaurent operator*(const Cyclo& c) const;
    bool operator==(const CycloLaurent& o) const;
    bool operator!=(const CycloLaurent& o) const { return !(*this == o); }

    // Substitute a concrete cyclotomic value for X.
    Cyclo substitute(const Cyclo& x) const;

    // Conjugate coefficients and invert X (the image of a character value
    // under chi |-> chi^{-1} conjugation when |X| = 1 formally).
    CycloLaurent conj_and_invert_x() const;

    std::string str() const;

private:
    void insert(int k, const Cyclo& c);
    std::map<int, Cyclo> coeff_;
};

} // namespace shalika

#endif
