#ifndef SHALIKA_PADIC_HPP
#define SHALIKA_PADIC_HPP

// Truncated p-adic scalars.  A nonzero scalar is stored as
//
//     x = p^v * u,   u a unit known modulo p^r,
//
// where v is the (exact) valuation and r <= N is the number of base-p
// digits of the unit part that are actually known.
//
// Scalars created from integers or rationals additionally carry their
// exact rational value, and arithmetic on exact scalars stays exact: in
// particular an exact cancellation (1 - 1) yields the exact zero scalar.
// Truncated scalars (created by from_truncated, or downstream of one)
// follow windowed semantics: additive cancellation reduces the relative
// precision r, and when every known digit cancels PrecisionExhausted is
// raised -- truncation never silently produces zero.

#include "shalika/config.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace shalika {

class PadicScalar {
public:
    using BigRational = boost::multiprecision::cpp_rational;

    // Exact zero.
    explicit PadicScalar(const FieldConfig* cfg);

    // Exact integer n (any sign, any size via repeated reduction).
    static PadicScalar from_int(const FieldConfig* cfg, long long n);

    // Exact rational num/den (den nonzero).
    static PadicScalar from_rational(const FieldConfig* cfg, long long num,
                                     long long den);

    // Exact arbitrary-precision rational.
    static PadicScalar from_exact(const FieldConfig* cfg,
                                  const BigRational& x);

    // A scalar known only through its truncated digits (no exact value
    // behind it); unit must be coprime to p, 1 <= rel_prec <= N.
    static PadicScalar from_truncated(const FieldConfig* cfg, int val,
                                      std::uint64_t unit, int rel_prec);

    // p^k (k may be negative).
    static PadicScalar uniformizer_pow(const FieldConfig* cfg, int k);

    static PadicScalar one(const FieldConfig* cfg) { return from_int(cfg, 1); }

    const FieldConfig* config() const { return cfg_; }
    bool is_zero() const { return zero_; }

    // Whether the exact rational value is known.
    bool is_exact() const { return exact_; }
    const BigRational& exact_value() const;

    // Exact valuation; it is an error to ask for the valuation of zero.
    int valuation() const;

    // Known relative precision (digits of the unit part); N for exact
    // inputs, less after truncated cancellation.  Meaningless for zero.
    int rel_prec() const { return rel_prec_; }

    // Unit part modulo p^rel_prec() (in [1, p^r), coprime to p).
    std::uint64_t unit() const { return unit_; }

    bool is_integral() const { return zero_ || val_ >= 0; }
    bool is_unit() const { return !zero_ && val_ == 0; }

    // x lies in p^k * O (i.e. zero or valuation >= k).
    bool in_ideal(int k) const { return zero_ || val_ >= k; }

    PadicScalar operator-() const;
    PadicScalar operator+(const PadicScalar& o) const;
    PadicScalar operator-(const PadicScalar& o) const;
    PadicScalar operator*(const PadicScalar& o) const;
    PadicScalar operator/(const PadicScalar& o) const;
    PadicScalar inverse() const;
    PadicScalar pow(int k) const;

    // Equality at the joint working precision: zero equals only zero;
    // exact scalars compare exactly, otherwise nonzero scalars are equal
    // when their valuations agree and their unit parts agree modulo
    // p^min(r1, r2).
    bool equals(const PadicScalar& o) const;

    // Integer representative of x modulo p^a, for integral x known to at
    // least a digits (throws PrecisionExhausted otherwise).  Result is in
    // [0, p^a).
    std::uint64_t residue(int a) const;

    // The canonical representative of x modulo p^a as a scalar: the exact
    // integer residue(a).  Requires integral x.
    PadicScalar reduced_mod(int a) const;

    // Human-readable form, e.g. "p^2 * 7 (mod p^12)" or "0".
    std::string str() const;

private:
    PadicScalar(const FieldConfig* cfg, int val, std::uint64_t unit,
                int rel_prec);

    void check_same_config(const PadicScalar& o) const;

    const FieldConfig* cfg_;
    bool zero_;
    int val_;
    std::uint64_t unit_;
    int rel_prec_;
    bool exact_ = false;
    BigRational exq_;
};

std::ostream& operator<<(std::ostream& os, const PadicScalar& x);

} // namespace shalika

#endif
