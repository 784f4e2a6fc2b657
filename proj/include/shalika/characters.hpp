#ifndef SHALIKA_CHARACTERS_HPP
#define SHALIKA_CHARACTERS_HPP

// Characters of the local field and their Gauss sums, with exact
// cyclotomic values.
//
//  * AdditiveChar is the standard additive character of conductor zero:
//    trivial on the integers, nontrivial on p^{-1} O; its value on x
//    depends only on the fractional part and is a p-power root of unity.
//  * MultChar is a character of F^x.  On units it has finite order and
//    exact root-of-unity values (conductor e >= 1: values through a
//    discrete logarithm on (O/p^e)^x; e = 0: trivial on units).  Its
//    value on the uniformizer is the free symbol X, so values of the
//    full character live in CycloLaurent.
//  * gauss_sum integrates chi(x) psi(a x) over the integers, shell by
//    shell in the valuation of x, with the trivial-psi tail folded into
//    a closed-form geometric series in X/q.

#include "shalika/config.hpp"
#include "shalika/cyclo.hpp"
#include "shalika/padic.hpp"

#include <vector>

namespace shalika {

class AdditiveChar {
public:
    explicit AdditiveChar(const FieldConfig* cfg) : cfg_(cfg) {}

    const FieldConfig* config() const { return cfg_; }

    // psi(x); requires the fractional part of x to be fully known.
    Cyclo value(const PadicScalar& x) const;

    // psi on a sum of scalars (saves building the sum when terms may
    // cancel: fractional parts are added exactly as residues).
    Cyclo value_of_sum(const std::vector<PadicScalar>& xs) const;

private:
    const FieldConfig* cfg_;
};

class MultChar {
public:
    // Trivial on units; chi(p) = X.
    static MultChar unramified(const FieldConfig* cfg);

    // Conductor e >= 1: chi(g) = zeta_n^{gen_index} where g is the
    // smallest primitive root of (Z/p^e)^x and n its order.  Requires
    // odd p (the p = 2 unit groups are not cyclic / are trivial) and a
    // chi that is primitive of conductor exactly e.
    static MultChar ramified(const FieldConfig* cfg, int e,
                             long long gen_index);

    const FieldConfig* config() const { return cfg_; }
    int conductor() const { return e_; }
    bool is_ramified() const { return e_ > 0; }

    // Order of the restriction to units.
    unsigned unit_order() const { return unit_order_; }

    // chi on a unit residue u mod p^e (u coprime to p).
    Cyclo unit_value(std::uint64_t u) const;

    // chi(u) expressed as (n, k) with chi(u) = zeta_n^k, n = phi(p^e)
    // (or (1, 0) for the unramified character).  Used to accumulate many
    // character values as integer exponent counts.
    std::pair<std::uint64_t, std::uint64_t> unit_root_exponent(
        std::uint64_t u) const;

    // chi(x) = X^{o(x)} * chi(unit part); x must be nonzero.
    CycloLaurent value(const PadicScalar& x) const;

    // chi composed with the norm twist: (nu^s chi)(x) = q^{-s o(x)} chi(x).
    CycloLaurent norm_twisted_value(const PadicScalar& x, int s) const;

private:
    MultChar(const FieldConfig* cfg, int e, long long gen_index);

    const FieldConfig* cfg_;
    int e_;
    unsigned unit_order_;       // order of chi on units
    long long gen_index_;
    std::vector<unsigned> dlog_; // dlog table mod p^e (index = residue)
};

// Value of the Gauss integral: a finite Laurent polynomial plus an
// optional geometric tail  tail_coeff * sum_{k >= tail_start} (X/q)^k.
// Ramified characters always give a pure finite part.
struct GaussSumValue {
    const FieldConfig* cfg = nullptr; // needed to expand tail terms (q)
    CycloLaurent finite;
    Cyclo tail_coeff = Cyclo::zero();
    int tail_start = 0;

    bool has_tail() const { return !tail_coeff.is_zero(); }
    bool is_zero() const { return finite.is_zero() && !has_tail(); }
    bool operator==(const GaussSumValue& o) const;
    std::string str() const;
};

// integral over O of chi(x) psi(a x) dx, vol(O) = 1, chi(0) = 0.
//
// Three closely related normalizations are provided because the classical
// laws attach to different ones:
//  * gauss_sum            : integral over O (shells k >= 0).  Matches the
//                           exhaustive residue oracle; for ramified chi it
//                           is nonzero exactly when o(a) <= -conductor
//                           (the single shell k = -e - o(a) survives).
//  * gauss_sum_unit_shell : integral over the unit group O^x only (the
//                           k = 0 shell).  For ramified chi this is the
//                           version with support exactly at o(a) = -e.
//  * gauss_sum_principal  : principal-value integral over F (all shells
//                           k in Z, almost all vanishing).  This is the
//                           version satisfying the scaling law
//                           g(chi, psi_{ab}) = (nu chi)(b)^{-1} g(chi, psi_a)
//                           for every nonzero a, b.
// They agree whenever the surviving shell lies in the common domain.
GaussSumValue gauss_sum(const MultChar& chi, const AdditiveChar& psi,
                        const PadicScalar& a);
GaussSumValue gauss_sum_unit_shell(const MultChar& chi,
                                   const AdditiveChar& psi,
                                   const PadicScalar& a);
GaussSumValue gauss_sum_principal(const MultChar& chi,
                                  const AdditiveChar& psi,
                                  const PadicScalar& a);

// The single nonzero value for ramified chi: gauss_sum at a = p^{-e},
// which is a plain cyclotomic number (coefficient of X^0).
Cyclo gauss_sum_at_conductor(const MultChar& chi, const AdditiveChar& psi);

} // namespace shalika

#endif
