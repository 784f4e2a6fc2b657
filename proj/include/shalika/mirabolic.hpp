#ifndef SHALIKA_MIRABOLIC_HPP
#define SHALIKA_MIRABOLIC_HPP

// Compositional evaluator for the mirabolic-restriction forms.
//
// Forms are immutable DAG nodes:
//
//   XiLeaf(n)              the basic Whittaker-type function xi_n on P_n
//   PhiLift(child, l)      the lift phi^{(l)} of a form on P_n to P_{n+2}
//                          (supported on U * embedded-P_n * C_{n+2}(l))
//   Theta(child, chi, s,r) the theta integral at level r (an integral over
//                          a section of P_m\G_m times F^m, m = r/2 - 1)
//                          against the norm-twisted character nu^s chi
//   XiOp(child, r)         the Xi integral at level r (an F^{m-1} x F^{m-1}
//                          unipotent integral, m = r/2)
//   Translate(child, g)    left/right translate
//   SPExtend(child, chi)   extension from P_n to S_n P_n by the Shalika
//                          character chi_psi; outside S_n P_n the value is
//                          an explicit Indeterminate marker, never zero
//   ClosedForm(n, value)   a pinned constant reference value
//
// Integrals are realized as exact Riemann sums over truncated lattice
// grids.  All arithmetic is exact (rational points, cyclotomic values), so
// a vanishing shell sum is a proof that the shell contributes zero at the
// chosen mesh.
//
// Truncation policy.  Integrals over F^d are summed shell by shell in the
// pole depth of the integration variable.  Shells are certified: summation
// continues until `shell_depth` consecutive shells beyond the requested
// radius vanish exactly; if no such run appears before the hard cap
// (radius + shell_depth + 4), TruncationCapExceeded is raised.  The single
// documented exception is the first (y) variable of XiOp, which pairs with
// inner variables as a Fourier dual and is conditionally convergent: it is
// summed to the plain radius without shell certification, and exactness
// requires radius >= mesh (the dual cell size), which callers pin.
//
// Measure normalization.  The section integral over P_m\G_m is Lebesgue on
// the last-row section with vol(O^m) = 1 by default (LebesgueOOne); the
// alternative PKOne tag rescales so that the compact cell P_m\P_m K_m has
// mass 1.  The two conventions differ by the factor (1 - q^{-m}) per theta
// level; reports carry the tag because the source identities for the two
// conventions are mutually inconsistent (see the repository notes).

#include "shalika/characters.hpp"
#include "shalika/cyclo.hpp"
#include "shalika/matgroup.hpp"
#include "shalika/matrix.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace shalika {

enum class CosetMeasure {
    LebesgueOOne, // Lebesgue on the last-row section, vol(O^m) = 1
    PKOne         // rescaled so that the compact cell has mass 1
};

struct TruncationPolicy {
    int radius = 2;      // integration balls are p^{-radius} O
    int shell_depth = 2; // consecutive vanishing shells required beyond radius
    int mesh = 2;        // grid cells are cosets of p^{mesh} O
    CosetMeasure measure = CosetMeasure::LebesgueOOne;

    std::string key() const;
};

// Value of a form at a point; `indeterminate` marks a value that passed
// through SPExtend outside its domain of definition.
struct FormValue {
    bool indeterminate = false;
    CycloLaurent value;

    static FormValue indet() { return FormValue{true, CycloLaurent::zero()}; }
    static FormValue of(const CycloLaurent& v) { return FormValue{false, v}; }
};

class FormNode;
using FormPtr = std::shared_ptr<const FormNode>;

class FormNode {
public:
    enum class Kind { XiLeaf, PhiLift, Theta, XiOp, Translate, SPExtend,
                      ClosedForm };

    static FormPtr xi_leaf(const FieldConfig* cfg, int n);
    // l >= 0; the child must live on P_n, the lift lives on P_{n+2}.
    static FormPtr phi_lift(FormPtr child, int l);
    // theta at acting level r (4 <= r <= child level, even), with the
    // character nu^{norm_twist} chi.
    static FormPtr theta(FormPtr child, const MultChar& chi, int norm_twist,
                         int r);
    // Xi at acting level r (4 <= r <= child level, even).
    static FormPtr xi_op(FormPtr child, int r);
    enum class Side { Left, Right };
    static FormPtr translate(FormPtr child, const MatF& g, Side side);
    static FormPtr sp_extend(FormPtr child, const MultChar& chi);
    static FormPtr closed_form(const FieldConfig* cfg, int n,
                               const CycloLaurent& value);

    Kind kind() const { return kind_; }
    int level() const { return level_; }
    const FieldConfig* config() const { return cfg_; }

    // Whether the form is provably invariant under right translation by
    // P_level(O) (enables coset memoization at integral nodes).
    bool right_pk_invariant() const { return right_pk_invariant_; }

    FormValue evaluate(const MatF& point, const TruncationPolicy& pol) const;

private:
    FormNode() = default;

    FormValue eval_xi_leaf(const MatF& p) const;
    FormValue eval_phi_lift(const MatF& p, const TruncationPolicy& pol) const;
    FormValue eval_theta(const MatF& p, const TruncationPolicy& pol) const;
    FormValue eval_xi_op(const MatF& p, const TruncationPolicy& pol) const;

    Kind kind_ = Kind::XiLeaf;
    int level_ = 0;
    const FieldConfig* cfg_ = nullptr;
    FormPtr child_;
    int l_ = 0;                        // PhiLift
    std::optional<MultChar> chi_;      // Theta / SPExtend
    int norm_twist_ = 0;               // Theta
    int r_ = 0;                        // Theta / XiOp acting level
    std::optional<MatF> g_;            // Translate
    Side side_ = Side::Left;           // Translate
    CycloLaurent const_value_;         // ClosedForm
    bool right_pk_invariant_ = false;

    mutable std::mutex mu_;
    mutable std::map<std::string, FormValue> cache_;
};

// xi_n at g in P_n: nonzero exactly when the Iwasawa diagonal of g is a
// unit diagonal, with value psi(sum of superdiagonal entries of the
// unipotent part).
CycloLaurent xi_eval(const MatF& g);

// The essential form J(n, chi) built by the two-step recursion
// J(n) = Theta(PhiLift(J(n-2), 0), nu chi, n), J(2) = xi_2 (each descent
// step also twists the recursive character by nu).
FormPtr essential_form(int n, const MultChar& chi);

// The tower form: all lifts first (giving xi_n), then the theta chain from
// level 4 up to level n with matching norm twists.  Evaluates identically
// to essential_form (a tested invariant).
FormPtr lambda_tower_form(int n, const MultChar& chi);

// Omega_n = XiOp(4) o ... o XiOp(n) applied to a form on P_n.
FormPtr omega_apply(int n, FormPtr form);

// Membership of g in the predicted support double coset
// S_n-circ * embed(v# d#) * P_n(O) (with e = conductor of chi; e = 0 uses
// the same coset, which collapses to S-circ P(O) on unit-determinant g),
// with an exact witness g = s * p on success.
struct SupportResult {
    bool in_support = false;
    std::optional<SPFactor> witness;
};
SupportResult support_test(const MultChar& chi, const MatF& g);

// The Shalika character chi_psi on s = [[a, b], [0, a]]:
// chi(det a) psi(tr(a^{-1} b)).
CycloLaurent shalika_character(const MultChar& chi, const MatF& s);

// -------------------------------------------------------------------
// Grid helpers (also used by tests and the CLI verifiers)

// Representatives of (p^{lo} O)^m modulo p^{t} O^m (t > lo); each stands
// for a cell of volume q^{-m t}.
std::vector<std::vector<PadicScalar>> box_representatives(
    const FieldConfig* cfg, int m, int lo, int t);

// Representatives of the valuation shell { x in (p^v O)^m : some
// coordinate has valuation exactly v } modulo p^{t} O^m.
std::vector<std::vector<PadicScalar>> shell_representatives(
    const FieldConfig* cfg, int m, int v, int t);

// Riemann sum of f over (p^{lo} O)^m at mesh t, Lebesgue with vol(O^m) = 1.
CycloLaurent box_integral(
    const FieldConfig* cfg, int m, int lo, int t,
    const std::function<CycloLaurent(const std::vector<PadicScalar>&)>& f);

// Integral of f over the primitive vectors of O^m (at least one unit
// coordinate), Lebesgue, sampled at mesh t.
CycloLaurent primitive_sector_integral(
    const FieldConfig* cfg, int m, int t,
    const std::function<CycloLaurent(const std::vector<PadicScalar>&)>& f);

} // namespace shalika

#endif
