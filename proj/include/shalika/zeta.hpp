#ifndef SHALIKA_ZETA_HPP
#define SHALIKA_ZETA_HPP

// Zeta-series machinery: Borel coset enumeration (B_{m,k} and its
// first-row-pole variant), coefficient series assembly, the Schwartz
// blocks attached to a level and a character, an exact finite Fourier
// transform on matrix lattices with the substitution comparison for the
// dual block, and the four-stage averaging construction producing the
// normalized spherical-type evaluator J from a Shalika-extended form.
//
// Conventions.  n = 2m throughout; l = c - (m-1)e where c is the level
// and e the conductor of chi.  The additive Haar measure on M_d is
// self-dual with vol(M_d(O)) = 1; multiplicative averages are normalized
// to total mass 1 (so "integral over a compact group" means "average").
// All values are exact cyclotomic Laurent data; an evaluator answer that
// passed through an extension outside its domain is an explicit
// Indeterminate and poisons any coefficient it touches.

#include "shalika/characters.hpp"
#include "shalika/cyclo.hpp"
#include "shalika/hecke.hpp" // BudgetExceeded
#include "shalika/matgroup.hpp"
#include "shalika/matrix.hpp"
#include "shalika/mirabolic.hpp" // FormValue

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace shalika {

class NormalizationZero : public std::runtime_error {
public:
    explicit NormalizationZero(const std::string& what)
        : std::runtime_error(what) {}
};

class WindowTooSmall : public std::runtime_error {
public:
    explicit WindowTooSmall(const std::string& what)
        : std::runtime_error(what) {}
};

using FormEvaluator = std::function<FormValue(const MatF&)>;

// ---------------------------------------------------------------------
// Coefficient series in t = q^{-s+1/2}

struct QSeries {
    std::vector<CycloLaurent> coeff;  // c_0 .. c_kmax
    std::vector<bool> indeterminate;  // poisoned coefficients

    int kmax() const { return static_cast<int>(coeff.size()) - 1; }
    std::string str() const;
};

// ---------------------------------------------------------------------
// Borel cosets

enum class BmkVariant {
    Standard, // b upper triangular integral, o(det b) = k  (k >= 0)
    EVariant  // first row off-diagonal entries in p^{-lprime}, rest
              // integral, o(det b) = k
};

// Exact right-coset representatives of B_{m,k} modulo B_{m,0} (or the
// EVariant pair): upper triangular with diagonal p^{a_i}, sum a_i = k,
// entry (i, j) over p^{-s_i} O / p^{a_i - s_i} where s_i = lprime on the
// first row of the EVariant and 0 otherwise.  Throws BudgetExceeded when
// the count would exceed an internal cap.
std::vector<MatF> bmk_reps(const FieldConfig* cfg, int m, int k,
                           BmkVariant variant = BmkVariant::Standard,
                           int lprime = 0);

// c_k = sum over bmk_reps(m, k, ...) of ev(diag(b, 1_m)); an Indeterminate
// evaluator answer poisons the coefficient.
QSeries c_series(const FieldConfig* cfg, const FormEvaluator& ev, int m,
                 int kmax, BmkVariant variant = BmkVariant::Standard,
                 int lprime = 0);

// ---------------------------------------------------------------------
// Lattice ring patterns (n = 2m even; blocks A B / C D of size m)
//
//   R(c, e):  A, B integral; C rows above the last in p^e, last row in
//             p^l; D integral with last row (off-corner) in p^l.
//   R*(c, e): D integral with first column (below the corner) in p^l;
//             A, B integral with first column (below corner) in p^{l-e}
//             and first row (off corner) in p^{-(l-e)};
//             C first column in p^l, other columns in p^e.

bool in_ring_R(const MatF& x, int c, int e);
bool in_ring_R_star(const MatF& x, int c, int e);

// ---------------------------------------------------------------------
// Schwartz blocks

enum class SchwartzKind {
    CharR,           // characteristic function of R(c, e) on M_n
    CharRStar,       // characteristic function of R*(c, e) on M_n
    Chi0,            // chi_0 on M_1: Ch(x; O^x) chi(x)
    PhiChiCirc,      // on M_{m-1}: prod Ch(off-diag; O) prod chi_0(p^e x_ii)
    PhiChiL,         // on M_m: the SL_{m-1}(O)-averaged block with the
                     // (p^{-l})-column / O-row window and chi_0(p^e w)
    PhiC,            // on M_n: Ch(b-zeroed; R(c,e)) * PhiChiL(b);
                     // unramified chi degenerates to CharR
    PhiStarExplicit  // on M_n: the closed-form dual block (see impl)
};

struct SchwartzBlock {
    SchwartzKind kind = SchwartzKind::CharR;
    const FieldConfig* cfg = nullptr;
    int m = 1; // half size
    int c = 1; // level, c >= m e
    std::optional<MultChar> chi;
    std::optional<AdditiveChar> psi; // PhiStarExplicit (Gauss factor)
    int e_unramified = 0;            // pattern exponent when chi is absent

    int e() const { return chi ? chi->conductor() : e_unramified; }
    int l() const { return c - (m - 1) * e(); }
    int dim() const; // ambient matrix size

    static SchwartzBlock char_R(const FieldConfig* cfg, int m, int c, int e);
    static SchwartzBlock char_R_star(const FieldConfig* cfg, int m, int c,
                                     int e);
    static SchwartzBlock chi0(const MultChar& chi);
    static SchwartzBlock phi_chi_circ(const MultChar& chi, int m);
    static SchwartzBlock phi_chi_l(const MultChar& chi, int m, int c);
    static SchwartzBlock phi_c(const FieldConfig* cfg, int m, int c,
                               const std::optional<MultChar>& chi);
    static SchwartzBlock phi_star_explicit(const FieldConfig* cfg, int m,
                                           int c,
                                           const std::optional<MultChar>& chi,
                                           const AdditiveChar& psi);
};

CycloLaurent schwartz_eval(const SchwartzBlock& block, const MatF& x);

// ---------------------------------------------------------------------
// Finite Fourier transform on M_d lattices

// Functions are sampled on the cells of p^{-A} M_d / p^{B} M_d; `rule`
// is the exact pointwise function (kept for leakage probes and for
// evaluating transforms at off-lattice points).
struct LatticeWindow {
    int A = 0;
    int B = 1;
};

struct SampledFn {
    const FieldConfig* cfg = nullptr;
    int d = 1;
    LatticeWindow window;
    std::function<CycloLaurent(const MatF&)> rule;
    std::vector<CycloLaurent> values; // one per cell, row-major digits

    std::size_t cells() const;
    MatF cell_point(std::size_t idx) const;
    // value at an arbitrary point via the rule
    CycloLaurent at(const MatF& x) const { return rule(x); }
};

SampledFn sample_fn(const FieldConfig* cfg, int d, LatticeWindow window,
                    const std::function<CycloLaurent(const MatF&)>& rule);
SampledFn sample_block(const SchwartzBlock& block, LatticeWindow window);

// phi-sharp(x) = integral of phi(y) psi(tr(y x)) dy realized as the exact
// cell sum over f's window; the result is sampled on the dual window
// (A' = B, B' = A) and its rule evaluates the same sum at arbitrary
// points.  Probes f.rule outside the support window and across cell
// boundaries first; leakage raises WindowTooSmall.
SampledFn fourier(const SampledFn& f, const AdditiveChar& psi);

// The transform evaluated at a single point (no leakage probing).
CycloLaurent fourier_at(const SampledFn& f, const AdditiveChar& psi,
                        const MatF& x);

// ---------------------------------------------------------------------
// Dual-block comparison

// Computes phi-star(x) = phi-sharp_c(upsilon^{-1} x^t w_n) from the
// finite transform of the PhiC block and compares it pointwise against
// the PhiStarExplicit closed form over a scan of the dual window
// (exhaustive when the window has at most scan_budget cells, otherwise
// a deterministic pseudo-random sample of scan_budget points).  The two
// sides are compared by cross-multiplication, so no inversion of values
// is needed; PASS means a single global ratio explains every nonzero
// point and the supports agree exactly.
struct PhiStarReport {
    int points = 0;          // scan size
    int support_points = 0;  // points where either side is nonzero
    int mismatches = 0;      // support disagreements or ratio violations
    bool ratio_constant = false;
    CycloLaurent ratio_num;  // computed-side reference value
    CycloLaurent ratio_den;  // explicit-side reference value
    CycloLaurent ratio;      // ratio_num / ratio_den when invertible
    bool pass() const { return mismatches == 0 && ratio_constant; }
    std::string str() const;
};

PhiStarReport phi_star_compare(const FieldConfig* cfg, int m, int c,
                               const std::optional<MultChar>& chi,
                               const AdditiveChar& psi, LatticeWindow window,
                               std::size_t scan_budget = 20000);

// ---------------------------------------------------------------------
// The averaged evaluator and its dual

// Builds the four-stage averaging DAG on top of a Shalika-extended
// evaluator ev on G_n:
//   stage 1: average of chi(t)^{-1} ev(g diag(1_m, v_m(t))) over unit
//            tuples t mod p^e,
//   stage 2: right translate by diag(1_m, delta_m^{-1}),
//   stage 3: average over the compact block diag(1_m, [[u, x^t],[y, 1]])
//            (u over SL_{m-1}(O) at congruence depth (n-4)e, x integral
//            tuples mod p^{(m-2)e}, y over p^l / p^c),
//   stage 4: average over upper-right blocks x in M_m(O) mod p^{n-2},
// then divides by the value at 1_n.  Unramified chi: stages collapse and
// the result is ev normalized at 1_n.  Indeterminate answers poison the
// stage averages; a zero, Indeterminate, or non-constant value at 1_n
// raises NormalizationZero.  Stage values are memoized per point.
FormEvaluator j_pi_average(const FieldConfig* cfg, const FormEvaluator& ev,
                           const MultChar& chi, int c, int n);

// The dual evaluator g -> ev(w_n g^{-t} upsilon_c).
FormEvaluator j_pi_dual(const FieldConfig* cfg, const FormEvaluator& ev,
                        int m, int e, int c);

} // namespace shalika

#endif
