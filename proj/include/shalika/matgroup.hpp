#ifndef SHALIKA_MATGROUP_HPP
#define SHALIKA_MATGROUP_HPP

// Matrix-group layer: the named subgroups and special elements of the
// construction, membership predicates, and the structural decompositions
// (sorting permutation sigma, truncation set tau, the lower/upper
// triangular-times-compact decomposition of u_x / ubar_x, and the
// Shalika-times-mirabolic factorization).

#include "shalika/matrix.hpp"

#include <optional>
#include <vector>

namespace shalika {

// ---------------------------------------------------------------------
// Subgroup membership

enum class Subgroup {
    K,            // GL_r(O)
    K1,           // SL_r(O)
    Gamma,        // k in K_r with k_{r,j} in p^c O for j < r
    P_integral,   // P_r(O): mirabolic (last row e_r) with unit det, integral
    C,            // C_r(c): p in P_r(O), p = 1 mod p^c
    S,            // Shalika group (r = 2m): [[a, b], [0, a]]
    S_circ,       // S intersect P_r
    S_circ_star,  // S intersect P_r^*
    P_star,       // P_r^*: last row e_r and unit det
    P_plain,      // P_r: last row e_r (no integrality)
    H,            // (K_r^1)^{p^f}: conjugate of SL_r(O) by diag(p^f)
    KfrakC,       // unit group of the order R_c (r = 2m, params c, e)
    KfrakC_star,  // unit group of the conjugate order R*_c
    B_pattern,    // integral upper triangular with o(det) = k
    Be_pattern    // upper triangular: det in p^k O^x, first row off-diagonal
                  // entries in p^{-lprime} O, rest integral
};

struct SubgroupDescriptor {
    Subgroup kind;
    int c = 0;            // Gamma / C / KfrakC conductor
    int e = 0;            // KfrakC ramification exponent
    int k = 0;            // B patterns: valuation of det
    int lprime = 0;       // Be pattern: pole depth of the first row
    std::vector<int> f;   // H(f)
};

bool subgroup_member(const MatF& g, const SubgroupDescriptor& d);

// ---------------------------------------------------------------------
// Special elements (all entries exact)

// u(x) in G_{r+1}: identity with column x above the last diagonal entry.
MatF elem_u(const FieldConfig* cfg, const std::vector<PadicScalar>& x);
// ubar(x) in G_{r+1}: identity with row x left of the last diagonal entry.
MatF elem_ubar(const FieldConfig* cfg, const std::vector<PadicScalar>& x);

// The support matrix g_n (n = 2m even): upper-left m x m block
// diag(p^e, p^{3e}, ..., p^{(2m-3)e}) with last column
// (1, p^e, ..., p^{(m-2)e}, p^{(m-1)e}); lower-right 1_m.
MatF elem_g_n(const FieldConfig* cfg, int n, int e);

// delta_m = diag(p^e, p^{3e}, ..., p^{(2m-3)e}, p^{(m-1)e}) (1 for m = 1).
MatF elem_delta(const FieldConfig* cfg, int m, int e);
// delta_m-sharp = diag(1, p^{2e}, ..., p^{2(m-1)e}).
MatF elem_delta_sharp(const FieldConfig* cfg, int m, int e);
// v_m = u((p^{-(m-1)e}, ..., p^{-e})) in U_m.
MatF elem_v(const FieldConfig* cfg, int m, int e);
// v_m-sharp = ubar((p^{(m-1)e}, ..., p^{e})) in Ubar_m.
MatF elem_v_sharp(const FieldConfig* cfg, int m, int e);

// upsilon_c in G_n (n = 2m): blockdiag(diag(p^l, p^e 1_{m-1}), w_m) with
// l = c - (m-1)e.
MatF elem_upsilon(const FieldConfig* cfg, int m, int e, int c);

// The shuffle h in G_{sz}: 1..m fixed, m+1 -> 2m+1, m+j -> m+j-1 for
// j >= 2 (as a permutation matrix; sz = n+1 = 2m+1 in its main use).
MatF elem_h_perm(const FieldConfig* cfg, int sz, int m);

// s_j in G_m: the transposition of positions j+1 and m (0 <= j <= m-2).
MatF elem_s_j(const FieldConfig* cfg, int m, int j);

// Antidiagonal w_m (1's on the antidiagonal).
MatF elem_w_anti(const FieldConfig* cfg, int m);

// A_w(t) in G_m: identity with last row (p^{(m-w(1))e} t_1, ...,
// p^{(m-w(m))e} t_m); w is 1-based with w[j-1] = w(j), t_i units.
MatF elem_A_w(const FieldConfig* cfg, int e, const std::vector<int>& w,
              const std::vector<PadicScalar>& t);

// ---------------------------------------------------------------------
// sigma / tau / d data of a vector x in F^r relative to exponents f

struct SigmaTau {
    // sigma[i] = 0-based original index occupying sorted position i;
    // valuations weakly decrease along sorted positions (zero sorts
    // first), ties keep original order.
    std::vector<int> sigma;
    // tau as a set of sorted positions (0-based, increasing).
    std::vector<int> tau;
    // x(tau)*: entrywise inverse of the projection of x to sigma(tau)
    // (original indexing; zeros elsewhere).
    std::vector<PadicScalar> x_tau_star;
    // diag of d(x(tau)), length r+1.
    std::vector<PadicScalar> d;
};

SigmaTau sigma_tau(const std::vector<PadicScalar>& x,
                   const std::vector<int>& f);

// ---------------------------------------------------------------------
// Triangular decomposition of u_x / ubar_x

enum class LstSide { Lower, Upper };

// Lower: ubar(x) = h * u(x(tau)*) * d(x(tau)) * k  with
//        h in embedded H_f and k in SL_{r+1}(O).
// Upper: u(x) = h * ubar(x(tau)*) * d(x(tau))^{-1} * k with
//        h in embedded H_{-f} and k in SL_{r+1}(O).
// All four factors are (r+1) x (r+1); the product is exact.
struct LstResult {
    MatF h;
    MatF u;
    MatF d;
    MatF k;
    SigmaTau st;
};

LstResult lst_decompose(const std::vector<PadicScalar>& x,
                        const std::vector<int>& f, LstSide side);

// ---------------------------------------------------------------------
// Shalika * mirabolic factorization

// g = s * p with s = blockdiag-type [[a, 0], [0, a]] in S_n and p in P_n,
// when g lies in S_n P_n; nullopt otherwise.  n = g.size() must be even.
struct SPFactor {
    MatF s;
    MatF p;
};

std::optional<SPFactor> factor_s_p(const MatF& g);

// Decide membership in the double coset
//   S_n-circ * embed(v_m-sharp delta_m-sharp) * P_n(O)   (n = 2m)
// and exhibit a witness: on success g = s * embed(v# d#) * k with
// s in S_n-circ and k in P_n(O).  The construction is exact: the bottom
// rows of g determine the Shalika block up to a P_m(O)-ambiguity, which
// is resolved by matching the column lattice of the upper-left block
// against that of v# d# inside the lattice stabilizer.
std::optional<SPFactor> sharp_coset_decompose(const MatF& g, int e);

} // namespace shalika

#endif
