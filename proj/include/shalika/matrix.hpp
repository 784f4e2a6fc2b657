#ifndef SHALIKA_MATRIX_HPP
#define SHALIKA_MATRIX_HPP

// Dense square matrices over the local field (entries PadicScalar) with
// the exact linear algebra this project needs: products, inverses and
// determinants by fraction-free Gaussian elimination with minimal-
// valuation pivoting, and the lattice normal forms (column Hermite form,
// Smith form) used for Iwasawa/Cartan decompositions and canonical coset
// representatives.

#include "shalika/padic.hpp"

#include <string>
#include <vector>

namespace shalika {

class MatF {
public:
    MatF(const FieldConfig* cfg, int r); // zero matrix
    static MatF identity(const FieldConfig* cfg, int r);
    static MatF diagonal(const std::vector<PadicScalar>& d);
    // diag(p^{f_1}, ..., p^{f_r})
    static MatF uniformizer_diag(const FieldConfig* cfg,
                                 const std::vector<int>& f);
    // Permutation matrix P_w with (P g P^{-1})_{ij} = g_{w(i), w(j)}
    // (w given 0-based: w[i] = image of i).
    static MatF permutation(const FieldConfig* cfg,
                            const std::vector<int>& w);

    const FieldConfig* config() const { return cfg_; }
    int size() const { return r_; }

    const PadicScalar& at(int i, int j) const;  // 0-based
    void set(int i, int j, const PadicScalar& v);

    MatF operator*(const MatF& o) const;
    MatF operator+(const MatF& o) const;
    MatF operator-() const;
    MatF transpose() const;
    MatF inverse() const;     // throws Singular via std::domain_error
    PadicScalar det() const;
    PadicScalar trace() const;

    bool equals(const MatF& o) const;
    bool is_identity() const;

    // All entries integral.
    bool is_integral() const;
    // g in K_r: integral with unit determinant.
    bool in_K() const;
    // g in K_r^1 = SL_r(O): integral with det = 1.
    bool in_K1() const;

    // diag(g, 1_l): embed into a larger group fixing the tail coordinates.
    MatF embed(int l) const;
    // top-left leading principal block of size s.
    MatF leading_block(int s) const;
    // arbitrary block copy
    MatF block(int i0, int j0, int h) const;
    void set_block(int i0, int j0, const MatF& b);

    std::string str() const;

private:
    const FieldConfig* cfg_;
    int r_;
    std::vector<PadicScalar> a_;
};

// Column Hermite normal form over the valuation ring: returns (H, k) with
// g * k = H, k in K_r, H upper triangular with pivots p^{a_i} on the
// diagonal and entries to the right of each pivot reduced modulo the
// pivot.  H is the canonical representative of the right coset g K_r.
struct HermiteResult {
    MatF H;
    MatF k;
};
HermiteResult hermite_column(const MatF& g);

// Iwasawa decomposition g = b * k, b upper triangular, k in K_r.
struct IwasawaResult {
    MatF b;
    MatF k;
};
IwasawaResult iwasawa(const MatF& g);

// Cartan decomposition g = k1 * p^f * k2 with f descending (Smith normal
// form over the valuation ring).
struct CartanResult {
    MatF k1;
    std::vector<int> f;
    MatF k2;
};
CartanResult cartan(const MatF& g);

// Stable string key of the canonical representative of g K_r (used for
// memoization and coset dedup).
std::string coset_key(const MatF& g);

} // namespace shalika

#endif
