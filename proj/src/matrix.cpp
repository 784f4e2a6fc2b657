#include "shalika/matrix.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace shalika {

namespace {

// Canonical representative of x modulo p^a O, for x of any valuation:
// zero if o(x) >= a, otherwise p^{o(x)} * (unit part mod p^{a - o(x)}).
// Returns (rep, quotient) with x = rep + quotient * p^a, quotient integral.
std::pair<PadicScalar, PadicScalar> reduce_mod_ideal(const PadicScalar& x,
                                                     int a) {
    const FieldConfig* cfg = x.config();
    PadicScalar pa = PadicScalar::uniformizer_pow(cfg, a);
    if (x.in_ideal(a)) return {PadicScalar(cfg), x / pa};
    int v = x.valuation();
    int digits = a - v;
    if (digits > x.rel_prec())
        throw PrecisionExhausted("reduce_mod_ideal: unit part not known to "
                                 "the required depth");
    std::uint64_t m = x.unit() % cfg->p_pow(digits);
    PadicScalar rep = PadicScalar::from_int(cfg, static_cast<long long>(m)) *
                      PadicScalar::uniformizer_pow(cfg, v);
    return {rep, (x - rep) / pa};
}

} // namespace

MatF::MatF(const FieldConfig* cfg, int r)
    : cfg_(cfg), r_(r), a_(static_cast<size_t>(r) * r, PadicScalar(cfg)) {
    if (r <= 0) throw std::invalid_argument("MatF: size must be positive");
}

MatF MatF::identity(const FieldConfig* cfg, int r) {
    MatF m(cfg, r);
    for (int i = 0; i < r; ++i) m.set(i, i, PadicScalar::one(cfg));
    return m;
}

MatF MatF::diagonal(const std::vector<PadicScalar>& d) {
    if (d.empty()) throw std::invalid_argument("MatF::diagonal: empty");
    MatF m(d[0].config(), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i)
        m.set(static_cast<int>(i), static_cast<int>(i), d[i]);
    return m;
}

MatF MatF::uniformizer_diag(const FieldConfig* cfg,
                            const std::vector<int>& f) {
    std::vector<PadicScalar> d;
    d.reserve(f.size());
    for (int fi : f) d.push_back(PadicScalar::uniformizer_pow(cfg, fi));
    return diagonal(d);
}

MatF MatF::permutation(const FieldConfig* cfg, const std::vector<int>& w) {
    int r = static_cast<int>(w.size());
    MatF m(cfg, r);
    for (int i = 0; i < r; ++i) {
        if (w[i] < 0 || w[i] >= r)
            throw std::invalid_argument("MatF::permutation: out of range");
        m.set(i, w[i], PadicScalar::one(cfg));
    }
    return m;
}

const PadicScalar& MatF::at(int i, int j) const {
    if (i < 0 || i >= r_ || j < 0 || j >= r_)
        throw std::out_of_range("MatF::at");
    return a_[static_cast<size_t>(i) * r_ + j];
}

void MatF::set(int i, int j, const PadicScalar& v) {
    if (i < 0 || i >= r_ || j < 0 || j >= r_)
        throw std::out_of_range("MatF::set");
    a_[static_cast<size_t>(i) * r_ + j] = v;
}

MatF MatF::operator*(const MatF& o) const {
    if (r_ != o.r_ || cfg_ != o.cfg_)
        throw std::invalid_argument("MatF: size/config mismatch in product");
    MatF out(cfg_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) {
            PadicScalar s(cfg_);
            for (int k = 0; k < r_; ++k) {
                const PadicScalar& x = at(i, k);
                const PadicScalar& y = o.at(k, j);
                if (x.is_zero() || y.is_zero()) continue;
                PadicScalar t = x * y;
                s = s.is_zero() ? t : s + t;
            }
            out.set(i, j, s);
        }
    return out;
}

MatF MatF::operator+(const MatF& o) const {
    if (r_ != o.r_ || cfg_ != o.cfg_)
        throw std::invalid_argument("MatF: size/config mismatch in sum");
    MatF out(cfg_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) {
            const PadicScalar& x = at(i, j);
            const PadicScalar& y = o.at(i, j);
            if (x.is_zero())
                out.set(i, j, y);
            else if (y.is_zero())
                out.set(i, j, x);
            else
                out.set(i, j, x + y);
        }
    return out;
}

MatF MatF::operator-() const {
    MatF out(cfg_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) out.set(i, j, -at(i, j));
    return out;
}

MatF MatF::transpose() const {
    MatF out(cfg_, r_);
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) out.set(j, i, at(i, j));
    return out;
}

namespace {

// Row-reduction workhorse shared by inverse() and det(): eliminates A in
// place with minimal-valuation pivoting, applying the same row operations
// to the companion matrix (if any).  Returns det(A).
PadicScalar row_reduce(MatF& A, MatF* companion) {
    const FieldConfig* cfg = A.config();
    int r = A.size();
    PadicScalar d = PadicScalar::one(cfg);
    for (int col = 0; col < r; ++col) {
        int piv = -1;
        int best = 0;
        for (int i = col; i < r; ++i) {
            const PadicScalar& x = A.at(i, col);
            if (x.is_zero()) continue;
            if (piv < 0 || x.valuation() < best) {
                piv = i;
                best = x.valuation();
            }
        }
        if (piv < 0) throw std::domain_error("MatF: singular matrix");
        if (piv != col) {
            for (int j = 0; j < r; ++j) {
                PadicScalar t = A.at(col, j);
                A.set(col, j, A.at(piv, j));
                A.set(piv, j, t);
                if (companion) {
                    PadicScalar u = companion->at(col, j);
                    companion->set(col, j, companion->at(piv, j));
                    companion->set(piv, j, u);
                }
            }
            d = -d;
        }
        PadicScalar pivot = A.at(col, col);
        d = d * pivot;
        PadicScalar inv = pivot.inverse();
        for (int j = 0; j < r; ++j) {
            if (!A.at(col, j).is_zero()) A.set(col, j, A.at(col, j) * inv);
            if (companion && !companion->at(col, j).is_zero())
                companion->set(col, j, companion->at(col, j) * inv);
        }
        for (int i = 0; i < r; ++i) {
            if (i == col) continue;
            PadicScalar c = A.at(i, col);
            if (c.is_zero()) continue;
            for (int j = 0; j < r; ++j) {
                if (!A.at(col, j).is_zero()) {
                    PadicScalar delta = c * A.at(col, j);
                    // Pivot column clears exactly; elsewhere cancellation
                    // may strip digits but stays honest.
                    if (j == col)
                        A.set(i, j, PadicScalar(cfg));
                    else
                        A.set(i, j, A.at(i, j).is_zero()
                                        ? -delta
                                        : A.at(i, j) - delta);
                }
                if (companion && !companion->at(col, j).is_zero()) {
                    PadicScalar delta = c * companion->at(col, j);
                    companion->set(i, j, companion->at(i, j).is_zero()
                                             ? -delta
                                             : companion->at(i, j) - delta);
                }
            }
        }
    }
    return d;
}

} // namespace

MatF MatF::inverse() const {
    MatF A = *this;
    MatF inv = identity(cfg_, r_);
    row_reduce(A, &inv);
    return inv;
}

PadicScalar MatF::det() const {
    MatF A = *this;
    try {
        return row_reduce(A, nullptr);
    } catch (const std::domain_error&) {
        return PadicScalar(cfg_);
    }
}

PadicScalar MatF::trace() const {
    PadicScalar s(cfg_);
    for (int i = 0; i < r_; ++i) {
        if (at(i, i).is_zero()) continue;
        s = s.is_zero() ? at(i, i) : s + at(i, i);
    }
    return s;
}

bool MatF::equals(const MatF& o) const {
    if (r_ != o.r_ || cfg_ != o.cfg_) return false;
    for (int i = 0; i < r_; ++i)
        for (int j = 0; j < r_; ++j) {
            const PadicScalar& x = at(i, j);
            const PadicScalar& y = o.at(i, j);
            if (x.is_zero() != y.is_zero()) return false;
            if (!x.is_zero() && !x.equals(y)) return false;
        }
    return true;
}

bool MatF::is_identity() const { return equals(identity(cfg_, r_)); }

bool MatF::is_integral() const {
    for (const PadicScalar& x : a_)
        if (!x.is_integral()) return false;
    return true;
}

bool MatF::in_K() const { return is_integral() && det().is_unit(); }

bool MatF::in_K1() const {
    if (!is_integral()) return false;
    PadicScalar d = det();
    return !d.is_zero() && d.equals(PadicScalar::one(cfg_));
}

MatF MatF::embed(int l) const {
    MatF out = identity(cfg_, r_ + l);
    out.set_block(0, 0, *this);
    return out;
}

MatF MatF::leading_block(int s) const { return block(0, 0, s); }

MatF MatF::block(int i0, int j0, int h) const {
    if (i0 < 0 || j0 < 0 || i0 + h > r_ || j0 + h > r_)
        throw std::out_of_range("MatF::block");
    MatF out(cfg_, h);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) out.set(i, j, at(i0 + i, j0 + j));
    return out;
}

void MatF::set_block(int i0, int j0, const MatF& b) {
    if (i0 < 0 || j0 < 0 || i0 + b.r_ > r_ || j0 + b.r_ > r_)
        throw std::out_of_range("MatF::set_block");
    for (int i = 0; i < b.r_; ++i)
        for (int j = 0; j < b.r_; ++j) set(i0 + i, j0 + j, b.at(i, j));
}

std::string MatF::str() const {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < r_; ++i) {
        os << (i ? "; " : "");
        for (int j = 0; j < r_; ++j)
            os << (j ? ", " : "") << at(i, j).str();
    }
    os << "]";
    return os.str();
}

HermiteResult hermite_column(const MatF& g) {
    const FieldConfig* cfg = g.config();
    int r = g.size();
    MatF H = g;
    MatF k = MatF::identity(cfg, r);

    auto swap_cols = [&](MatF& m, int a, int b) {
        for (int i = 0; i < r; ++i) {
            PadicScalar t = m.at(i, a);
            m.set(i, a, m.at(i, b));
            m.set(i, b, t);
        }
    };
    auto scale_col = [&](MatF& m, int j, const PadicScalar& c) {
        for (int i = 0; i < r; ++i)
            if (!m.at(i, j).is_zero()) m.set(i, j, m.at(i, j) * c);
    };
    // col_j += c * col_i, optionally skipping one row whose new value is
    // known by construction (avoids computing an exact cancellation,
    // which the scalar layer refuses to round to zero).
    auto add_col = [&](MatF& m, int j, int i, const PadicScalar& c,
                       int skip_row) {
        for (int t = 0; t < r; ++t) {
            if (t == skip_row) continue;
            if (m.at(t, i).is_zero()) continue;
            PadicScalar delta = c * m.at(t, i);
            m.set(t, j, m.at(t, j).is_zero() ? delta : m.at(t, j) + delta);
        }
    };

    // Triangularize from the bottom row up.
    for (int i = r - 1; i >= 0; --i) {
        int piv = -1;
        int best = 0;
        for (int j = 0; j <= i; ++j) {
            const PadicScalar& x = H.at(i, j);
            if (x.is_zero()) continue;
            if (piv < 0 || x.valuation() < best) {
                piv = j;
                best = x.valuation();
            }
        }
        if (piv < 0)
            throw std::domain_error("hermite_column: singular matrix");
        if (piv != i) {
            swap_cols(H, piv, i);
            swap_cols(k, piv, i);
        }
        // Normalize the pivot to p^{a_i}.
        PadicScalar unit_inv =
            (PadicScalar::uniformizer_pow(cfg, best) / H.at(i, i));
        scale_col(H, i, unit_inv);
        scale_col(k, i, unit_inv);
        for (int j = 0; j < i; ++j) {
            if (H.at(i, j).is_zero()) continue;
            // After normalization H(i,i) = p^best exactly, so the
            // coefficient is integral by minimality of the pivot.
            PadicScalar c = -(H.at(i, j) /
                              PadicScalar::uniformizer_pow(cfg, best));
            if (!c.is_integral())
                throw std::logic_error("hermite_column: non-integral "
                                       "elimination coefficient");
            add_col(H, j, i, c, i);
            add_col(k, j, i, c, -1);
            // The operation cancels the entry by construction.
            H.set(i, j, PadicScalar(cfg));
        }
    }
    // Reduce entries to the right of each pivot modulo the pivot.
    for (int j = r - 1; j >= 1; --j) {
        for (int i = j - 1; i >= 0; --i) {
            int a = H.at(i, i).valuation();
            auto [rep, quot] = reduce_mod_ideal(H.at(i, j), a);
            if (quot.is_zero()) continue;
            add_col(H, j, i, -quot, i);
            add_col(k, j, i, -quot, -1);
            H.set(i, j, rep);
        }
    }
    if (!k.in_K())
        throw std::logic_error("hermite_column: transform left K");
    return {H, k};
}

IwasawaResult iwasawa(const MatF& g) {
    HermiteResult h = hermite_column(g);
    return {h.H, h.k.inverse()};
}

CartanResult cartan(const MatF& g) {
    const FieldConfig* cfg = g.config();
    int r = g.size();
    MatF A = g;
    MatF L = MatF::identity(cfg, r); // g = L * A * R throughout
    MatF R = MatF::identity(cfg, r);

    auto swap_rows = [&](int a, int b) {
        for (int j = 0; j < r; ++j) {
            PadicScalar t = A.at(a, j);
            A.set(a, j, A.at(b, j));
            A.set(b, j, t);
        }
        for (int i = 0; i < r; ++i) { // L -> L * swap
            PadicScalar t = L.at(i, a);
            L.set(i, a, L.at(i, b));
            L.set(i, b, t);
        }
    };
    auto swap_cols = [&](int a, int b) {
        for (int i = 0; i < r; ++i) {
            PadicScalar t = A.at(i, a);
            A.set(i, a, A.at(i, b));
            A.set(i, b, t);
        }
        for (int j = 0; j < r; ++j) { // R -> swap * R
            PadicScalar t = R.at(a, j);
            R.set(a, j, R.at(b, j));
            R.set(b, j, t);
        }
    };
    // row_i -= c * row_s applied to A means L gains +c: L -> L * E(s,i,c).
    // Column s cancels by construction and is set explicitly by the
    // caller (the scalar layer refuses to round an exact cancellation).
    auto clear_row = [&](int s, int i, const PadicScalar& c) {
        for (int j = 0; j < r; ++j) {
            if (j == s) continue;
            if (A.at(s, j).is_zero()) continue;
            PadicScalar delta = c * A.at(s, j);
            A.set(i, j, A.at(i, j).is_zero() ? -delta : A.at(i, j) - delta);
        }
        for (int t = 0; t < r; ++t) {
            if (L.at(t, i).is_zero()) continue;
            PadicScalar delta = c * L.at(t, i);
            L.set(t, s, L.at(t, s).is_zero() ? delta : L.at(t, s) + delta);
        }
    };
    auto clear_col = [&](int s, int j, const PadicScalar& c) {
        for (int i = 0; i < r; ++i) {
            if (i == s) continue;
            if (A.at(i, s).is_zero()) continue;
            PadicScalar delta = A.at(i, s) * c;
            A.set(i, j, A.at(i, j).is_zero() ? -delta : A.at(i, j) - delta);
        }
        for (int t = 0; t < r; ++t) {
            if (R.at(j, t).is_zero()) continue;
            PadicScalar delta = c * R.at(j, t);
            R.set(s, t, R.at(s, t).is_zero() ? delta : R.at(s, t) + delta);
        }
    };

    for (int s = 0; s < r; ++s) {
        int bi = -1, bj = -1, best = 0;
        for (int i = s; i < r; ++i)
            for (int j = s; j < r; ++j) {
                const PadicScalar& x = A.at(i, j);
                if (x.is_zero()) continue;
                if (bi < 0 || x.valuation() < best) {
                    bi = i;
                    bj = j;
                    best = x.valuation();
                }
            }
        if (bi < 0) throw std::domain_error("cartan: singular matrix");
        if (bi != s) swap_rows(bi, s);
        if (bj != s) swap_cols(bj, s);
        // Normalize the pivot unit into R: col_s *= u^{-1} means
        // A -> A * D, R -> D^{-1} R.
        PadicScalar u = A.at(s, s) / PadicScalar::uniformizer_pow(cfg, best);
        PadicScalar ui = u.inverse();
        for (int i = 0; i < r; ++i)
            if (!A.at(i, s).is_zero()) A.set(i, s, A.at(i, s) * ui);
        for (int t = 0; t < r; ++t)
            if (!R.at(s, t).is_zero()) R.set(s, t, R.at(s, t) * u);
        for (int i = s + 1; i < r; ++i) {
            if (A.at(i, s).is_zero()) continue;
            PadicScalar c = A.at(i, s) / A.at(s, s);
            clear_row(s, i, c);
            A.set(i, s, PadicScalar(cfg));
        }
        for (int j = s + 1; j < r; ++j) {
            if (A.at(s, j).is_zero()) continue;
            PadicScalar c = A.at(s, j) / A.at(s, s);
            clear_col(s, j, c);
            A.set(s, j, PadicScalar(cfg));
        }
    }

    std::vector<int> f(r);
    for (int i = 0; i < r; ++i) f[i] = A.at(i, i).valuation();
    // Sort f descending with a permutation applied to both sides:
    // A = P^{-1} (P A P^{-1}) P with P A P^{-1} = diag(f o sigma).
    std::vector<int> order(r);
    for (int i = 0; i < r; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return f[a] > f[b]; });
    MatF P = MatF::permutation(cfg, order);
    std::vector<int> fs(r);
    for (int i = 0; i < r; ++i) fs[i] = f[order[i]];
    MatF k1 = L * P.inverse();
    MatF k2 = P * R;
    if (!k1.in_K() || !k2.in_K())
        throw std::logic_error("cartan: transforms left K");
    return {k1, fs, k2};
}

std::string coset_key(const MatF& g) {
    HermiteResult h = hermite_column(g);
    std::ostringstream os;
    int r = g.size();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            const PadicScalar& x = h.H.at(i, j);
            if (x.is_zero()) {
                os << "z|";
            } else {
                int v = x.valuation();
                int digits = std::min(x.rel_prec(),
                                      g.config()->precision());
                os << v << ":" << x.unit() % g.config()->p_pow(digits)
                   << "|";
            }
        }
    return os.str();
}

} // namespace shalika
