#include "shalika/matgroup.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace shalika {

namespace {

int ord_or_inf(const PadicScalar& x) {
    return x.is_zero() ? INT_MAX : x.valuation();
}

// Sorting permutation: valuations weakly decreasing along sorted
// positions (zero counts as +infinity and sorts first); ties keep the
// original index order.
std::vector<int> sort_perm(const std::vector<PadicScalar>& x) {
    std::vector<int> s(x.size());
    std::iota(s.begin(), s.end(), 0);
    std::stable_sort(s.begin(), s.end(), [&](int a, int b) {
        return ord_or_inf(x[a]) > ord_or_inf(x[b]);
    });
    return s;
}

PadicScalar hat(const PadicScalar& z) {
    return z.is_zero() ? PadicScalar::one(z.config()) : z;
}

bool is_e_last_row(const MatF& g) {
    int r = g.size();
    for (int j = 0; j + 1 < r; ++j)
        if (!g.at(r - 1, j).is_zero()) return false;
    return g.at(r - 1, r - 1).equals(PadicScalar::one(g.config()));
}

// p^{-f} g p^{f} (conjugation by a uniformizer-power diagonal).
MatF pi_conj(const MatF& g, const std::vector<int>& f, int sign) {
    const FieldConfig* cfg = g.config();
    int r = g.size();
    MatF out(cfg, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            if (g.at(i, j).is_zero()) continue;
            out.set(i, j,
                    g.at(i, j) * PadicScalar::uniformizer_pow(
                                     cfg, sign * (f[j] - f[i])));
        }
    return out;
}

bool in_shalika(const MatF& g) {
    int r = g.size();
    if (r % 2 != 0) return false;
    int m = r / 2;
    MatF A = g.block(0, 0, m);
    MatF C = g.block(m, 0, m);
    MatF D = g.block(m, m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (!C.at(i, j).is_zero()) return false;
    if (!A.equals(D)) return false;
    return !A.det().is_zero();
}

// Membership in the order R_c (n = 2m, l = c - (m-1)e):
// A, B integral, D in R_m(l), diag(p^e 1_{m-1}, p^l)^{-1} C integral.
bool in_order_R(const MatF& g, int c, int e) {
    const FieldConfig* cfg = g.config();
    int n = g.size();
    if (n % 2 != 0) return false;
    int m = n / 2;
    int l = c - (m - 1) * e;
    MatF A = g.block(0, 0, m), B = g.block(0, m, m);
    MatF C = g.block(m, 0, m), D = g.block(m, m, m);
    if (!A.is_integral() || !B.is_integral() || !D.is_integral())
        return false;
    // D in O_m(l) as well: conjugate by diag(1_{m-1}, p^l).
    std::vector<int> fl(m, 0);
    fl[m - 1] = l;
    if (!pi_conj(D, fl, 1).is_integral()) return false;
    for (int i = 0; i < m; ++i) {
        int depth = (i < m - 1) ? e : l;
        for (int j = 0; j < m; ++j)
            if (!C.at(i, j).in_ideal(depth)) return false;
    }
    (void)cfg;
    return true;
}

// Membership in the conjugate order R*_c = upsilon^{-1} R_c upsilon.
// With tau = (l, e, ..., e) the exponents of the upper-left block of
// upsilon, conjugating the block conditions of R_c gives:
//   A_{ij} in p^{tau_j - tau_i} O,   B_{ij} in p^{-tau_i} O,
//   C_{ij} in p^{tau_i + tau_j} O,   D integral with D_{1j} in p^l O, j > 1.
bool in_order_R_star(const MatF& g, int c, int e) {
    int n = g.size();
    if (n % 2 != 0) return false;
    int m = n / 2;
    int l = c - (m - 1) * e;
    MatF A = g.block(0, 0, m), B = g.block(0, m, m);
    MatF C = g.block(m, 0, m), D = g.block(m, m, m);
    std::vector<int> tau(m, e);
    tau[0] = l;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (!A.at(i, j).in_ideal(tau[j] - tau[i])) return false;
            if (!B.at(i, j).in_ideal(-tau[i])) return false;
            if (!C.at(i, j).in_ideal(tau[i] + tau[j])) return false;
            if (!D.at(i, j).in_ideal(i == 0 && j > 0 ? l : 0)) return false;
        }
    return true;
}

} // namespace

bool subgroup_member(const MatF& g, const SubgroupDescriptor& d) {
    const FieldConfig* cfg = g.config();
    int r = g.size();
    switch (d.kind) {
    case Subgroup::K:
        return g.in_K();
    case Subgroup::K1:
        return g.in_K1();
    case Subgroup::Gamma: {
        if (!g.in_K()) return false;
        for (int j = 0; j + 1 < r; ++j)
            if (!g.at(r - 1, j).in_ideal(d.c)) return false;
        return true;
    }
    case Subgroup::P_integral:
        return g.in_K() && is_e_last_row(g);
    case Subgroup::C: {
        if (!(g.in_K() && is_e_last_row(g))) return false;
        MatF one = MatF::identity(cfg, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                PadicScalar delta = i == j ? g.at(i, j) -
                                                 PadicScalar::one(cfg)
                                           : g.at(i, j);
                if (!delta.in_ideal(d.c)) return false;
            }
        (void)one;
        return true;
    }
    case Subgroup::S:
        return in_shalika(g);
    case Subgroup::S_circ:
        return in_shalika(g) && is_e_last_row(g);
    case Subgroup::S_circ_star:
        return in_shalika(g) && is_e_last_row(g) && g.det().is_unit();
    case Subgroup::P_star:
        return is_e_last_row(g) && g.det().is_unit();
    case Subgroup::P_plain:
        return is_e_last_row(g) && !g.det().is_zero();
    case Subgroup::H: {
        if (static_cast<int>(d.f.size()) != r)
            throw std::invalid_argument("subgroup_member: H(f) size");
        return pi_conj(g, d.f, 1).in_K1();
    }
    case Subgroup::KfrakC:
        return in_order_R(g, d.c, d.e) &&
               !g.det().is_zero() && in_order_R(g.inverse(), d.c, d.e);
    case Subgroup::KfrakC_star:
        return in_order_R_star(g, d.c, d.e) &&
               !g.det().is_zero() &&
               in_order_R_star(g.inverse(), d.c, d.e);
    case Subgroup::B_pattern: {
        PadicScalar det = PadicScalar::one(cfg);
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < i; ++j)
                if (!g.at(i, j).is_zero()) return false;
            if (g.at(i, i).is_zero()) return false;
            det = det * g.at(i, i);
        }
        return g.is_integral() && det.valuation() == d.k;
    }
    case Subgroup::Be_pattern: {
        PadicScalar det = PadicScalar::one(cfg);
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < i; ++j)
                if (!g.at(i, j).is_zero()) return false;
            if (g.at(i, i).is_zero()) return false;
            det = det * g.at(i, i);
        }
        if (det.valuation() != d.k) return false;
        if (!g.at(0, 0).is_integral()) return false;
        for (int j = 1; j < r; ++j)
            if (!g.at(0, j).in_ideal(-d.lprime)) return false;
        for (int i = 1; i < r; ++i)
            for (int j = i; j < r; ++j)
                if (!g.at(i, j).is_integral()) return false;
        return true;
    }
    }
    throw std::logic_error("subgroup_member: unhandled kind");
}

// ---------------------------------------------------------------------
// Special elements

MatF elem_u(const FieldConfig* cfg, const std::vector<PadicScalar>& x) {
    int r = static_cast<int>(x.size());
    MatF g = MatF::identity(cfg, r + 1);
    for (int i = 0; i < r; ++i)
        if (!x[i].is_zero()) g.set(i, r, x[i]);
    return g;
}

MatF elem_ubar(const FieldConfig* cfg, const std::vector<PadicScalar>& x) {
    int r = static_cast<int>(x.size());
    MatF g = MatF::identity(cfg, r + 1);
    for (int j = 0; j < r; ++j)
        if (!x[j].is_zero()) g.set(r, j, x[j]);
    return g;
}

MatF elem_g_n(const FieldConfig* cfg, int n, int e) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("elem_g_n: n must be even and >= 2");
    int m = n / 2;
    MatF g = MatF::identity(cfg, n);
    for (int i = 0; i + 1 < m; ++i) {
        g.set(i, i, PadicScalar::uniformizer_pow(cfg, (2 * i + 1) * e));
        g.set(i, m - 1, PadicScalar::uniformizer_pow(cfg, i * e));
    }
    g.set(m - 1, m - 1, PadicScalar::uniformizer_pow(cfg, (m - 1) * e));
    return g;
}

MatF elem_delta(const FieldConfig* cfg, int m, int e) {
    std::vector<int> f(m, 0);
    for (int i = 0; i + 1 < m; ++i) f[i] = (2 * i + 1) * e;
    if (m > 1) f[m - 1] = (m - 1) * e;
    return MatF::uniformizer_diag(cfg, f);
}

MatF elem_delta_sharp(const FieldConfig* cfg, int m, int e) {
    std::vector<int> f(m, 0);
    for (int i = 0; i < m; ++i) f[i] = 2 * i * e;
    if (m == 1) f[0] = 0;
    return MatF::uniformizer_diag(cfg, f);
}

MatF elem_v(const FieldConfig* cfg, int m, int e) {
    std::vector<PadicScalar> x;
    for (int i = 0; i + 1 < m; ++i)
        x.push_back(PadicScalar::uniformizer_pow(cfg, -(m - 1 - i) * e));
    return elem_u(cfg, x); // size m
}

MatF elem_v_sharp(const FieldConfig* cfg, int m, int e) {
    std::vector<PadicScalar> x;
    for (int i = 0; i + 1 < m; ++i)
        x.push_back(PadicScalar::uniformizer_pow(cfg, (m - 1 - i) * e));
    return elem_ubar(cfg, x); // size m
}

MatF elem_upsilon(const FieldConfig* cfg, int m, int e, int c) {
    int l = c - (m - 1) * e;
    MatF g(cfg, 2 * m);
    g.set(0, 0, PadicScalar::uniformizer_pow(cfg, l));
    for (int i = 1; i < m; ++i)
        g.set(i, i, PadicScalar::uniformizer_pow(cfg, e));
    g.set_block(m, m, elem_w_anti(cfg, m));
    return g;
}

MatF elem_h_perm(const FieldConfig* cfg, int sz, int m) {
    if (2 * m >= sz)
        throw std::invalid_argument("elem_h_perm: need 2m < size");
    std::vector<int> w(sz);
    for (int i = 0; i < m; ++i) w[i] = i;
    w[m] = 2 * m;
    for (int i = m + 1; i < sz; ++i) w[i] = i - 1;
    return MatF::permutation(cfg, w);
}

MatF elem_s_j(const FieldConfig* cfg, int m, int j) {
    if (j < 0 || j > m - 2)
        throw std::invalid_argument("elem_s_j: j out of range");
    std::vector<int> w(m);
    std::iota(w.begin(), w.end(), 0);
    std::swap(w[j], w[m - 1]);
    return MatF::permutation(cfg, w);
}

MatF elem_w_anti(const FieldConfig* cfg, int m) {
    MatF g(cfg, m);
    for (int i = 0; i < m; ++i)
        g.set(i, m - 1 - i, PadicScalar::one(cfg));
    return g;
}

MatF elem_A_w(const FieldConfig* cfg, int e, const std::vector<int>& w,
              const std::vector<PadicScalar>& t) {
    int m = static_cast<int>(w.size());
    if (static_cast<int>(t.size()) != m)
        throw std::invalid_argument("elem_A_w: w and t sizes differ");
    MatF g = MatF::identity(cfg, m);
    for (int j = 0; j < m; ++j) {
        if (!t[j].is_unit())
            throw std::invalid_argument("elem_A_w: t entries must be units");
        g.set(m - 1, j,
              PadicScalar::uniformizer_pow(cfg, (m - w[j]) * e) * t[j]);
    }
    return g;
}

// ---------------------------------------------------------------------
// sigma / tau / d

SigmaTau sigma_tau(const std::vector<PadicScalar>& x,
                   const std::vector<int>& f) {
    int r = static_cast<int>(x.size());
    if (static_cast<int>(f.size()) != r)
        throw std::invalid_argument("sigma_tau: x and f sizes differ");
    if (r == 0) throw std::invalid_argument("sigma_tau: empty vector");
    const FieldConfig* cfg = x[0].config();

    SigmaTau st;
    st.sigma = sort_perm(x);

    // tau: sorted positions i with x_{sigma(i)} non-integral and, for all
    // later positions j, o(x_{sigma(i)}) - o(x_{sigma(j)}) < f_{sigma(j)}
    // - f_{sigma(i)}.
    for (int i = 0; i < r; ++i) {
        const PadicScalar& xi = x[st.sigma[i]];
        if (xi.is_integral()) continue;
        bool ok = true;
        for (int j = i + 1; j < r && ok; ++j) {
            const PadicScalar& xj = x[st.sigma[j]];
            int oj = ord_or_inf(xj);
            if (oj == INT_MAX) { ok = false; break; } // can't happen: sorted
            if (!(xi.valuation() - oj <
                  f[st.sigma[j]] - f[st.sigma[i]]))
                ok = false;
        }
        if (ok) st.tau.push_back(i);
    }

    st.x_tau_star.assign(r, PadicScalar(cfg));
    std::vector<PadicScalar> z(r, PadicScalar(cfg)); // x(tau)
    for (int i : st.tau) {
        int idx = st.sigma[i];
        z[idx] = x[idx];
        st.x_tau_star[idx] = x[idx].inverse();
    }

    // d(z): with sz the sorting permutation of z (zeros first),
    //   d_i = 1 / hat(z)_i           if i = sz(first)
    //   d_i = hat(z)_{sz(last)}      if i = r (the extra coordinate)
    //   d_i = hat(z)_{prev} / hat(z)_i  otherwise, prev = sorted
    //         predecessor of i.
    std::vector<int> sz = sort_perm(z);
    std::vector<int> pos(r); // sorted position of original index
    for (int i = 0; i < r; ++i) pos[sz[i]] = i;
    st.d.assign(r + 1, PadicScalar::one(cfg));
    for (int i = 0; i < r; ++i) {
        if (i == sz[0])
            st.d[i] = hat(z[i]).inverse();
        else
            st.d[i] = hat(z[sz[pos[i] - 1]]) / hat(z[i]);
    }
    st.d[r] = hat(z[sz[r - 1]]);
    return st;
}

// ---------------------------------------------------------------------
// Triangular decompositions

namespace {

struct Lst4 {
    MatF h, u, d, k;
    Lst4(const MatF& a, const MatF& b, const MatF& c, const MatF& dd)
        : h(a), u(b), d(c), k(dd) {}
};

Lst4 lower_rec(const FieldConfig* cfg, const std::vector<PadicScalar>& x,
               const std::vector<int>& f);

// Sorted case: valuations weakly decreasing, last entry non-integral.
Lst4 lower_sorted(const FieldConfig* cfg,
                  const std::vector<PadicScalar>& x,
                  const std::vector<int>& f) {
    int r = static_cast<int>(x.size());
    int R = r + 1;
    const PadicScalar y = x[r - 1];
    const PadicScalar c = y.inverse();

    // ubar_x = G1 * D * Mbar(-x') * [ubar_row(c x') * W * G3] with
    // G1 = G3 = 1 + c E_{r-1,r}, D = diag(1,..,1,c,y), W the rotation in
    // coordinates (r-1, r).
    MatF G1 = MatF::identity(cfg, R);
    G1.set(r - 1, r, c);
    std::vector<PadicScalar> ddiag(R, PadicScalar::one(cfg));
    ddiag[r - 1] = c;
    ddiag[r] = y;
    MatF D = MatF::diagonal(ddiag);
    MatF W = MatF::identity(cfg, R);
    W.set(r - 1, r - 1, PadicScalar(cfg));
    W.set(r, r, PadicScalar(cfg));
    W.set(r - 1, r, PadicScalar::from_int(cfg, -1));
    W.set(r, r - 1, PadicScalar::one(cfg));

    MatF urow = MatF::identity(cfg, R); // ubar_row(c x') in K^1
    MatF Mints = MatF::identity(cfg, R); // integral coordinates, K^1 side
    MatF L = MatF::identity(cfg, R);     // dropped coordinates, H_f side
    std::vector<PadicScalar> kept(r - 1, PadicScalar(cfg));
    for (int j = 0; j + 1 < r; ++j) {
        if (x[j].is_zero()) continue;
        urow.set(r, j, c * x[j]);
        if (x[j].is_integral()) {
            Mints.set(r - 1, j, -x[j]);
        } else if (x[j].valuation() - y.valuation() >=
                   f[r - 1] - f[j]) {
            // extra condition fails: conjugates into H_f on the left
            L.set(r - 1, j, -(x[j] * c));
        } else {
            kept[j] = x[j];
        }
    }

    Lst4 sub = [&]() -> Lst4 {
        if (r == 1)
            return Lst4(MatF::identity(cfg, 1), MatF::identity(cfg, 1),
                        MatF::identity(cfg, 1), MatF::identity(cfg, 1));
        std::vector<PadicScalar> neg(r - 1, PadicScalar(cfg));
        for (int j = 0; j + 1 < r; ++j)
            if (!kept[j].is_zero()) neg[j] = -kept[j];
        std::vector<int> fp(f.begin(), f.end() - 1);
        return lower_rec(cfg, neg, fp);
    }();

    MatF hp = sub.h.embed(1);
    MatF up = sub.u.embed(1);
    MatF dp = sub.d.embed(1);
    MatF kp = sub.k.embed(1);

    // G1 * D * up * dp = uW * u_full * D * dp with uW = 1 + y v_j E_{j,r-1}
    // and u_full the column unipotent with entries (-v, c), where v is the
    // column of up.
    MatF uW = MatF::identity(cfg, R);
    MatF u_full = MatF::identity(cfg, R);
    for (int j = 0; j + 1 < r; ++j) {
        const PadicScalar& v = up.at(j, r - 1);
        if (v.is_zero()) continue;
        uW.set(j, r - 1, y * v);
        u_full.set(j, r, -v);
    }
    u_full.set(r - 1, r, c);
    if (!(G1 * D * up * dp).equals(uW * u_full * D * dp))
        throw std::logic_error("lst: column transform identity failed");

    MatF h_total = L * hp * uW;
    MatF d_full = D * dp;
    MatF k_total = kp * Mints * urow * W * G1;
    return Lst4(h_total, u_full, d_full, k_total);
}

Lst4 lower_rec(const FieldConfig* cfg, const std::vector<PadicScalar>& x,
               const std::vector<int>& f) {
    int r = static_cast<int>(x.size());
    bool all_integral = true;
    for (const PadicScalar& xi : x)
        if (!xi.is_integral()) all_integral = false;
    if (all_integral) {
        MatF id = MatF::identity(cfg, r + 1);
        return Lst4(id, id, id, elem_ubar(cfg, x));
    }
    std::vector<int> s = sort_perm(x);
    bool sorted = true;
    for (int i = 0; i < r; ++i)
        if (s[i] != i) sorted = false;
    if (sorted) return lower_sorted(cfg, x, f);
    // ubar_x = P^{-1} ubar_{x o s} P for the permutation matrix P with
    // (P g P^{-1})_{ij} = g_{s(i), s(j)} (fixing the extra coordinate).
    std::vector<PadicScalar> xs(r, PadicScalar(cfg));
    std::vector<int> fs(r);
    for (int i = 0; i < r; ++i) {
        xs[i] = x[s[i]];
        fs[i] = f[s[i]];
    }
    std::vector<int> w(r + 1);
    for (int i = 0; i < r; ++i) w[i] = s[i];
    w[r] = r;
    MatF P = MatF::permutation(cfg, w);
    MatF Pi = P.inverse();
    Lst4 sub = lower_sorted(cfg, xs, fs);
    return Lst4(Pi * sub.h * P, Pi * sub.u * P, Pi * sub.d * P,
                Pi * sub.k * P);
}

// Sign diagonal t with a = b * t (both diagonal, entries matching up to
// sign); throws if the shapes don't match.
MatF sign_fixup(const MatF& a, const MatF& b) {
    const FieldConfig* cfg = a.config();
    int r = a.size();
    MatF t(cfg, r);
    PadicScalar det = PadicScalar::one(cfg);
    for (int i = 0; i < r; ++i) {
        PadicScalar q = b.at(i, i) / a.at(i, i);
        if (!q.equals(PadicScalar::one(cfg)) &&
            !q.equals(PadicScalar::from_int(cfg, -1)))
            throw std::logic_error("lst: diagonal mismatch beyond sign");
        t.set(i, i, q);
        det = det * q;
    }
    if (!det.equals(PadicScalar::one(cfg)))
        throw std::logic_error("lst: sign fixup has determinant -1");
    return t;
}

} // namespace

LstResult lst_decompose(const std::vector<PadicScalar>& x,
                        const std::vector<int>& f, LstSide side) {
    int r = static_cast<int>(x.size());
    if (r == 0 || static_cast<int>(f.size()) != r)
        throw std::invalid_argument("lst_decompose: bad sizes");
    const FieldConfig* cfg = x[0].config();
    SigmaTau st = sigma_tau(x, f);
    MatF d_target = MatF::diagonal(st.d);

    if (side == LstSide::Lower) {
        Lst4 got = lower_rec(cfg, x, f);
        MatF u_target = elem_u(cfg, st.x_tau_star);
        if (!got.u.equals(u_target))
            throw std::logic_error("lst: unipotent factor mismatch");
        // got.d may differ from d(x(tau)) by a determinant-one sign
        // diagonal, which belongs to K^1.
        MatF t = sign_fixup(d_target, got.d); // got.d = d_target * t
        MatF k = t * got.k;
        // Postconditions.
        SubgroupDescriptor hf{Subgroup::H, 0, 0, 0, 0, f};
        if (!subgroup_member(got.h.leading_block(r), hf))
            throw std::logic_error("lst: h factor left H_f");
        for (int i = 0; i < r; ++i)
            if (!got.h.at(i, r).is_zero() || !got.h.at(r, i).is_zero())
                throw std::logic_error("lst: h factor not embedded");
        if (!k.in_K1()) throw std::logic_error("lst: k factor left K^1");
        if (!(got.h * u_target * d_target * k).equals(elem_ubar(cfg, x)))
            throw std::logic_error("lst: reconstruction failed");
        return {got.h, u_target, d_target, k, st};
    }

    // Upper: from the lower decomposition of -x by transpose-inverse.
    std::vector<PadicScalar> nx(r, PadicScalar(cfg));
    for (int i = 0; i < r; ++i)
        if (!x[i].is_zero()) nx[i] = -x[i];
    Lst4 got = lower_rec(cfg, nx, f);
    // ubar_{-x} = h u d k  =>  u_x = (t h)^{-1} ubar(-z) d^{-1} (t k)^{-1}
    // with z the column of u; -z = x(tau)*.
    MatF h_up = got.h.inverse().transpose();
    MatF u_up = elem_ubar(cfg, st.x_tau_star);
    MatF d_up_raw = got.d.inverse();
    MatF d_target_inv = d_target.inverse();
    MatF t = sign_fixup(d_target_inv, d_up_raw); // raw = target^{-1} * t
    MatF k_up = t * got.k.inverse().transpose();
    std::vector<int> nf(r);
    for (int i = 0; i < r; ++i) nf[i] = -f[i];
    SubgroupDescriptor hnf{Subgroup::H, 0, 0, 0, 0, nf};
    if (!subgroup_member(h_up.leading_block(r), hnf))
        throw std::logic_error("lst: upper h factor left H_{-f}");
    for (int i = 0; i < r; ++i)
        if (!h_up.at(i, r).is_zero() || !h_up.at(r, i).is_zero())
            throw std::logic_error("lst: upper h factor not embedded");
    if (!k_up.in_K1())
        throw std::logic_error("lst: upper k factor left K^1");
    if (!(h_up * u_up * d_target_inv * k_up).equals(elem_u(cfg, x)))
        throw std::logic_error("lst: upper reconstruction failed");
    return {h_up, u_up, d_target_inv, k_up, st};
}

// ---------------------------------------------------------------------
// Shalika * mirabolic factorization

std::optional<SPFactor> factor_s_p(const MatF& g) {
    const FieldConfig* cfg = g.config();
    int n = g.size();
    if (n % 2 != 0)
        throw std::invalid_argument("factor_s_p: size must be even");
    int m = n / 2;
    if (g.det().is_zero())
        throw std::domain_error("factor_s_p: singular input");

    // Solve alpha * [C | D] = (0, ..., 0 | e_m) for a row vector alpha,
    // where C, D are the lower blocks of g.  alpha is then the last row
    // of a^{-1} for s = diag(a, a).
    // Set up the transposed system: (2m) equations in m unknowns.
    std::vector<std::vector<PadicScalar>> eq; // each row: m coeffs + rhs
    for (int col = 0; col < 2 * m; ++col) {
        std::vector<PadicScalar> row;
        for (int i = 0; i < m; ++i) row.push_back(g.at(m + i, col));
        row.push_back(col == 2 * m - 1 ? PadicScalar::one(cfg)
                                       : PadicScalar(cfg));
        eq.push_back(std::move(row));
    }
    // Gaussian elimination with minimal-valuation pivoting.
    std::vector<int> pivot_col_of_row;
    int rank = 0;
    for (int c = 0; c < m && rank < static_cast<int>(eq.size()); ++c) {
        int piv = -1, best = 0;
        for (int i = rank; i < static_cast<int>(eq.size()); ++i) {
            if (eq[i][c].is_zero()) continue;
            if (piv < 0 || eq[i][c].valuation() < best) {
                piv = i;
                best = eq[i][c].valuation();
            }
        }
        if (piv < 0) continue;
        std::swap(eq[rank], eq[piv]);
        PadicScalar inv = eq[rank][c].inverse();
        for (int j = 0; j <= m; ++j)
            if (!eq[rank][j].is_zero()) eq[rank][j] = eq[rank][j] * inv;
        eq[rank][c] = PadicScalar::one(cfg);
        for (int i = 0; i < static_cast<int>(eq.size()); ++i) {
            if (i == rank || eq[i][c].is_zero()) continue;
            PadicScalar fct = eq[i][c];
            for (int j = 0; j <= m; ++j) {
                if (j == c) continue;
                if (eq[rank][j].is_zero()) continue;
                PadicScalar delta = fct * eq[rank][j];
                eq[i][j] = eq[i][j].is_zero() ? -delta : eq[i][j] - delta;
            }
            eq[i][c] = PadicScalar(cfg);
        }
        pivot_col_of_row.push_back(c);
        ++rank;
    }
    // Consistency: all remaining rows must have zero rhs.
    for (int i = rank; i < static_cast<int>(eq.size()); ++i) {
        bool lhs_zero = true;
        for (int j = 0; j < m; ++j)
            if (!eq[i][j].is_zero()) lhs_zero = false;
        if (lhs_zero && !eq[i][m].is_zero()) return std::nullopt;
    }
    std::vector<PadicScalar> alpha(m, PadicScalar(cfg));
    for (int i = 0; i < rank; ++i) alpha[pivot_col_of_row[i]] = eq[i][m];

    int j0 = -1;
    for (int j = 0; j < m; ++j)
        if (!alpha[j].is_zero()) j0 = j;
    if (j0 < 0) return std::nullopt; // alpha = 0 cannot satisfy the rhs

    // b = a^{-1}: rows e_k (k != j0) then alpha.
    MatF b(cfg, m);
    int row = 0;
    for (int k = 0; k < m; ++k) {
        if (k == j0) continue;
        b.set(row, k, PadicScalar::one(cfg));
        ++row;
    }
    for (int j = 0; j < m; ++j)
        if (!alpha[j].is_zero()) b.set(m - 1, j, alpha[j]);

    MatF a = b.inverse();
    MatF s(cfg, n);
    s.set_block(0, 0, a);
    s.set_block(m, m, a);
    MatF bb(cfg, n);
    bb.set_block(0, 0, b);
    bb.set_block(m, m, b);
    MatF p = bb * g;
    if (!is_e_last_row(p))
        throw std::logic_error("factor_s_p: solved factor is not mirabolic");
    if (!(s * p).equals(g))
        throw std::logic_error("factor_s_p: reconstruction failed");
    return SPFactor{s, p};
}

// ---------------------------------------------------------------------
// Sharp double coset: S_n-circ * embed(v# d#) * P_n(O)

namespace {

using Row = std::vector<PadicScalar>;
using RMat = std::vector<Row>;

// Column echelon over O for an m x n matrix of full row rank, m <= n:
// returns unimodular Q in GL_n(O) with A Q = [T | 0], T lower triangular
// invertible.  Pivots are chosen with minimal valuation so every
// elimination coefficient stays integral.
MatF col_echelon(RMat A, const FieldConfig* cfg) {
    int m = static_cast<int>(A.size());
    int n = static_cast<int>(A[0].size());
    MatF Q = MatF::identity(cfg, n);
    auto swap_cols = [&](int a, int b) {
        if (a == b) return;
        for (int i = 0; i < m; ++i) std::swap(A[i][a], A[i][b]);
        for (int i = 0; i < n; ++i) {
            PadicScalar t = Q.at(i, a);
            Q.set(i, a, Q.at(i, b));
            Q.set(i, b, t);
        }
    };
    for (int i = 0; i < m; ++i) {
        int piv = -1, best = 0;
        for (int j = i; j < n; ++j) {
            if (A[i][j].is_zero()) continue;
            if (piv < 0 || A[i][j].valuation() < best) {
                piv = j;
                best = A[i][j].valuation();
            }
        }
        if (piv < 0)
            throw std::invalid_argument("col_echelon: rank deficient");
        swap_cols(i, piv);
        for (int j = i + 1; j < n; ++j) {
            if (A[i][j].is_zero()) continue;
            PadicScalar c = A[i][j] / A[i][i];
            for (int t = i + 1; t < m; ++t)
                if (!A[t][i].is_zero())
                    A[t][j] = A[t][j] - c * A[t][i];
            A[i][j] = PadicScalar(cfg); // cleared by construction
            for (int t = 0; t < n; ++t)
                if (!Q.at(t, i).is_zero())
                    Q.set(t, j, Q.at(t, j) - c * Q.at(t, i));
        }
    }
    return Q;
}

int vec_idx(int i, int j, int m) { return i * m + j; }

// Find X with X integral, Hs^{-1} X Hs integral, last row = rho, and
// det(X) a unit; nullopt if no such X exists.  Hs is a column-lattice
// basis (invertible).  The first three conditions cut out an affine coset
// of a sublattice; det-unit only depends on X mod p, so exhausting the
// kernel directions mod p decides existence exactly (falling back to
// random sampling when the residue space is too large).
std::optional<MatF> stabilizer_with_last_row(const MatF& Hs,
                                             const Row& rho) {
    const FieldConfig* cfg = Hs.config();
    int m = Hs.size();
    int d = m * m;

    // Lattice L = Mat(O) cap Hs Mat(O) Hs^{-1} via dual sum:
    // L = (Mat(O)* + (T Mat(O))*)* with T: Z -> Hs Z Hs^{-1}.
    MatF Hi = Hs.inverse();
    MatF MT(cfg, d); // matrix of T in the E_{ab} basis
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            // Hs E_{ab} Hs^{-1} = (col a of Hs) (row b of Hs^{-1})
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    PadicScalar v = Hs.at(i, a) * Hi.at(b, j);
                    if (!v.is_zero())
                        MT.set(vec_idx(i, j, m), vec_idx(a, b, m), v);
                }
        }
    MatF A2d = MT.inverse().transpose(); // dual basis of T(Mat(O))
    RMat stack(d, Row(2 * d, PadicScalar(cfg)));
    for (int i = 0; i < d; ++i) {
        stack[i][i] = PadicScalar::one(cfg);
        for (int j = 0; j < d; ++j) stack[i][d + j] = A2d.at(i, j);
    }
    RMat stack_copy = stack;
    MatF Qs = col_echelon(stack, cfg);
    MatF T(cfg, d); // first d columns of [I | A2d] Qs
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            PadicScalar acc(cfg);
            for (int t = 0; t < 2 * d; ++t)
                if (!stack_copy[i][t].is_zero() &&
                    !Qs.at(t, j).is_zero())
                    acc = acc + stack_copy[i][t] * Qs.at(t, j);
            T.set(i, j, acc);
        }
    MatF lat = T.inverse().transpose(); // columns generate L

    // Affine solve: the m coordinates of the last row must equal rho.
    RMat S(m, Row(d, PadicScalar(cfg)));
    for (int j = 0; j < m; ++j)
        for (int t = 0; t < d; ++t) S[j][t] = lat.at(vec_idx(m - 1, j, m), t);
    RMat S_copy = S;
    MatF Qa = col_echelon(S, cfg);
    // S * Qa = [Ts | 0]; particular coefficients c0 = Qa (Ts^{-1} rho, 0).
    MatF Ts(cfg, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            PadicScalar acc(cfg);
            for (int t = 0; t < d; ++t)
                if (!S_copy[i][t].is_zero() && !Qa.at(t, j).is_zero())
                    acc = acc + S_copy[i][t] * Qa.at(t, j);
            Ts.set(i, j, acc);
        }
    MatF Tsi = Ts.inverse();
    Row y(m, PadicScalar(cfg));
    for (int i = 0; i < m; ++i) {
        PadicScalar acc(cfg);
        for (int j = 0; j < m; ++j)
            if (!rho[j].is_zero()) acc = acc + Tsi.at(i, j) * rho[j];
        if (!acc.is_integral()) return std::nullopt;
        y[i] = acc;
    }
    auto coeff_to_mat = [&](const Row& c) {
        MatF X(cfg, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                PadicScalar acc(cfg);
                for (int t = 0; t < d; ++t)
                    if (!lat.at(vec_idx(i, j, m), t).is_zero() &&
                        !c[t].is_zero())
                        acc = acc + lat.at(vec_idx(i, j, m), t) * c[t];
                X.set(i, j, acc);
            }
        return X;
    };
    Row c0(d, PadicScalar(cfg));
    for (int t = 0; t < d; ++t) {
        PadicScalar acc(cfg);
        for (int i = 0; i < m; ++i)
            if (!Qa.at(t, i).is_zero() && !y[i].is_zero())
                acc = acc + Qa.at(t, i) * y[i];
        c0[t] = acc;
    }
    MatF X0 = coeff_to_mat(c0);
    int free = d - m;
    std::vector<MatF> ker;
    for (int i = 0; i < free; ++i) {
        Row ci(d, PadicScalar(cfg));
        for (int t = 0; t < d; ++t) ci[t] = Qa.at(t, m + i);
        ker.push_back(coeff_to_mat(ci));
    }

    // Search X0 + sum t_i ker_i for a unit determinant, t_i mod p.
    std::uint64_t p = cfg->p();
    double total = 1;
    for (int i = 0; i < free; ++i) total *= static_cast<double>(p);
    auto candidate = [&](const std::vector<std::uint64_t>& t) {
        MatF X = X0;
        for (int i = 0; i < free; ++i) {
            if (t[i] == 0) continue;
            PadicScalar c =
                PadicScalar::from_int(cfg, static_cast<long long>(t[i]));
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    if (!ker[i].at(a, b).is_zero())
                        X.set(a, b, X.at(a, b) + c * ker[i].at(a, b));
        }
        return X;
    };
    auto good = [&](const MatF& X) {
        PadicScalar det = X.det();
        return !det.is_zero() && det.is_unit();
    };
    if (total <= 65536.0) {
        std::vector<std::uint64_t> t(free, 0);
        for (;;) {
            MatF X = candidate(t);
            if (good(X)) return X;
            int i = 0;
            while (i < free && ++t[i] == p) t[i++] = 0;
            if (i == free) break;
        }
        return std::nullopt;
    }
    std::mt19937_64 rng(0x5eedu);
    for (int trial = 0; trial < 20000; ++trial) {
        std::vector<std::uint64_t> t(free);
        for (int i = 0; i < free; ++i) t[i] = rng() % p;
        MatF X = candidate(t);
        if (good(X)) return X;
    }
    return std::nullopt;
}

} // namespace

std::optional<SPFactor> sharp_coset_decompose(const MatF& g, int e) {
    const FieldConfig* cfg = g.config();
    int n = g.size();
    if (n % 2 != 0)
        throw std::invalid_argument("sharp_coset_decompose: odd size");
    int m = n / 2;
    if (g.det().is_zero())
        throw std::domain_error("sharp_coset_decompose: singular input");
    MatF Msharp = elem_v_sharp(cfg, m, e) * elem_delta_sharp(cfg, m, e);
    MatF target = Msharp.embed(m);

    // The double coset lies inside P_n.
    if (!is_e_last_row(g)) return std::nullopt;

    // Bottom m rows of g must be a GL_m(F)-multiple of an O-basis of the
    // saturation of their row span; the basis is the bottom of k.
    RMat Gb(m, Row(n, PadicScalar(cfg)));
    RMat A0 = Gb;
    for (int i = 0; i < m; ++i) {
        int minval = INT_MAX;
        for (int j = 0; j < n; ++j) {
            Gb[i][j] = g.at(m + i, j);
            minval = std::min(minval, ord_or_inf(Gb[i][j]));
        }
        PadicScalar sc = PadicScalar::uniformizer_pow(cfg, -minval);
        for (int j = 0; j < n; ++j) A0[i][j] = Gb[i][j] * sc;
    }
    MatF Q = col_echelon(A0, cfg);
    MatF Qinv = Q.inverse();
    // Saturation basis: first m rows of Q^{-1}.  Re-normalize so the last
    // basis row is exactly e_n (it lies in the saturation since g in P_n).
    RMat B(m, Row(n, PadicScalar(cfg)));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) B[i][j] = Qinv.at(i, j);
    {
        // coefficients of e_n in the basis: c = e_n Q restricted
        Row c(m, PadicScalar(cfg));
        for (int i = 0; i < m; ++i) c[i] = Q.at(n - 1, i);
        int i0 = -1;
        for (int i = 0; i < m; ++i)
            if (!c[i].is_zero() && c[i].is_unit()) i0 = i;
        for (int i = 0; i < m; ++i)
            if (!c[i].is_integral())
                throw std::logic_error(
                    "sharp_coset_decompose: e_n not in saturation");
        if (i0 < 0)
            throw std::logic_error(
                "sharp_coset_decompose: e_n imprimitive in saturation");
        RMat B2(m, Row(n, PadicScalar(cfg)));
        int row = 0;
        for (int i = 0; i < m; ++i) {
            if (i == i0) continue;
            B2[row++] = B[i];
        }
        for (int j = 0; j < n; ++j) {
            PadicScalar acc(cfg);
            for (int i = 0; i < m; ++i)
                if (!c[i].is_zero() && !B[i][j].is_zero())
                    acc = acc + c[i] * B[i][j];
            B2[m - 1][j] = acc;
        }
        B = std::move(B2);
    }
    // Complete to k1 in P_n(O): remaining rows of Q^{-1} on top.
    MatF k1(cfg, n);
    for (int i = m; i < n; ++i)
        for (int j = 0; j < n; ++j) k1.set(i - m, j, Qinv.at(i, j));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) k1.set(n - m + i, j, B[i][j]);
    if (!subgroup_member(k1, {Subgroup::P_integral}))
        throw std::logic_error("sharp_coset_decompose: completion left P(O)");

    // a solves a * B = Gb (the Shalika block seen from the bottom rows).
    MatF Bsq(cfg, m), Gsq(cfg, m);
    {
        RMat Bc = B;
        MatF Qb = col_echelon(Bc, cfg);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                PadicScalar accB(cfg), accG(cfg);
                for (int t = 0; t < n; ++t) {
                    if (!Qb.at(t, j).is_zero()) {
                        if (!B[i][t].is_zero())
                            accB = accB + B[i][t] * Qb.at(t, j);
                        if (!Gb[i][t].is_zero())
                            accG = accG + Gb[i][t] * Qb.at(t, j);
                    }
                }
                Bsq.set(i, j, accB);
                Gsq.set(i, j, accG);
            }
    }
    MatF a = Gsq * Bsq.inverse();
    for (int j = 0; j < m; ++j) {
        PadicScalar want = j == m - 1 ? PadicScalar::one(cfg)
                                      : PadicScalar(cfg);
        if (!a.at(m - 1, j).equals(want))
            throw std::logic_error(
                "sharp_coset_decompose: Shalika block lost the e-row");
    }

    MatF H = g * k1.inverse();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (!H.at(m + i, j).is_zero())
                throw std::logic_error(
                    "sharp_coset_decompose: lower-left block not cleared");
    MatF H11 = H.leading_block(m);
    MatF Y = a.inverse() * H11;

    // Resolve the P_m(O)-ambiguity: find C in P_m(O) with C Y in M# K.
    CartanResult cy = cartan(Y), cs = cartan(Msharp);
    if (cy.f != cs.f) return std::nullopt;
    MatF C0 = cs.k1 * cy.k1.inverse();
    MatF Hsharp = hermite_column(Msharp).H;
    MatF C0i = C0.inverse();
    Row rho(m, PadicScalar(cfg));
    for (int j = 0; j < m; ++j) rho[j] = C0i.at(m - 1, j);
    std::optional<MatF> gamma = stabilizer_with_last_row(Hsharp, rho);
    if (!gamma) return std::nullopt;
    MatF C = *gamma * C0;
    if (!subgroup_member(C, {Subgroup::P_integral}))
        throw std::logic_error("sharp_coset_decompose: C left P_m(O)");
    MatF k_m = Msharp.inverse() * C * Y;
    if (!k_m.in_K())
        throw std::logic_error(
            "sharp_coset_decompose: lattice match failed");

    // Assemble: k = diag(k_m, 1) * diag(1, C) * k1, s = g k^{-1} target^{-1}.
    MatF kC = k1;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            PadicScalar acc(cfg);
            for (int t = 0; t < m; ++t)
                if (!C.at(i, t).is_zero() && !k1.at(n - m + t, j).is_zero())
                    acc = acc + C.at(i, t) * k1.at(n - m + t, j);
            kC.set(n - m + i, j, acc);
        }
    MatF kfinal = kC;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            PadicScalar acc(cfg);
            for (int t = 0; t < m; ++t)
                if (!k_m.at(i, t).is_zero() && !kC.at(t, j).is_zero())
                    acc = acc + k_m.at(i, t) * kC.at(t, j);
            kfinal.set(i, j, acc);
        }
    if (!subgroup_member(kfinal, {Subgroup::P_integral}))
        throw std::logic_error("sharp_coset_decompose: k left P_n(O)");
    MatF s = g * kfinal.inverse() * target.inverse();
    if (!subgroup_member(s, {Subgroup::S_circ}))
        throw std::logic_error("sharp_coset_decompose: s left S-circ");
    if (!(s * target * kfinal).equals(g))
        throw std::logic_error("sharp_coset_decompose: reconstruction failed");
    return SPFactor{s, kfinal};
}

} // namespace shalika
