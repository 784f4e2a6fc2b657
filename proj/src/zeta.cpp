#include "shalika/zeta.hpp"

#include <array>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace shalika {

namespace {

PadicScalar S(const FieldConfig* cfg, long long num, long long den = 1) {
    return PadicScalar::from_rational(cfg, num, den);
}

std::string mat_key(const MatF& g) {
    std::ostringstream os;
    for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j) os << g.at(i, j) << '|';
    return os.str();
}

std::uint64_t lcg_next(std::uint64_t& s) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return s >> 16;
}

long long ipow(long long b, int k) {
    long long r = 1;
    for (int i = 0; i < k; ++i) r *= b;
    return r;
}

// modular inverse of a mod m (m a prime power, a coprime to it)
long long mod_inverse(long long a, long long m) {
    long long t = 0, nt = 1, r = m, nr = a % m;
    while (nr != 0) {
        long long q = r / nr;
        t -= q * nt;
        std::swap(t, nt);
        r -= q * nr;
        std::swap(r, nr);
    }
    return t < 0 ? t + m : t;
}

// ---------------------------------------------------------------
// SL_r residue enumeration (r <= 2), cached per (p, depth)

const std::vector<std::array<std::uint64_t, 4>>& sl2_residues(
    std::uint64_t p, int depth) {
    static std::mutex mu;
    static std::map<std::pair<std::uint64_t, int>,
                    std::vector<std::array<std::uint64_t, 4>>>
        cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({p, depth});
    if (it != cache.end()) return it->second;
    std::uint64_t M = 1;
    for (int i = 0; i < depth; ++i) M *= p;
    if (M > 27)
        throw BudgetExceeded("sl2_residues: congruence depth too large");
    std::vector<std::array<std::uint64_t, 4>> out;
    for (std::uint64_t a = 0; a < M; ++a)
        for (std::uint64_t b = 0; b < M; ++b)
            for (std::uint64_t c = 0; c < M; ++c)
                for (std::uint64_t d = 0; d < M; ++d)
                    if ((a * d + M * M - (b * c) % (M * M)) % M == 1 % M)
                        out.push_back({a, b, c, d});
    return cache[{p, depth}] = std::move(out);
}

std::vector<MatF> sl_residue_lifts(const FieldConfig* cfg, int r, int depth) {
    if (r <= 0 || depth <= 0) return {MatF::identity(cfg, std::max(r, 1))};
    if (r == 1) return {MatF::identity(cfg, 1)};
    if (r > 2)
        throw std::invalid_argument(
            "sl_residue_lifts: only ranks <= 2 supported");
    std::vector<MatF> out;
    for (const auto& q : sl2_residues(cfg->p(), depth)) {
        // lift to an exact determinant-one matrix is not needed: the
        // averages only use the residue class, so the plain integer lift
        // is a valid coset representative.
        MatF u(cfg, 2);
        u.set(0, 0, S(cfg, static_cast<long long>(q[0])));
        u.set(0, 1, S(cfg, static_cast<long long>(q[1])));
        u.set(1, 0, S(cfg, static_cast<long long>(q[2])));
        u.set(1, 1, S(cfg, static_cast<long long>(q[3])));
        out.push_back(u);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------
// QSeries

std::string QSeries::str() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < coeff.size(); ++k) {
        if (k) os << ", ";
        os << "c_" << k << " = "
           << (indeterminate[k] ? std::string("Indeterminate")
                                : coeff[k].str());
    }
    return os.str();
}

// ---------------------------------------------------------------
// bmk_reps

std::vector<MatF> bmk_reps(const FieldConfig* cfg, int m, int k,
                           BmkVariant variant, int lprime) {
    if (m < 1) throw std::invalid_argument("bmk_reps: m >= 1 required");
    if (k < 0) return {};
    const long long p = static_cast<long long>(cfg->p());
    const std::size_t cap = 200000;

    // compositions of k into m nonnegative parts
    std::vector<MatF> out;
    std::vector<int> a(m, 0);
    std::function<void(int, int)> rec = [&](int pos, int rem) {
        if (pos == m - 1) {
            a[pos] = rem;
            // entry (i, j), i < j, runs over p^{-s_i} O / p^{a_i - s_i};
            // a residue system is {t p^{-s_i} : 0 <= t < p^{a_i}}.
            std::vector<int> digits(m * (m - 1) / 2, 0);
            std::vector<long long> radix(digits.size(), 1);
            {
                int idx = 0;
                for (int i = 0; i < m; ++i)
                    for (int j = i + 1; j < m; ++j) radix[idx++] = ipow(p, a[i]);
            }
            std::size_t total = 1;
            for (long long r : radix) {
                total *= static_cast<std::size_t>(r);
                if (total > cap || out.size() + total > cap)
                    throw BudgetExceeded("bmk_reps: enumeration cap exceeded");
            }
            for (std::size_t idx = 0; idx < total; ++idx) {
                MatF b(cfg, m);
                std::size_t rest = idx;
                int pos2 = 0;
                for (int i = 0; i < m; ++i) {
                    b.set(i, i, PadicScalar::uniformizer_pow(cfg, a[i]));
                    int s = (variant == BmkVariant::EVariant && i == 0)
                                ? lprime
                                : 0;
                    for (int j = i + 1; j < m; ++j) {
                        long long t = static_cast<long long>(
                            rest % static_cast<std::size_t>(radix[pos2]));
                        rest /= static_cast<std::size_t>(radix[pos2]);
                        ++pos2;
                        if (t != 0)
                            b.set(i, j, S(cfg, t) *
                                            PadicScalar::uniformizer_pow(
                                                cfg, -s));
                    }
                }
                out.push_back(b);
            }
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            a[pos] = v;
            rec(pos + 1, rem - v);
        }
    };
    rec(0, k);
    return out;
}

QSeries c_series(const FieldConfig* cfg, const FormEvaluator& ev, int m,
                 int kmax, BmkVariant variant, int lprime) {
    QSeries qs;
    qs.coeff.assign(kmax + 1, CycloLaurent::zero());
    qs.indeterminate.assign(kmax + 1, false);
    for (int k = 0; k <= kmax; ++k) {
        for (const MatF& b : bmk_reps(cfg, m, k, variant, lprime)) {
            FormValue v = ev(b.embed(m));
            if (v.indeterminate) {
                qs.indeterminate[k] = true;
                break;
            }
            qs.coeff[k] = qs.coeff[k] + v.value;
        }
        if (qs.indeterminate[k]) qs.coeff[k] = CycloLaurent::zero();
    }
    return qs;
}

// ---------------------------------------------------------------
// Ring patterns

bool in_ring_R(const MatF& x, int c, int e) {
    int n = x.size();
    if (n % 2 != 0) throw std::invalid_argument("in_ring_R: even size only");
    int m = n / 2;
    int l = c - (m - 1) * e;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int need = 0;
            if (i >= m && j < m) need = (i == n - 1) ? l : e; // C block
            if (i == n - 1 && j >= m && j < n - 1) need = l;  // D last row
            if (!x.at(i, j).in_ideal(need)) return false;
        }
    return true;
}

bool in_ring_R_star(const MatF& x, int c, int e) {
    int n = x.size();
    if (n % 2 != 0)
        throw std::invalid_argument("in_ring_R_star: even size only");
    int m = n / 2;
    int l = c - (m - 1) * e;
    int lp = l - e;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            int need = 0;
            if (i < m) { // A and B blocks share the corner pattern
                int bi = i, bj = j % m;
                if (bi > 0 && bj == 0) need = lp;
                else if (bi == 0 && bj > 0) need = -lp;
            } else if (j < m) { // C block: first column p^l, rest p^e
                need = (j == 0) ? l : e;
            } else { // D block: first column below the corner in p^l
                int bi = i - m, bj = j - m;
                if (bi > 0 && bj == 0) need = l;
            }
            if (!x.at(i, j).in_ideal(need)) return false;
        }
    return true;
}

// ---------------------------------------------------------------
// Schwartz blocks

int SchwartzBlock::dim() const {
    switch (kind) {
    case SchwartzKind::Chi0: return 1;
    case SchwartzKind::PhiChiCirc: return m - 1;
    case SchwartzKind::PhiChiL: return m;
    default: return 2 * m;
    }
}

SchwartzBlock SchwartzBlock::char_R(const FieldConfig* cfg, int m, int c,
                                    int e) {
    SchwartzBlock b;
    b.kind = SchwartzKind::CharR;
    b.cfg = cfg;
    b.m = m;
    b.c = c;
    b.e_unramified = e;
    return b;
}

SchwartzBlock SchwartzBlock::char_R_star(const FieldConfig* cfg, int m, int c,
                                         int e) {
    SchwartzBlock b = char_R(cfg, m, c, e);
    b.kind = SchwartzKind::CharRStar;
    return b;
}

SchwartzBlock SchwartzBlock::chi0(const MultChar& chi) {
    SchwartzBlock b;
    b.kind = SchwartzKind::Chi0;
    b.cfg = chi.config();
    b.m = 1;
    b.c = chi.conductor();
    b.chi = chi;
    return b;
}

SchwartzBlock SchwartzBlock::phi_chi_circ(const MultChar& chi, int m) {
    SchwartzBlock b;
    b.kind = SchwartzKind::PhiChiCirc;
    b.cfg = chi.config();
    b.m = m;
    b.c = m * chi.conductor();
    b.chi = chi;
    return b;
}

SchwartzBlock SchwartzBlock::phi_chi_l(const MultChar& chi, int m, int c) {
    SchwartzBlock b;
    b.kind = SchwartzKind::PhiChiL;
    b.cfg = chi.config();
    b.m = m;
    b.c = c;
    b.chi = chi;
    return b;
}

SchwartzBlock SchwartzBlock::phi_c(const FieldConfig* cfg, int m, int c,
                                   const std::optional<MultChar>& chi) {
    SchwartzBlock b;
    b.kind = SchwartzKind::PhiC;
    b.cfg = cfg;
    b.m = m;
    b.c = c;
    b.chi = chi;
    return b;
}

SchwartzBlock SchwartzBlock::phi_star_explicit(
    const FieldConfig* cfg, int m, int c, const std::optional<MultChar>& chi,
    const AdditiveChar& psi) {
    SchwartzBlock b;
    b.kind = SchwartzKind::PhiStarExplicit;
    b.cfg = cfg;
    b.m = m;
    b.c = c;
    b.chi = chi;
    b.psi = psi;
    return b;
}

namespace {

// chi_0(x) = Ch(x; O^x) chi(x); inverse variant uses chi(x^{-1}).
CycloLaurent chi0_value(const MultChar& chi, const PadicScalar& x,
                        bool inverse) {
    if (x.is_zero() || !x.is_unit()) return CycloLaurent::zero();
    return chi.value(inverse ? x.inverse() : x);
}

// phi_chi_circ on M_{m-1} (star variant drops the p^e twist and inverts
// the character on the diagonal).
CycloLaurent phi_circ_value(const MultChar& chi, const MatF& x, bool star) {
    const FieldConfig* cfg = x.config();
    int r = x.size();
    CycloLaurent acc = CycloLaurent::one();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            if (i == j) continue;
            if (!x.at(i, j).is_integral()) return CycloLaurent::zero();
        }
    PadicScalar tw = PadicScalar::uniformizer_pow(cfg, chi.conductor());
    for (int i = 0; i < r; ++i) {
        CycloLaurent f = star ? chi0_value(chi, x.at(i, i), true)
                              : chi0_value(chi, tw * x.at(i, i), false);
        if (f.is_zero()) return CycloLaurent::zero();
        acc = acc * f;
    }
    return acc;
}

// Average of phi_chi_circ(x u) over SL_{r}(O), realized at the residue
// depth that the integrand provably does not see past.
CycloLaurent sl_average(const MultChar& chi, const MatF& x, bool star) {
    int r = x.size();
    if (r == 0) return CycloLaurent::one();
    if (r == 1) return phi_circ_value(chi, x, star);
    int depth = std::max(1, chi.conductor());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            const PadicScalar& v = x.at(i, j);
            if (!v.is_zero() && v.valuation() < 0)
                depth = std::max(depth, -v.valuation());
        }
    std::vector<MatF> us = sl_residue_lifts(x.config(), r, depth);
    CycloLaurent acc;
    for (const MatF& u : us) acc = acc + phi_circ_value(chi, x * u, star);
    return acc * Rational(1, static_cast<long long>(us.size()));
}

// phi_{chi,l} on M_m: window on the (p^{-l}) last column / integral last
// row, chi_0(p^e w) on the corner, SL average on the leading block.
CycloLaurent phi_chi_l_value(const MultChar& chi, int l, const MatF& v) {
    const FieldConfig* cfg = v.config();
    int m = v.size();
    for (int i = 0; i + 1 < m; ++i) {
        if (!v.at(i, m - 1).in_ideal(-l)) return CycloLaurent::zero();
        if (!v.at(m - 1, i).is_integral()) return CycloLaurent::zero();
    }
    PadicScalar tw = PadicScalar::uniformizer_pow(cfg, chi.conductor());
    CycloLaurent corner = chi0_value(chi, tw * v.at(m - 1, m - 1), false);
    if (corner.is_zero() || m == 1) return corner;
    return corner * sl_average(chi, v.leading_block(m - 1), false);
}

// phi*_{chi,l} on M_m: corner chi_0^{-1} at the (0,0) slot, integral
// first row, p^l first column, starred SL average on the trailing block.
CycloLaurent phi_chi_l_star_value(const MultChar& chi, int l, const MatF& v) {
    int m = v.size();
    for (int j = 1; j < m; ++j) {
        if (!v.at(0, j).is_integral()) return CycloLaurent::zero();
        if (!v.at(j, 0).in_ideal(l)) return CycloLaurent::zero();
    }
    CycloLaurent corner = chi0_value(chi, v.at(0, 0), true);
    if (corner.is_zero() || m == 1) return corner;
    return corner * sl_average(chi, v.block(1, 1, m - 1), true);
}

} // namespace

CycloLaurent schwartz_eval(const SchwartzBlock& block, const MatF& x) {
    if (x.size() != block.dim())
        throw std::invalid_argument("schwartz_eval: wrong ambient size");
    const FieldConfig* cfg = block.cfg;
    int m = block.m, c = block.c, e = block.e(), l = block.l();
    switch (block.kind) {
    case SchwartzKind::CharR:
        return in_ring_R(x, c, e) ? CycloLaurent::one() : CycloLaurent::zero();
    case SchwartzKind::CharRStar:
        return in_ring_R_star(x, c, e) ? CycloLaurent::one()
                                       : CycloLaurent::zero();
    case SchwartzKind::Chi0:
        return chi0_value(*block.chi, x.at(0, 0), false);
    case SchwartzKind::PhiChiCirc:
        return phi_circ_value(*block.chi, x, false);
    case SchwartzKind::PhiChiL:
        return phi_chi_l_value(*block.chi, l, x);
    case SchwartzKind::PhiC: {
        if (!block.chi || !block.chi->is_ramified())
            return in_ring_R(x, c, 0) ? CycloLaurent::one()
                                      : CycloLaurent::zero();
        MatF rest = x;
        MatF b(cfg, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                b.set(i, j, x.at(i, m + j));
                rest.set(i, m + j, PadicScalar(cfg));
            }
        if (!in_ring_R(rest, c, e)) return CycloLaurent::zero();
        return phi_chi_l_value(*block.chi, l, b);
    }
    case SchwartzKind::PhiStarExplicit: {
        bool ram = block.chi && block.chi->is_ramified();
        // shared pattern: R* conditions on the A, B, C blocks; the
        // b_{j1} column condition at p^l (unramified) or p^{-l} (ramified)
        int col_l = ram ? -l : l;
        for (int j = 1; j < m; ++j)
            if (!x.at(j, m).in_ideal(col_l)) return CycloLaurent::zero();
        MatF probe = x;
        if (ram) { // blank the D block before the R* pattern test
            for (int i = m; i < 2 * m; ++i)
                for (int j = m; j < 2 * m; ++j)
                    probe.set(i, j, PadicScalar(cfg));
        }
        if (!in_ring_R_star(probe, c, e)) return CycloLaurent::zero();
        if (!ram) return CycloLaurent::one();
        CycloLaurent dpart =
            phi_chi_l_star_value(*block.chi, l, x.block(m, m, m));
        if (dpart.is_zero()) return dpart;
        GaussSumValue g = gauss_sum_unit_shell(
            *block.chi, *block.psi, PadicScalar::uniformizer_pow(cfg, -e));
        CycloLaurent gm = CycloLaurent::one();
        for (int i = 0; i < m; ++i) gm = gm * g.finite;
        return gm * dpart;
    }
    }
    throw std::logic_error("schwartz_eval: unknown kind");
}

// ---------------------------------------------------------------
// Lattice sampling and the Fourier transform

std::size_t SampledFn::cells() const {
    std::size_t P = 1, total = 1;
    for (int i = 0; i < window.A + window.B; ++i) P *= cfg->p();
    for (int i = 0; i < d * d; ++i) total *= P;
    return total;
}

MatF SampledFn::cell_point(std::size_t idx) const {
    long long P = ipow(static_cast<long long>(cfg->p()), window.A + window.B);
    long long den = ipow(static_cast<long long>(cfg->p()), window.A);
    MatF y(cfg, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            long long num = static_cast<long long>(
                idx % static_cast<std::size_t>(P));
            idx /= static_cast<std::size_t>(P);
            if (num != 0) y.set(i, j, S(cfg, num, den));
        }
    return y;
}

SampledFn sample_fn(const FieldConfig* cfg, int d, LatticeWindow window,
                    const std::function<CycloLaurent(const MatF&)>& rule) {
    if (window.A + window.B < 1)
        throw std::invalid_argument("sample_fn: window A+B >= 1 required");
    SampledFn f;
    f.cfg = cfg;
    f.d = d;
    f.window = window;
    f.rule = rule;
    std::size_t total = f.cells();
    if (total > 2000000)
        throw BudgetExceeded("sample_fn: window cell cap exceeded");
    f.values.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx)
        f.values.push_back(rule(f.cell_point(idx)));
    return f;
}

SampledFn sample_block(const SchwartzBlock& block, LatticeWindow window) {
    return sample_fn(block.cfg, block.dim(), window,
                     [block](const MatF& x) { return schwartz_eval(block, x); });
}

CycloLaurent fourier_at(const SampledFn& f, const AdditiveChar& psi,
                        const MatF& x) {
    const FieldConfig* cfg = f.cfg;
    CycloLaurent acc;
    std::size_t total = f.values.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (f.values[idx].is_zero()) continue;
        MatF y = f.cell_point(idx);
        std::vector<PadicScalar> terms;
        terms.reserve(f.d * f.d);
        for (int i = 0; i < f.d; ++i)
            for (int j = 0; j < f.d; ++j) {
                PadicScalar t = y.at(i, j) * x.at(j, i);
                if (!t.is_zero()) terms.push_back(t);
            }
        acc = acc + f.values[idx] * psi.value_of_sum(terms);
    }
    long long volden = ipow(static_cast<long long>(cfg->p()),
                            f.d * f.d * f.window.B);
    return acc * Rational(1, volden);
}

SampledFn fourier(const SampledFn& f, const AdditiveChar& psi) {
    const FieldConfig* cfg = f.cfg;
    const int d = f.d, A = f.window.A, B = f.window.B;
    const long long p = static_cast<long long>(cfg->p());
    const long long P = ipow(p, A + B);
    const std::size_t total = f.values.size();

    // Leakage probes: support must stay inside p^{-A} M and the function
    // must be constant on p^B M cells.
    std::uint64_t seed = 0x5eed5eedULL ^ static_cast<std::uint64_t>(P);
    PadicScalar outer = PadicScalar::uniformizer_pow(cfg, -(A + 1));
    PadicScalar inner = PadicScalar::uniformizer_pow(cfg, B);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            MatF probe(cfg, d);
            probe.set(i, j, outer);
            if (!f.rule(probe).is_zero())
                throw WindowTooSmall("fourier: support leaks past p^{-A}");
        }
    for (int trial = 0; trial < 12; ++trial) {
        std::size_t idx = lcg_next(seed) % total;
        int i = static_cast<int>(lcg_next(seed) % d);
        int j = static_cast<int>(lcg_next(seed) % d);
        MatF y = f.cell_point(idx);
        MatF yo = y, yi = y;
        yo.set(i, j, y.at(i, j) + outer);
        if (!f.rule(yo).is_zero())
            throw WindowTooSmall("fourier: support leaks past p^{-A}");
        yi.set(i, j, y.at(i, j) + inner);
        if (!(f.rule(yi) == f.values[idx]))
            throw WindowTooSmall("fourier: function varies inside p^B cells");
    }

    // collect nonzero cells with their integer numerators; bucket by a
    // small table of distinct values so the inner loop is pure integer
    // work (one exponent-count array per distinct value).
    struct Cell {
        std::vector<long long> num; // d*d numerators of y * p^A
        std::size_t vid;
    };
    std::vector<CycloLaurent> distinct;
    std::vector<Cell> nz;
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (f.values[idx].is_zero()) continue;
        Cell cell;
        cell.num.resize(d * d);
        std::size_t rest = idx;
        for (int pos = 0; pos < d * d; ++pos) {
            cell.num[pos] =
                static_cast<long long>(rest % static_cast<std::size_t>(P));
            rest /= static_cast<std::size_t>(P);
        }
        cell.vid = distinct.size();
        for (std::size_t v = 0; v < distinct.size(); ++v)
            if (distinct[v] == f.values[idx]) {
                cell.vid = v;
                break;
            }
        if (cell.vid == distinct.size()) distinct.push_back(f.values[idx]);
        nz.push_back(std::move(cell));
    }

    std::vector<Cyclo> psi_pow(static_cast<std::size_t>(P));
    for (long long t = 0; t < P; ++t)
        psi_pow[static_cast<std::size_t>(t)] =
            psi.value(t == 0 ? PadicScalar(cfg) : S(cfg, t, P));

    Rational vol(1, ipow(p, d * d * B));
    SampledFn out;
    out.cfg = cfg;
    out.d = d;
    out.window = {B, A};
    out.values.reserve(total);
    std::vector<long long> counts(distinct.size() *
                                  static_cast<std::size_t>(P));
    for (std::size_t xidx = 0; xidx < total; ++xidx) {
        std::vector<long long> nx(d * d);
        std::size_t rest = xidx;
        for (int pos = 0; pos < d * d; ++pos) {
            nx[pos] = static_cast<long long>(
                rest % static_cast<std::size_t>(P));
            rest /= static_cast<std::size_t>(P);
        }
        std::fill(counts.begin(), counts.end(), 0);
        for (const Cell& cell : nz) {
            long long t = 0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    t = (t + cell.num[i * d + j] * nx[j * d + i]) % P;
            ++counts[cell.vid * static_cast<std::size_t>(P) +
                     static_cast<std::size_t>(t)];
        }
        CycloLaurent acc;
        for (std::size_t v = 0; v < distinct.size(); ++v) {
            Cyclo phase;
            for (long long t = 0; t < P; ++t) {
                long long cnt = counts[v * static_cast<std::size_t>(P) +
                                       static_cast<std::size_t>(t)];
                if (cnt != 0)
                    phase = phase +
                            psi_pow[static_cast<std::size_t>(t)] *
                                Rational(cnt);
            }
            if (!phase.is_zero()) acc = acc + distinct[v] * phase;
        }
        out.values.push_back(acc * vol);
    }

    // Exact pointwise rule for arbitrary arguments.  Outside p^{-B} M the
    // true transform of the (already leakage-checked) function vanishes,
    // while the raw cell sum does not; inside, digits past p^A do not
    // change the cell sum, so it is the exact transform there.
    SampledFn base = f; // keep the cell data alive in the closure
    int suppB = B;
    out.rule = [base, psi, suppB](const MatF& x) {
        for (int i = 0; i < x.size(); ++i)
            for (int j = 0; j < x.size(); ++j)
                if (!x.at(i, j).in_ideal(-suppB)) return CycloLaurent::zero();
        return fourier_at(base, psi, x);
    };
    return out;
}

// ---------------------------------------------------------------
// phi-star comparison

std::string PhiStarReport::str() const {
    std::ostringstream os;
    os << (pass() ? "PASS" : "FAIL") << ": " << points << " points, "
       << support_points << " on support, " << mismatches << " mismatches"
       << ", ratio "
       << (ratio_constant ? (ratio.is_zero() ? ratio_num.str() + " / " +
                                                   ratio_den.str()
                                             : ratio.str())
                          : std::string("not constant"));
    return os.str();
}

PhiStarReport phi_star_compare(const FieldConfig* cfg, int m, int c,
                               const std::optional<MultChar>& chi,
                               const AdditiveChar& psi, LatticeWindow window,
                               std::size_t scan_budget) {
    int e = (chi && chi->is_ramified()) ? chi->conductor() : 0;
    int l = c - (m - 1) * e;
    int n = 2 * m;
    SchwartzBlock phic = SchwartzBlock::phi_c(cfg, m, c, chi);
    SampledFn sampled = sample_block(phic, window);
    SampledFn sharp = fourier(sampled, psi);
    MatF ups = elem_upsilon(cfg, m, e, c);
    MatF upsinv = ups.inverse();
    MatF wn = elem_w_anti(cfg, n);
    SchwartzBlock expl = SchwartzBlock::phi_star_explicit(cfg, m, c, chi, psi);

    // The transform is zero outside p^{-A'} M and constant on cosets of
    // p^{B'} M (y ranges over p^{-B'} M, so tr(y delta) is integral for
    // delta in p^{B'} M); memoize it per cell of the dual lattice.
    std::map<std::string, CycloLaurent> sharp_cells;
    auto sharp_value = [&](const MatF& x) {
        int Ao = sharp.window.A, Bo = sharp.window.B;
        std::string key;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const PadicScalar& v = x.at(i, j);
                if (!v.in_ideal(-Ao)) return CycloLaurent::zero();
                PadicScalar shifted =
                    v * PadicScalar::uniformizer_pow(cfg, Ao);
                key += std::to_string(shifted.residue(Ao + Bo)) + ",";
            }
        auto it = sharp_cells.find(key);
        if (it != sharp_cells.end()) return it->second;
        CycloLaurent val = sharp.rule(x);
        sharp_cells.emplace(std::move(key), val);
        return val;
    };

    PhiStarReport rep;
    auto probe = [&](const MatF& x) {
        CycloLaurent lhs = sharp_value(upsinv * x.transpose() * wn);
        CycloLaurent rhs = schwartz_eval(expl, x);
        ++rep.points;
        if (lhs.is_zero() && rhs.is_zero()) return;
        ++rep.support_points;
        if (lhs.is_zero() != rhs.is_zero()) {
            ++rep.mismatches;
            return;
        }
        if (rep.ratio_num.is_zero() && rep.ratio_den.is_zero()) {
            rep.ratio_num = lhs;
            rep.ratio_den = rhs;
            return;
        }
        if (!(lhs * rep.ratio_den == rhs * rep.ratio_num)) ++rep.mismatches;
    };
    auto scan_window = [&](LatticeWindow scan, std::size_t budget,
                           std::uint64_t seed) {
        SampledFn scanidx; // only for the indexing helpers
        scanidx.cfg = cfg;
        scanidx.d = n;
        scanidx.window = scan;
        std::size_t totalcells = 1;
        std::size_t P = 1;
        for (int i = 0; i < scan.A + scan.B; ++i) P *= cfg->p();
        bool overflow = false;
        for (int i = 0; i < n * n; ++i) {
            if (totalcells > (std::size_t(1) << 62) / P) {
                overflow = true;
                break;
            }
            totalcells *= P;
        }
        if (overflow) totalcells = std::size_t(1) << 62;
        bool exhaustive = totalcells <= budget;
        std::size_t count = exhaustive ? totalcells : budget;
        for (std::size_t step = 0; step < count; ++step) {
            std::size_t idx = exhaustive ? step : lcg_next(seed) % totalcells;
            probe(scanidx.cell_point(idx));
        }
    };
    // pass 1: a window hugging the declared support (exhaustive when small)
    scan_window({std::max(0, l - e), std::max({l, e, 1})}, scan_budget / 2,
                0xfeedbeefULL + static_cast<std::uint64_t>(c));
    // pass 2: a pole margin beyond the support, mostly zero checks
    scan_window({std::max(1, l - e + 1), std::max({l, e, 1})}, scan_budget / 2,
                0xbead5eedULL + static_cast<std::uint64_t>(c));
    rep.ratio_constant = rep.support_points > 0 && rep.mismatches == 0;
    if (rep.ratio_constant && rep.ratio_den.is_constant() &&
        !rep.ratio_den.is_zero())
        rep.ratio = rep.ratio_num * rep.ratio_den.constant_value().inverse();
    return rep;
}

// ---------------------------------------------------------------
// The four-stage averaging construction

namespace {

struct MemoEval {
    std::function<FormValue(const MatF&)> fn;
    std::shared_ptr<std::map<std::string, FormValue>> memo =
        std::make_shared<std::map<std::string, FormValue>>();

    FormValue operator()(const MatF& g) const {
        std::string key = mat_key(g);
        auto it = memo->find(key);
        if (it != memo->end()) return it->second;
        FormValue v = fn(g);
        (*memo)[key] = v;
        return v;
    }
};

CycloLaurent invert_single_term(const CycloLaurent& v) {
    const auto& coeffs = v.coefficients();
    if (coeffs.size() != 1)
        throw NormalizationZero(
            "j_pi_average: normalizer is not a single-term value");
    return CycloLaurent::monomial(coeffs.begin()->second.inverse(),
                                  -coeffs.begin()->first);
}

} // namespace

FormEvaluator j_pi_average(const FieldConfig* cfg, const FormEvaluator& ev,
                           const MultChar& chi, int c, int n) {
    if (n % 2 != 0 || n < 2)
        throw std::invalid_argument("j_pi_average: n must be even, >= 2");
    int m = n / 2;
    int e = chi.conductor();
    if (c < m * e)
        throw std::invalid_argument("j_pi_average: level c >= m e required");
    int l = c - (m - 1) * e;
    long long p = static_cast<long long>(cfg->p());

    if (e == 0) {
        FormValue norm = ev(MatF::identity(cfg, n));
        if (norm.indeterminate || norm.value.is_zero())
            throw NormalizationZero(
                "j_pi_average: value at the identity is zero/indeterminate");
        CycloLaurent inv = invert_single_term(norm.value);
        return [ev, inv](const MatF& g) {
            FormValue v = ev(g);
            if (v.indeterminate) return v;
            return FormValue::of(v.value * inv);
        };
    }

    // stage 1: unit-tuple average against chi
    long long pe = ipow(p, e);
    std::vector<long long> units;
    for (long long u = 1; u < pe; ++u)
        if (u % p != 0) units.push_back(u);
    std::size_t tuples = 1;
    for (int i = 0; i + 1 < m; ++i) tuples *= units.size();

    MemoEval stage1;
    stage1.fn = [cfg, ev, chi, m, n, e, p, pe, units, tuples](const MatF& g) {
        CycloLaurent acc;
        for (std::size_t step = 0; step < tuples; ++step) {
            std::size_t rest = step;
            long long prod = 1;
            std::vector<PadicScalar> entries;
            for (int i = 0; i < m - 1; ++i) {
                long long t = units[rest % units.size()];
                rest /= units.size();
                prod = (prod * t) % pe;
                entries.push_back(
                    S(cfg, t) *
                    PadicScalar::uniformizer_pow(cfg, -(m - 1 - i) * e));
            }
            MatF T = MatF::identity(cfg, n);
            if (m >= 2) T.set_block(m, m, elem_u(cfg, entries));
            FormValue v = ev(g * T);
            if (v.indeterminate) return FormValue::indet();
            Cyclo chiinv = chi.unit_value(
                static_cast<std::uint64_t>(mod_inverse(prod, pe)));
            acc = acc + v.value * chiinv;
        }
        return FormValue::of(acc *
                             Rational(1, static_cast<long long>(tuples)));
    };

    // stage 2: right translate by diag(1_m, delta_m^{-1})
    MatF D2 = MatF::identity(cfg, n);
    D2.set_block(m, m, elem_delta(cfg, m, e).inverse());
    MemoEval stage2;
    stage2.fn = [stage1, D2](const MatF& g) { return stage1(g * D2); };

    // stage 3: compact block average
    std::vector<MatF> us = sl_residue_lifts(cfg, m - 1, (n - 4) * e);
    long long xmod = ipow(p, (m - 2) * e);
    long long ymod = ipow(p, c - l);
    std::vector<MatF> blocks;
    {
        std::size_t xtuples = 1, ytuples = 1;
        for (int i = 0; i + 1 < m; ++i) {
            xtuples *= static_cast<std::size_t>(xmod);
            ytuples *= static_cast<std::size_t>(ymod);
        }
        if (us.size() * xtuples * ytuples > 200000)
            throw BudgetExceeded("j_pi_average: stage-3 average too large");
        for (const MatF& u : us)
            for (std::size_t xi = 0; xi < xtuples; ++xi)
                for (std::size_t yi = 0; yi < ytuples; ++yi) {
                    MatF W = MatF::identity(cfg, n);
                    if (m >= 2) W.set_block(m, m, u);
                    std::size_t xr = xi, yr = yi;
                    for (int i = 0; i + 1 < m; ++i) {
                        long long xv = static_cast<long long>(
                            xr % static_cast<std::size_t>(xmod));
                        xr /= static_cast<std::size_t>(xmod);
                        long long yv = static_cast<long long>(
                            yr % static_cast<std::size_t>(ymod));
                        yr /= static_cast<std::size_t>(ymod);
                        if (xv != 0) W.set(m + i, n - 1, S(cfg, xv));
                        if (yv != 0)
                            W.set(n - 1, m + i,
                                  S(cfg, yv) *
                                      PadicScalar::uniformizer_pow(cfg, l));
                    }
                    blocks.push_back(W);
                }
    }
    MemoEval stage3;
    stage3.fn = [stage2, blocks](const MatF& g) {
        CycloLaurent acc;
        for (const MatF& W : blocks) {
            FormValue v = stage2(g * W);
            if (v.indeterminate) return FormValue::indet();
            acc = acc + v.value;
        }
        return FormValue::of(
            acc * Rational(1, static_cast<long long>(blocks.size())));
    };

    // stage 4: upper-right block average over M_m(O) mod p^{n-2}
    long long bmod = ipow(p, n - 2);
    std::size_t btuples = 1;
    for (int i = 0; i < m * m; ++i) {
        btuples *= static_cast<std::size_t>(bmod);
        if (btuples > 200000)
            throw BudgetExceeded("j_pi_average: stage-4 average too large");
    }
    MemoEval stage4;
    stage4.fn = [cfg, stage3, m, n, bmod, btuples](const MatF& g) {
        CycloLaurent acc;
        for (std::size_t step = 0; step < btuples; ++step) {
            MatF B = MatF::identity(cfg, n);
            std::size_t rest = step;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    long long v = static_cast<long long>(
                        rest % static_cast<std::size_t>(bmod));
                    rest /= static_cast<std::size_t>(bmod);
                    if (v != 0) B.set(i, m + j, S(cfg, v));
                }
            FormValue v = stage3(g * B);
            if (v.indeterminate) return FormValue::indet();
            acc = acc + v.value;
        }
        return FormValue::of(
            acc * Rational(1, static_cast<long long>(btuples)));
    };

    FormValue norm = stage4(MatF::identity(cfg, n));
    if (norm.indeterminate || norm.value.is_zero())
        throw NormalizationZero(
            "j_pi_average: value at the identity is zero/indeterminate");
    CycloLaurent inv = invert_single_term(norm.value);
    return [stage4, inv](const MatF& g) {
        FormValue v = stage4(g);
        if (v.indeterminate) return v;
        return FormValue::of(v.value * inv);
    };
}

FormEvaluator j_pi_dual(const FieldConfig* cfg, const FormEvaluator& ev,
                        int m, int e, int c) {
    MatF wn = elem_w_anti(cfg, 2 * m);
    MatF ups = elem_upsilon(cfg, m, e, c);
    return [ev, wn, ups](const MatF& g) {
        return ev(wn * g.inverse().transpose() * ups);
    };
}

} // namespace shalika
