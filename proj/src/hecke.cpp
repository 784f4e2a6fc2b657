#include "shalika/hecke.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace shalika {

namespace {

PadicScalar S(const FieldConfig* cfg, long long num, long long den = 1) {
    return PadicScalar::from_rational(cfg, num, den);
}

MatF elementary(const FieldConfig* cfg, int n, int i, int j,
                const PadicScalar& t) {
    MatF e = MatF::identity(cfg, n);
    e.set(i, j, t);
    return e;
}

// Generators of the level group, dense in it: elementary integral
// transvections (with the congruence-depth bottom row at Gamma level),
// adjacent transpositions of the unconstrained rows, and one-entry
// diagonal units whose closure generates the unit group topologically.
std::vector<MatF> level_generators(const FieldConfig* cfg,
                                   const HeckeDescriptor& desc) {
    int n = desc.matrix_size();
    bool gamma = desc.level == HeckeLevel::Gamma;
    std::vector<MatF> gens;
    long long pc = gamma ? static_cast<long long>(cfg->p_pow(desc.c)) : 1;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            long long scale = (gamma && i == n - 1 && j < n - 1) ? pc : 1;
            gens.push_back(elementary(cfg, n, i, j, S(cfg, scale)));
            gens.push_back(elementary(cfg, n, i, j, S(cfg, -scale)));
        }
    }
    int perm_rows = gamma ? n - 1 : n;
    for (int i = 0; i + 1 < perm_rows; ++i) {
        std::vector<int> w(n);
        for (int k = 0; k < n; ++k) w[k] = k;
        std::swap(w[i], w[i + 1]);
        gens.push_back(MatF::permutation(cfg, w));
    }
    for (long long u : {-1ll, 2ll, 3ll}) {
        if (u % static_cast<long long>(cfg->p()) == 0) continue;
        for (int i = 0; i < n; ++i) {
            MatF d = MatF::identity(cfg, n);
            d.set(i, i, S(cfg, u));
            gens.push_back(d);
        }
    }
    return gens;
}

bool in_level_group(const MatF& g, const HeckeDescriptor& desc) {
    if (desc.level == HeckeLevel::Maximal) return g.in_K();
    return subgroup_member(g, {Subgroup::Gamma, desc.c, 0, 0, 0, {}});
}

// Factor the canonical (Hermite) representative of the coset as
// u * diag(p^d) with u upper unitriangular (entries of u need not be
// integral: for non-minuscule weights some cosets have no representative
// with u in N cap K, e.g. [[p,1],[0,p]] inside the (2,0)-double coset).
void unipotent_diagonal_shape(const MatF& rep, std::vector<int>& d, MatF& u) {
    HermiteResult hr = hermite_column(rep);
    int n = rep.size();
    const FieldConfig* cfg = rep.config();
    d.assign(n, 0);
    u = MatF::identity(cfg, n);
    for (int i = 0; i < n; ++i) {
        d[i] = hr.H.at(i, i).valuation();
        for (int j = i + 1; j < n; ++j) {
            const PadicScalar& x = hr.H.at(i, j);
            if (!x.is_zero()) u.set(i, j, x * hr.H.at(j, j).inverse());
        }
    }
}

void validate_descriptor(const HeckeDescriptor& desc) {
    if (desc.r < 1) throw std::invalid_argument("hecke: rank must be >= 1");
    if (static_cast<int>(desc.f.size()) != desc.r)
        throw std::invalid_argument("hecke: weight length mismatch");
    DominantWeight check(desc.f); // validates monotone nonnegative
    for (int fi : desc.f)
        if (fi > 4)
            throw std::invalid_argument("hecke: weight entries capped at 4");
    if (desc.level == HeckeLevel::Gamma) {
        if (desc.c < 1)
            throw std::invalid_argument("hecke: Gamma level needs c >= 1");
        // The weight must be a * h_i.
        int a = desc.f[0];
        for (int fi : desc.f)
            if (fi != 0 && fi != a)
                throw std::invalid_argument(
                    "hecke: Gamma level supports weights a * h_i only");
    }
}

} // namespace

DominantWeight::DominantWeight(std::vector<int> weights) : f(std::move(weights)) {
    for (size_t i = 0; i < f.size(); ++i) {
        if (f[i] < 0)
            throw std::invalid_argument("DominantWeight: negative entry");
        if (i + 1 < f.size() && f[i] < f[i + 1])
            throw std::invalid_argument("DominantWeight: not nonincreasing");
    }
}

DominantWeight DominantWeight::h(int i, int r) {
    if (i < 0 || i > r) throw std::invalid_argument("h_i: bad index");
    std::vector<int> f(r, 0);
    for (int k = 0; k < i; ++k) f[k] = 1;
    return DominantWeight(f);
}

int lex_compare(const std::vector<int>& f, const std::vector<int>& fp) {
    if (f.size() != fp.size())
        throw std::invalid_argument("lex_compare: length mismatch");
    for (int i = static_cast<int>(f.size()) - 1; i >= 0; --i) {
        if (f[i] != fp[i]) return f[i] < fp[i] ? -1 : 1;
    }
    return 0;
}

std::vector<MatF> hecke_cosets(const FieldConfig* cfg,
                               const HeckeDescriptor& desc) {
    validate_descriptor(desc);
    int n = desc.matrix_size();
    MatF start = desc.level == HeckeLevel::Maximal
                     ? MatF::uniformizer_diag(cfg, desc.f)
                     : MatF::uniformizer_diag(cfg, desc.f).embed(1);
    std::vector<MatF> gens = level_generators(cfg, desc);

    // BFS over left translation; dedup by exact coset membership
    // alpha^{-1} beta in the level group, bucketed by the K-coset key to
    // keep the pairwise tests short.
    std::vector<MatF> reps;
    std::vector<MatF> rep_inverses;
    std::map<std::string, std::vector<size_t>> buckets;
    const size_t cap = 200000;
    auto try_insert = [&](const MatF& g) -> bool {
        std::string key = coset_key(g);
        auto& bucket = buckets[key];
        MatF ginv = g.inverse();
        for (size_t idx : bucket) {
            if (in_level_group(rep_inverses[idx] * g, desc)) return false;
        }
        bucket.push_back(reps.size());
        reps.push_back(g);
        rep_inverses.push_back(ginv);
        return true;
    };

    try_insert(start);
    std::deque<size_t> frontier{0};
    while (!frontier.empty()) {
        size_t idx = frontier.front();
        frontier.pop_front();
        MatF cur = reps[idx];
        for (const MatF& k : gens) {
            MatF next = k * cur;
            if (reps.size() >= cap)
                throw EnumerationBudgetExceeded(
                    "hecke_cosets: orbit exceeds the enumeration cap");
            if (try_insert(next)) frontier.push_back(reps.size() - 1);
        }
    }

    // Post-verify membership in the double coset (Smith exponents equal
    // the weight) and canonicalize to the Hermite form u * diag(p^d).
    std::vector<int> fd = desc.f;
    if (desc.level == HeckeLevel::Gamma) fd.push_back(0);
    std::sort(fd.begin(), fd.end(), std::greater<int>());
    std::vector<MatF> out;
    out.reserve(reps.size());
    for (const MatF& rep : reps) {
        if (cartan(rep).f != fd)
            throw std::logic_error(
                "hecke_cosets: representative outside the double coset");
        std::vector<int> d;
        MatF u = MatF::identity(cfg, n);
        unipotent_diagonal_shape(rep, d, u);
        if (desc.level == HeckeLevel::Gamma && d.back() != 0)
            throw std::logic_error("hecke_cosets: tail exponent not zero");
        out.push_back(u * MatF::uniformizer_diag(cfg, d));
    }
    return out;
}

CycloLaurent hecke_apply(
    const FieldConfig* cfg, const HeckeDescriptor& desc,
    const std::function<CycloLaurent(const MatF&)>& ev, const MatF& g) {
    CycloLaurent total;
    for (const MatF& alpha : hecke_cosets(cfg, desc))
        total = total + ev(g * alpha);
    return total;
}

std::vector<std::pair<std::vector<int>, CycloLaurent>> collapsed_coefficients(
    const FieldConfig* cfg, const HeckeDescriptor& desc,
    const AdditiveChar& psi, const std::vector<int>& f) {
    if (desc.level != HeckeLevel::Gamma)
        throw std::invalid_argument(
            "collapsed_coefficients: Gamma level only");
    if (static_cast<int>(f.size()) != desc.r)
        throw std::invalid_argument("collapsed_coefficients: point length");
    int n = desc.matrix_size();
    std::vector<int> fpad = f;
    fpad.push_back(0);
    MatF pf = MatF::uniformizer_diag(cfg, fpad);
    MatF pfinv = pf.inverse();
    std::map<std::vector<int>, CycloLaurent> acc;
    for (const MatF& alpha : hecke_cosets(cfg, desc)) {
        std::vector<int> d;
        MatF u = MatF::identity(cfg, n);
        unipotent_diagonal_shape(alpha, d, u);
        MatF conj = pf * u * pfinv;
        std::vector<PadicScalar> superdiag;
        for (int i = 0; i + 1 < n; ++i) superdiag.push_back(conj.at(i, i + 1));
        std::vector<int> key(d.begin(), d.end() - 1);
        acc[key] = acc[key] + CycloLaurent(psi.value_of_sum(superdiag));
    }
    std::vector<std::pair<std::vector<int>, CycloLaurent>> out(acc.begin(),
                                                               acc.end());
    return out;
}

bool vanishing_predicate(
    const MatF& g0, const SubgroupDescriptor& H,
    const std::function<CycloLaurent(const MatF&)>& xi,
    const SubgroupDescriptor& K,
    const std::function<CycloLaurent(const MatF&)>& omega, int budget) {
    const FieldConfig* cfg = g0.config();
    int n = g0.size();
    MatF g0inv = g0.inverse();
    long long q = static_cast<long long>(cfg->p());

    auto consume = [&]() {
        if (budget <= 0)
            throw BudgetExceeded("vanishing_predicate: budget exhausted");
        --budget;
    };
    auto check = [&](const MatF& h) -> bool {
        consume();
        if (!subgroup_member(h, H)) return false;
        MatF hc = g0inv * h * g0;
        if (!subgroup_member(hc, K)) return false;
        return !(xi(h) == omega(hc));
    };

    // One-parameter elementary unipotents over a valuation ladder.
    std::vector<PadicScalar> ts;
    for (int k = -3; k <= 3; ++k) {
        long long pk = static_cast<long long>(cfg->p_pow(std::abs(k)));
        for (long long uu = 1; uu <= std::min<long long>(q - 1, 3); ++uu) {
            ts.push_back(k >= 0 ? S(cfg, uu * pk) : S(cfg, uu, pk));
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (const PadicScalar& t : ts)
                if (check(elementary(cfg, n, i, j, t))) return true;
        }
    // One-entry diagonal units (and mild uniformizer powers).
    for (int i = 0; i < n; ++i) {
        for (long long uu : {-1ll, 2ll, 3ll}) {
            if (uu % q == 0) continue;
            MatF d = MatF::identity(cfg, n);
            d.set(i, i, S(cfg, uu));
            if (check(d)) return true;
        }
        for (int k : {-1, 1}) {
            MatF d = MatF::identity(cfg, n);
            d.set(i, i, k > 0 ? S(cfg, q) : S(cfg, 1, q));
            if (check(d)) return true;
        }
    }
    return false;
}

} // namespace shalika
