// Acceptance harness: one line per criterion, exact tolerances pinned in
// code.  Three criteria compare against closed-form constants printed in
// the source text that exact integration does not reproduce (see the
// repository notes); those lines report FAIL (documented) together with
// the independently derived value the implementation does reproduce, and
// the process exit code is 0 exactly when every criterion matches its
// pinned expected outcome -- documented discrepancies are never silently
// turned green, and a documented-red criterion suddenly matching the
// source constant is reported as a change and fails the run.

#include "shalika/characters.hpp"
#include "shalika/hecke.hpp"
#include "shalika/matgroup.hpp"
#include "shalika/matrix.hpp"
#include "shalika/mirabolic.hpp"
#include "shalika/zeta.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

using namespace shalika;

namespace {

PadicScalar S(const FieldConfig* cfg, long long num, long long den = 1) {
    return PadicScalar::from_rational(cfg, num, den);
}

CycloLaurent CL(long long num, long long den = 1) {
    return CycloLaurent(Rational(num, den));
}

TruncationPolicy tight_policy() {
    TruncationPolicy pol;
    pol.radius = 2;
    pol.mesh = 2;
    pol.shell_depth = 1;
    return pol;
}

MatF vyz(const FieldConfig* cfg, const PadicScalar& y, const PadicScalar& z) {
    MatF v = MatF::identity(cfg, 4);
    v.set(0, 2, y);
    v.set(1, 2, z);
    return v;
}

MatF random_pk(const FieldConfig* cfg, int n, std::mt19937& rng) {
    std::uniform_int_distribution<int> pick(0, n - 2);
    std::uniform_int_distribution<long long> coef(-2, 2);
    MatF k = MatF::identity(cfg, n);
    for (int step = 0; step < 6; ++step) {
        int i = pick(rng);
        std::uniform_int_distribution<int> pickj(0, n - 1);
        int j = pickj(rng);
        if (i == j) continue;
        MatF e = MatF::identity(cfg, n);
        e.set(i, j, S(cfg, coef(rng)));
        k = k * e;
    }
    return k;
}

// Exhaustive residue-sum oracle for the integral over O of
// chi(x) psi(p^v x) dx: shells beyond k = max(0, -v) vanish (ramified
// chi), so D = that cap + e digits decide the sum exactly.
CycloLaurent gauss_oracle(const FieldConfig* cfg, const MultChar& chi, int v) {
    int e = chi.conductor();
    int K = std::max(0, -v);
    int D = K + e;
    long long P = static_cast<long long>(cfg->p_pow(D));
    unsigned n = chi.unit_root_exponent(1).first
                     ? static_cast<unsigned>(chi.unit_root_exponent(1).first)
                     : 1u;
    // one root-count table per shell k (terms carry X^k)
    std::vector<std::vector<boost::multiprecision::cpp_int>> counts;
    unsigned M = static_cast<unsigned>(
        std::lcm<long long>(n, static_cast<long long>(cfg->p_pow(K))));
    counts.assign(static_cast<std::size_t>(K) + 1,
                  std::vector<boost::multiprecision::cpp_int>(M, 0));
    for (long long r = 1; r < P; ++r) {
        int k = 0;
        long long u = r;
        while (u % static_cast<long long>(cfg->p()) == 0) {
            u /= static_cast<long long>(cfg->p());
            ++k;
        }
        if (k > K) continue; // tail shells: each vanishes for ramified chi
        auto [nn, du] = chi.unit_root_exponent(static_cast<std::uint64_t>(u));
        unsigned long long expo = du * (M / nn);
        int pole = -(v + k);
        if (pole > 0) {
            long long pt = static_cast<long long>(cfg->p_pow(pole));
            expo += static_cast<unsigned long long>(u % pt) *
                    (M / static_cast<unsigned long long>(pt));
        }
        counts[static_cast<std::size_t>(k)][expo % M] += 1;
    }
    CycloLaurent acc;
    for (int k = 0; k <= K; ++k)
        acc = acc + CycloLaurent::monomial(cyclo_from_root_counts(
                                               M, counts[static_cast<
                                                      std::size_t>(k)]),
                                           k);
    return acc * Rational(1, P);
}

// On-coset products reference * P(O) plus perturbations, n = 4.
std::vector<MatF> support_grid(const FieldConfig* cfg, int e, int count,
                               std::uint64_t seed) {
    std::mt19937 rng(static_cast<unsigned>(seed));
    long long q = static_cast<long long>(cfg->p());
    MatF ref = e > 0 ? elem_g_n(cfg, 4, e) : MatF::identity(cfg, 4);
    std::vector<MatF> grid;
    grid.push_back(ref);
    grid.push_back(MatF::identity(cfg, 4));
    std::uniform_int_distribution<long long> cf(-2, 2);
    while (static_cast<int>(grid.size()) < count) {
        int mode = static_cast<int>(grid.size()) % 4;
        MatF k = random_pk(cfg, 4, rng);
        PadicScalar y = S(cfg, cf(rng), q);
        PadicScalar z = S(cfg, cf(rng), q);
        switch (mode) {
        case 0: grid.push_back(ref * k); break;
        case 1: grid.push_back(vyz(cfg, y, z) * ref * k); break;
        case 2: grid.push_back(vyz(cfg, y, z) * k); break;
        default: {
            MatF d = MatF::uniformizer_diag(cfg, {1, -1, 0}).embed(1);
            grid.push_back(d * k);
            break;
        }
        }
    }
    grid.erase(grid.begin() + count, grid.end());
    return grid;
}

// A random element of the Shalika subgroup intersected with the
// mirabolic: [[a, b], [0, a]] with a integral, unit det, last row e_m.
MatF random_s_circ(const FieldConfig* cfg, int m, std::mt19937& rng) {
    std::uniform_int_distribution<long long> cf(-2, 2);
    long long q = static_cast<long long>(cfg->p());
    for (;;) {
        MatF a = MatF::identity(cfg, m);
        for (int i = 0; i + 1 < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) a.set(i, j, S(cfg, cf(rng)));
        MatF b(cfg, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) b.set(i, j, S(cfg, cf(rng), q));
        if (a.det().is_zero() || !a.det().is_unit()) continue;
        MatF s(cfg, 2 * m);
        s.set_block(0, 0, a);
        s.set_block(m, m, a);
        s.set_block(0, m, b);
        return s;
    }
}

struct Line {
    std::string id;
    std::string title;
    bool expected_pass;   // pinned expectation
    bool computed_pass;   // what the run produced
    std::string note;

    bool as_expected() const { return expected_pass == computed_pass; }
};

std::vector<Line> g_lines;

void report(const std::string& id, const std::string& title,
            bool expected_pass, bool computed_pass, const std::string& note) {
    g_lines.push_back({id, title, expected_pass, computed_pass, note});
    std::ostringstream os;
    os << "criterion " << id << " [" << title << "] ";
    if (computed_pass) {
        os << "PASS";
        if (!expected_pass) os << " (UNEXPECTED: was pinned as documented-red)";
    } else {
        os << (expected_pass ? "FAIL" : "FAIL (documented)");
    }
    if (!note.empty()) os << " -- " << note;
    std::cout << os.str() << std::endl;
}

// -------------------------------------------------------------------
// criteria

void criterion_01() {
    bool ok = true;
    std::string note;
    for (std::uint64_t p : {3ull, 5ull}) {
        FieldConfig cfg(p, 12);
        AdditiveChar psi(&cfg);
        for (int e : {1, 2}) {
            MultChar chi = MultChar::ramified(&cfg, e, 1);
            for (int v = -e - 2; v <= 2; ++v) {
                PadicScalar a = PadicScalar::uniformizer_pow(&cfg, v);
                // support: the unit-shell sum is nonzero iff o(a) = -e
                bool nz = !gauss_sum_unit_shell(chi, psi, a).is_zero();
                if (nz != (v == -e)) { ok = false; note = "support"; }
                // value: the O-integral equals the residue-sum oracle
                GaussSumValue g = gauss_sum(chi, psi, a);
                if (g.has_tail() ||
                    !(g.finite == gauss_oracle(&cfg, chi, v))) {
                    ok = false;
                    note = "oracle";
                }
            }
            // scaling law for the principal-value normalization
            std::mt19937 rng(17 + e + static_cast<int>(p));
            std::uniform_int_distribution<long long> num(1, 50);
            std::uniform_int_distribution<int> val(-2, 2);
            for (int t = 0; t < 25; ++t) {
                long long an = num(rng), bn = num(rng);
                if (an % static_cast<long long>(p) == 0) ++an;
                if (bn % static_cast<long long>(p) == 0) ++bn;
                PadicScalar a = S(&cfg, an) *
                                PadicScalar::uniformizer_pow(&cfg,
                                                             val(rng) - e);
                PadicScalar b = S(&cfg, bn) *
                                PadicScalar::uniformizer_pow(&cfg, val(rng));
                GaussSumValue lhs = gauss_sum_principal(chi, psi, a * b);
                GaussSumValue rhs = gauss_sum_principal(chi, psi, a);
                if (!(lhs.finite * chi.norm_twisted_value(b, 1) ==
                      rhs.finite)) {
                    ok = false;
                    note = "scaling";
                }
            }
        }
    }
    report("01", "gauss sums: support, residue oracle, scaling", true, ok,
           ok ? "p in {3,5}, e in {1,2}, exact equality" : note);
}

void criterion_02() {
    bool ok = true;
    int done = 0;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        long long q = static_cast<long long>(p);
        std::mt19937 rng(29 + static_cast<int>(p));
        std::uniform_int_distribution<int> rr(1, 4), fv(0, 3), pw(0, 3);
        std::uniform_int_distribution<long long> nm(-8, 8);
        for (int t = 0; t < 250; ++t, ++done) {
            int r = rr(rng);
            std::vector<int> f(r);
            for (int& v : f) v = fv(rng);
            std::vector<PadicScalar> x;
            for (int i = 0; i < r; ++i) {
                long long den = 1;
                for (int k = pw(rng); k > 0; --k) den *= q;
                x.push_back(S(&cfg, nm(rng), den));
            }
            LstSide side = t % 2 ? LstSide::Upper : LstSide::Lower;
            LstResult lst = lst_decompose(x, f, side);
            MatF target = side == LstSide::Lower ? elem_ubar(&cfg, x)
                                                 : elem_u(&cfg, x);
            if (!(lst.h * lst.u * lst.d * lst.k).equals(target)) ok = false;
            if (!lst.k.in_K1()) ok = false;
            std::vector<int> hf = f;
            if (side == LstSide::Upper)
                for (int& v : hf) v = -v;
            if (!subgroup_member(lst.h.leading_block(r),
                                 {Subgroup::H, 0, 0, 0, 0, hf}))
                ok = false;
        }
    }
    report("02", "triangular-compact decomposition roundtrip", true, ok,
           std::to_string(done) + " random (x, f), r <= 4, p in {2,3}");
}

void criterion_03() {
    bool ok = true;
    std::string got;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        long long q = static_cast<long long>(p);
        struct Case { int r; std::vector<int> f; long long want; };
        std::vector<Case> cases = {{2, {1, 0}, q + 1},
                                   {2, {2, 0}, q * q + q},
                                   {3, {1, 0, 0}, q * q + q + 1}};
        for (const auto& cse : cases) {
            auto reps = hecke_cosets(
                &cfg, {HeckeLevel::Maximal, cse.r, cse.f, 1});
            got += std::to_string(reps.size()) + " ";
            if (static_cast<long long>(reps.size()) != cse.want) ok = false;
        }
    }
    report("03", "Hecke degrees q+1, q^2+q, q^2+q+1", true, ok,
           "counts " + got + "(p = 2 then 3)");
}

void criterion_04a() {
    bool ok = true;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        AdditiveChar psi(&cfg);
        long long q = static_cast<long long>(p);
        for (int m : {1, 2}) {
            for (int i = 0; i < m; ++i) {
                std::vector<PadicScalar> c(m, PadicScalar(&cfg));
                c[i] = S(&cfg, 1, q);
                CycloLaurent got = primitive_sector_integral(
                    &cfg, m, 2, [&](const std::vector<PadicScalar>& v) {
                        std::vector<PadicScalar> terms;
                        for (int j = 0; j < m; ++j)
                            terms.push_back(v[j] * c[j]);
                        return CycloLaurent(psi.value_of_sum(terms));
                    });
                if (!(got == CL(-1, static_cast<long long>(cfg.p_pow(m)))))
                    ok = false;
            }
        }
    }
    report("04a", "primitive-sector integral equals -q^-m", true, ok,
           "m in {1,2}, p in {2,3}, exact");
}

void criterion_04b() {
    // the shell-pair double integral: exact integration gives 1; the
    // source constant is (1-q)/q^2 and is not reproduced
    bool matches_source = true;
    bool matches_derived = true;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        AdditiveChar psi(&cfg);
        long long q = static_cast<long long>(p);
        for (int m : {1, 2}) {
            int i = 0;
            PadicScalar zstar = S(&cfg, q);
            auto yi_reps = box_representatives(&cfg, 1, -2, 2);
            auto yo_reps = box_representatives(&cfg, 1, 0, 2);
            CycloLaurent total;
            std::function<void(int, std::vector<PadicScalar>&)> loop =
                [&](int coord, std::vector<PadicScalar>& y) {
                    if (coord == m) {
                        CycloLaurent inner;
                        auto xi_reps = shell_representatives(&cfg, 1, 1, 3);
                        Rational xs = Rational(1, cfg.p_pow(3));
                        std::function<void(int, std::vector<PadicScalar>&,
                                           Rational)>
                            xloop = [&](int c2, std::vector<PadicScalar>& x,
                                        Rational w) {
                                if (c2 == m) {
                                    std::vector<PadicScalar> terms;
                                    for (int j = 0; j < m; ++j)
                                        terms.push_back(x[j] * y[j]);
                                    terms.push_back(-(zstar * y[i]));
                                    inner =
                                        inner +
                                        CycloLaurent(psi.value_of_sum(terms)) *
                                            w;
                                    return;
                                }
                                auto& reps = c2 == i ? xi_reps : yo_reps;
                                Rational cw =
                                    c2 == i ? xs : Rational(1, cfg.p_pow(2));
                                for (auto& r : reps) {
                                    x[c2] = r[0];
                                    xloop(c2 + 1, x, w * cw);
                                }
                            };
                        std::vector<PadicScalar> x(m, PadicScalar(&cfg));
                        xloop(0, x, Rational(1));
                        total = total + inner;
                        return;
                    }
                    auto& reps = coord == i ? yi_reps : yo_reps;
                    for (auto& r : reps) {
                        y[coord] = r[0];
                        loop(coord + 1, y);
                    }
                };
            std::vector<PadicScalar> y(m, PadicScalar(&cfg));
            loop(0, y);
            Rational yw(1);
            for (int j = 0; j < m; ++j) yw *= Rational(1, cfg.p_pow(2));
            CycloLaurent got = total * yw;
            if (!(got == CL(1 - q, q * q))) matches_source = false;
            if (!(got == CL(1))) matches_derived = false;
        }
    }
    report("04b", "shell-pair double integral vs source constant (1-q)/q^2",
           false, matches_source,
           matches_derived
               ? "computed exactly 1 (independently derived; see notes)"
               : "computed value matches NEITHER the source nor the "
                 "derived constant");
}

void criterion_05() {
    bool matches_source = true;
    bool matches_derived = true;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        long long q = static_cast<long long>(p);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr xi_of_j = omega_apply(4, essential_form(4, chi));
        CycloLaurent got =
            xi_of_j->evaluate(MatF::identity(&cfg, 4), tight_policy()).value;
        CycloLaurent source = CL(1) - CL(q - 1, q * q * q);
        if (!(got == source)) matches_source = false;
        if (!(got == CL(1))) matches_derived = false;
    }
    report("05", "closed Xi value at the identity vs source 1-(q-1)/q^3",
           false, matches_source,
           matches_derived
               ? "computed exactly 1 in the Lebesgue normalization "
                 "(independently derived; see notes)"
               : "computed value matches NEITHER constant");
}

void criterion_06() {
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::ramified(&cfg, 1, 1);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    std::vector<MatF> grid = support_grid(&cfg, 1, 200, 61);
    std::mt19937 rng(67);
    int agree = 0, transform_ok = 0, transform_checked = 0, on = 0;
    for (const MatF& g : grid) {
        if (g.det().is_zero()) continue;
        CycloLaurent v = j4->evaluate(g, pol).value;
        bool nz = !v.is_zero();
        bool pred = support_test(chi, g).in_support;
        if (nz == pred) ++agree;
        if (nz) {
            ++on;
            if (transform_checked < 40) {
                MatF s = random_s_circ(&cfg, 2, rng);
                ++transform_checked;
                if (j4->evaluate(s * g, pol).value ==
                    shalika_character(chi, s) * v)
                    ++transform_ok;
            }
        }
    }
    bool ok = agree == static_cast<int>(grid.size()) && on >= 20 &&
              transform_ok == transform_checked && transform_checked >= 20;
    report("06", "ramified support grid and character transform", true, ok,
           std::to_string(agree) + "/" + std::to_string(grid.size()) +
               " agree, " + std::to_string(on) + " on support, " +
               std::to_string(transform_ok) + "/" +
               std::to_string(transform_checked) + " transform checks");
}

void criterion_07() {
    // the predicted coset description is a strict under-approximation:
    // the unit-determinant point diag(1, p, 1/p, 1) evaluates to
    // -(q-1)/q^3 but fails the predicted-support predicate
    bool all_agree = true;
    bool counterexample_pinned = true;
    int points = 0, agree = 0;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        long long q = static_cast<long long>(p);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr j4 = essential_form(4, chi);
        TruncationPolicy pol = tight_policy();
        std::vector<MatF> grid = support_grid(&cfg, 0, 100, 71);
        MatF exc = MatF::identity(&cfg, 4);
        exc.set(1, 1, S(&cfg, q));
        exc.set(2, 2, S(&cfg, 1, q));
        grid.push_back(exc);
        for (const MatF& g : grid) {
            if (g.det().is_zero() || !g.det().is_unit()) continue;
            ++points;
            bool nz = !j4->evaluate(g, pol).value.is_zero();
            bool pred = support_test(chi, g).in_support;
            if (nz == pred) ++agree; else all_agree = false;
        }
        CycloLaurent got = j4->evaluate(exc, pol).value;
        if (!(got == CL(-(q - 1), q * q * q)) ||
            support_test(chi, exc).in_support)
            counterexample_pinned = false;
    }
    report("07", "unramified support grid vs the predicted coset", false,
           all_agree,
           std::to_string(agree) + "/" + std::to_string(points) +
               " agree; exceptional coset diag(1,p,1/p,1) evaluates to "
               "-(q-1)/q^3 off the predicted coset" +
               (counterexample_pinned ? " (counterexample pinned)"
                                      : " (COUNTEREXAMPLE NOT REPRODUCED)"));
}

void criterion_08() {
    FieldConfig cfg(3, 12);
    TruncationPolicy pol = tight_policy();
    std::mt19937 rng(53);
    std::uniform_int_distribution<long long> cf(-2, 2);
    bool ok = true;
    int done = 0;
    for (bool ram : {false, true}) {
        MultChar chi = ram ? MultChar::ramified(&cfg, 1, 1)
                           : MultChar::unramified(&cfg);
        FormPtr a = essential_form(4, chi);
        FormPtr b = lambda_tower_form(4, chi);
        for (int t = 0; t < 25; ++t, ++done) {
            MatF g = vyz(&cfg, S(&cfg, cf(rng), 3), S(&cfg, cf(rng), 3)) *
                     random_pk(&cfg, 4, rng);
            if (t % 3 == 0) g = elem_g_n(&cfg, 4, chi.conductor()) * g;
            if (!(a->evaluate(g, pol).value == b->evaluate(g, pol).value))
                ok = false;
        }
    }
    report("08", "two-step recursion agrees with the tower form", true, ok,
           std::to_string(done) + " points, both ramifications, exact");
}

void criterion_09() {
    bool ok = true;
    std::string note;
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        AdditiveChar psi(&cfg);
        PhiStarReport rep =
            phi_star_compare(&cfg, 1, 1, std::nullopt, psi, {0, 2});
        CycloLaurent want(Rational(1, static_cast<long long>(q)));
        if (!(rep.pass() && rep.support_points > 0 && rep.ratio == want))
            ok = false;
        note += "q" + std::to_string(q) + ": " +
                std::to_string(rep.points - rep.support_points) +
                " off-support zeros, ratio q^-1; ";
    }
    {
        FieldConfig cfg(3, 12);
        AdditiveChar psi(&cfg);
        MultChar chi = MultChar::ramified(&cfg, 1, 1);
        PhiStarReport rep = phi_star_compare(&cfg, 1, 1, chi, psi, {1, 1});
        if (!(rep.pass() && rep.support_points > 0 &&
              rep.ratio == CycloLaurent::one()))
            ok = false;
        note += "ramified: ratio 1";
    }
    report("09", "Fourier transform matches the explicit dual block", true,
           ok, note);
}

void criterion_10() {
    bool ok = true;
    for (std::uint64_t p : {2ull, 3ull}) {
        FieldConfig cfg(p, 12);
        long long q = static_cast<long long>(p);
        for (int k = 0; k <= 4; ++k) {
            auto reps = bmk_reps(&cfg, 2, k);
            long long want = 0, qq = 1;
            for (int i = 0; i <= k; ++i) { want += qq; qq *= q; }
            if (static_cast<long long>(reps.size()) != want) ok = false;
            for (const MatF& b : reps)
                if (!subgroup_member(b, {Subgroup::B_pattern, 0, 0, k, 0, {}}))
                    ok = false;
            // pairwise inequivalence = the list is a complete dedup
            if (k <= 2)
                for (std::size_t i = 0; i < reps.size(); ++i)
                    for (std::size_t j = i + 1; j < reps.size(); ++j)
                        if (subgroup_member(reps[i].inverse() * reps[j],
                                            {Subgroup::B_pattern, 0, 0, 0, 0,
                                             {}}))
                            ok = false;
        }
    }
    report("10", "Borel coset counts match (q^{k+1}-1)/(q-1)", true, ok,
           "m = 2, k <= 4 (generating function 1/((1-t)(1-qt)) to t^4)");
}

void criterion_11() {
    bool ok = true;
    FieldConfig cfg(3, 18);
    int e = 1;
    for (int m : {2, 3}) {
        MatF V = (elem_v(&cfg, m, e) * elem_delta(&cfg, m, e)).embed(m);
        MatF Vs = (elem_v_sharp(&cfg, m, e) * elem_delta_sharp(&cfg, m, e))
                      .embed(m);
        auto w = sharp_coset_decompose(V, e);
        if (!w.has_value()) { ok = false; continue; }
        if (!subgroup_member(w->s, {Subgroup::S_circ, 0, 0, 0, 0, {}}))
            ok = false;
        if (!subgroup_member(w->p, {Subgroup::P_integral, 0, 0, 0, 0, {}}))
            ok = false;
        if (!(w->s * Vs * w->p).equals(V)) ok = false;
    }
    report("11", "double-coset identity witness (s, k) found", true, ok,
           "m in {2,3}, e = 1: v delta = s (v# d#) k exactly");
}

void criterion_12() {
    FieldConfig cfg(2, 12);
    MultChar chi = MultChar::unramified(&cfg);
    FormPtr base = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    FormEvaluator ev = [base, pol](const MatF& g) {
        return base->evaluate(g, pol);
    };
    FormEvaluator norm = j_pi_average(&cfg, ev, chi, 1, 4);
    QSeries series = c_series(&cfg, norm, 2, 2);
    bool c0_ok = !series.indeterminate[0] &&
                 series.coeff[0] == CycloLaurent::one();
    bool higher_zero = true;
    for (int k = 1; k <= series.kmax(); ++k)
        if (series.indeterminate[k] || !series.coeff[k].is_zero())
            higher_zero = false;
    report("12", "coefficient series: c_0 = 1, higher terms reported",
           true, c0_ok,
           series.str() +
               (higher_zero ? " (exploratory expectation c_i = 0 met)"
                            : " (FINDING: nonzero higher coefficient, "
                              "flagged not asserted)"));
}

} // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::function<void()>> criteria = {
        criterion_01, criterion_02, criterion_03, criterion_04a,
        criterion_04b, criterion_05, criterion_06, criterion_07,
        criterion_08, criterion_09, criterion_10, criterion_11,
        criterion_12};
    for (auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& ex) {
            report("??", "criterion raised", true, false,
                   std::string("exception: ") + ex.what());
        }
    }
    auto t1 = std::chrono::steady_clock::now();
    int unexpected = 0, documented = 0, passed = 0;
    for (const auto& l : g_lines) {
        if (!l.as_expected()) ++unexpected;
        else if (!l.computed_pass) ++documented;
        else ++passed;
    }
    std::cout << "----\n"
              << passed << " passed, " << documented
              << " documented discrepancies (red vs source constants), "
              << unexpected << " unexpected outcomes; "
              << std::chrono::duration_cast<std::chrono::seconds>(t1 - t0)
                     .count()
              << " s" << std::endl;
    return unexpected == 0 ? 0 : 1;
}
