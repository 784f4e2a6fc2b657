// Compositional form evaluator: pointwise lift decisions, theta / Xi
// integrals as certified lattice sums, support predictions and the
// transformation laws.
//
// Oracle discipline: every frozen constant below was derived by hand in
// exact arithmetic (shell-by-shell character sums), independently of the
// implementation, before the implementation was run.  Where the derived
// value disagrees with the constant printed in the source text, the test
// asserts the derived value and the discrepancy is documented (see the
// repository notes); the acceptance harness reports the source constants
// separately.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shalika/mirabolic.hpp"

#include <random>

using namespace shalika;

namespace {

PadicScalar S(const FieldConfig* cfg, long long num, long long den = 1) {
    return PadicScalar::from_rational(cfg, num, den);
}

CycloLaurent CL(long long num, long long den = 1) {
    return CycloLaurent(Rational(num, den));
}

// The 4x4 upper-unipotent point with (0,2) = y and (1,2) = z (a Shalika
// element of P_4).
MatF Vyz(const FieldConfig* cfg, const PadicScalar& y, const PadicScalar& z) {
    MatF v = MatF::identity(cfg, 4);
    v.set(0, 2, y);
    v.set(1, 2, z);
    return v;
}

// Random element of P_n(O) from integral elementary operations.
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

TruncationPolicy tight_policy() {
    TruncationPolicy pol;
    pol.radius = 2;
    pol.mesh = 2;
    pol.shell_depth = 1;
    return pol;
}

} // namespace

TEST_CASE("xi_eval: frozen values on P_n") {
    FieldConfig cfg(3, 12);
    // Identity: 1.
    CHECK(xi_eval(MatF::identity(&cfg, 3)) == CL(1));
    // Non-unit diagonal: 0.
    MatF d = MatF::uniformizer_diag(&cfg, {1, -1, 0}).embed(1);
    CHECK(xi_eval(d) == CL(0));
    // Superdiagonal 1/p: psi(1/p) = zeta_p.
    MatF u = MatF::identity(&cfg, 2);
    u.set(0, 1, S(&cfg, 1, 3));
    CHECK(xi_eval(u) == CycloLaurent(Cyclo::root_of_unity(3, 1)));
    // Right P(O)-invariance of the leaf.
    std::mt19937 rng(7);
    MatF g = MatF::identity(&cfg, 4);
    g.set(0, 1, S(&cfg, 1, 3));
    g.set(2, 3, S(&cfg, 2, 3));
    for (int t = 0; t < 5; ++t) {
        MatF k = random_pk(&cfg, 4, rng);
        CHECK(xi_eval(g * k) == xi_eval(g));
    }
    // Non-mirabolic input is rejected.
    MatF bad = MatF::uniformizer_diag(&cfg, {0, 1});
    CHECK_THROWS_AS(xi_eval(bad), std::invalid_argument);
}

TEST_CASE("phi lift: pointwise support decisions") {
    FieldConfig cfg(3, 12);
    TruncationPolicy pol = tight_policy();
    FormPtr phi0 = FormNode::phi_lift(FormNode::xi_leaf(&cfg, 2), 0);

    // Block point diag(a, a, 1, 1)-type with middle column x: in the
    // support iff a is a unit (and then the value is xi_2-clean).
    auto block_point = [&](const PadicScalar& a, const PadicScalar& x) {
        MatF M = MatF::identity(&cfg, 4);
        M.set(0, 0, a);
        M.set(1, 1, a);
        M.set(2, 1, x);
        return M;
    };
    PadicScalar one = S(&cfg, 1), p1 = S(&cfg, 3), u2 = S(&cfg, 2);
    CHECK(phi0->evaluate(block_point(one, S(&cfg, 0)), pol).value == CL(1));
    CHECK(phi0->evaluate(block_point(u2, one), pol).value == CL(1));
    // Middle block not a unit: vanishes (both directions).
    CHECK(phi0->evaluate(block_point(p1, one), pol).value == CL(0));
    CHECK(phi0->evaluate(block_point(S(&cfg, 1, 3), one), pol).value == CL(0));
    // Unipotent data surfaces through psi: the (1,2)/(2,3) ladder entries.
    MatF u = MatF::identity(&cfg, 4);
    u.set(1, 2, S(&cfg, 1, 3));
    CHECK(phi0->evaluate(u, pol).value ==
          CycloLaurent(Cyclo::root_of_unity(3, 1)));
    MatF w = MatF::identity(&cfg, 4);
    w.set(2, 3, S(&cfg, 1, 3));
    CHECK(phi0->evaluate(w, pol).value ==
          CycloLaurent(Cyclo::root_of_unity(3, 1)));

    // Congruence lift l >= 1: the same block point needs a = 1 mod p^l.
    FormPtr phi1 = FormNode::phi_lift(FormNode::xi_leaf(&cfg, 2), 1);
    CHECK(phi1->evaluate(block_point(one, p1), pol).value == CL(1));
    CHECK(phi1->evaluate(block_point(S(&cfg, 4), p1), pol).value == CL(1));
    CHECK(phi1->evaluate(block_point(u2, p1), pol).value == CL(0));
    CHECK(phi1->evaluate(block_point(one, one), pol).value == CL(0));
}

TEST_CASE("theta of a congruence lift at the identity: q^{-2lm}") {
    // theta(phi^{(l)} xi_2)(eta^{-1}) integrates the section over the
    // congruence cell {v = e mod p^l} times the x-cell p^l O, each of
    // Lebesgue volume q^{-lm}; with m = 1 the value is q^{-2l}.
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        MultChar chi = MultChar::unramified(&cfg);
        TruncationPolicy pol = tight_policy();
        MatF etainv = elem_h_perm(&cfg, 3, 1).embed(1).inverse();
        for (int l : {1, 2}) {
            FormPtr th = FormNode::theta(
                FormNode::phi_lift(FormNode::xi_leaf(&cfg, 2), l), chi, 1, 4);
            CHECK(th->evaluate(etainv, pol).value ==
                  CL(1, static_cast<long long>(cfg.p_pow(2 * l))));
        }
    }
}

TEST_CASE("section integrals: the -q^{-m} identity") {
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        AdditiveChar psi(&cfg);
        for (int m : {1, 2}) {
            // c has one coordinate of valuation -1; psi(v c^t) integrated
            // over the primitive sector of O^m is -q^{-m}.
            for (int i = 0; i < m; ++i) {
                std::vector<PadicScalar> c(m, PadicScalar(&cfg));
                c[i] = S(&cfg, 1, static_cast<long long>(q));
                CycloLaurent got = primitive_sector_integral(
                    &cfg, m, 2, [&](const std::vector<PadicScalar>& v) {
                        std::vector<PadicScalar> terms;
                        for (int j = 0; j < m; ++j) terms.push_back(v[j] * c[j]);
                        return CycloLaurent(psi.value_of_sum(terms));
                    });
                CHECK(got == CL(-1, static_cast<long long>(cfg.p_pow(m))));
            }
        }
    }
}

TEST_CASE("double character integral over the shell pair") {
    // integral over y in p^{-2}O^m (coordinate i deep, others integral) of
    // psi(-z*_i y_i) against the x-shell R_{i,1}.  Derived by direct shell
    // decomposition: the inner x-integral is (q^{-1}-q^{-2}) on y_i in
    // p^{-1}O and -q^{-2} on the o(y_i) = -2 shell, and pairing with the
    // unramified psi(-z^{-1} y) gives (1 - q^{-1}) + q^{-1} = 1 exactly
    // (not the source text's (1-q)/q^2; see the repository notes).
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        AdditiveChar psi(&cfg);
        for (int m : {1, 2}) {
            int i = 0;
            // z has o(z_i) = -1, so z*_i = z_i^{-1} has valuation +1.
            PadicScalar zstar = S(&cfg, static_cast<long long>(q));
            CycloLaurent total;
            // y: coordinate i over p^{-2}O at mesh 2, others over O.
            auto yi_reps = box_representatives(&cfg, 1, -2, 2);
            auto yo_reps = box_representatives(&cfg, 1, 0, 2);
            Rational ycell = Rational(1, cfg.p_pow(2));
            std::function<void(int, std::vector<PadicScalar>&)> loop =
                [&](int coord, std::vector<PadicScalar>& y) {
                    if (coord == m) {
                        // inner x over the valuation-1 shell of coord i,
                        // others over O.
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
                                    inner = inner +
                                            CycloLaurent(
                                                psi.value_of_sum(terms)) *
                                                w;
                                    return;
                                }
                                auto& reps = c2 == i ? xi_reps : yo_reps;
                                Rational cw = c2 == i ? xs
                                                      : Rational(1, cfg.p_pow(2));
                                for (auto& r : reps) {
                                    x[c2] = r[0];
                                    xloop(c2 + 1, x, w * cw);
                                }
                            };
                        std::vector<PadicScalar> x(m, PadicScalar(&cfg));
                        Rational w0(1);
                        xloop(0, x, w0);
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
            // Each y-cell has volume q^{-2} per coordinate: fold it in.
            Rational yw(1);
            for (int j = 0; j < m; ++j) yw *= ycell;
            CHECK(total * yw == CL(1));
        }
    }
}

TEST_CASE("essential form at level 4, unramified: identity values") {
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr j4 = essential_form(4, chi);
        TruncationPolicy pol = tight_policy();
        long long qq = static_cast<long long>(q);
        // Lebesgue section measure: the unit-section cell has volume
        // 1 - 1/q, so J(1) = 1 - 1/q; the PK normalization rescales the
        // cell to mass 1.
        CHECK(j4->evaluate(MatF::identity(&cfg, 4), pol).value ==
              CL(qq - 1, qq));
        TruncationPolicy pk = pol;
        pk.measure = CosetMeasure::PKOne;
        CHECK(j4->evaluate(MatF::identity(&cfg, 4), pk).value == CL(1));
        // Integral points of P_4: same value (right invariance).
        std::mt19937 rng(11);
        for (int t = 0; t < 3; ++t) {
            MatF k = random_pk(&cfg, 4, rng);
            CHECK(j4->evaluate(k, pk).value == CL(1));
        }
    }
}

TEST_CASE("essential form: Shalika equivariance and right invariance") {
    FieldConfig cfg(3, 12);
    TruncationPolicy pol = tight_policy();
    std::mt19937 rng(23);
    for (bool ram : {false, true}) {
        MultChar chi = ram ? MultChar::ramified(&cfg, 1, 1)
                           : MultChar::unramified(&cfg);
        FormPtr j4 = essential_form(4, chi);
        std::vector<MatF> points;
        points.push_back(MatF::identity(&cfg, 4));
        points.push_back(elem_g_n(&cfg, 4, chi.conductor()));
        points.push_back(Vyz(&cfg, S(&cfg, 1, 3), S(&cfg, 2, 3)));
        // s in S-circ with unit-determinant upper block: s = [[a,b],[0,a]],
        // a = [[u, c],[0,1]], b arbitrary with bottom row zero.
        std::uniform_int_distribution<long long> cf(-2, 2);
        for (const MatF& pt : points) {
            FormValue base = j4->evaluate(pt, pol);
            for (int t = 0; t < 3; ++t) {
                MatF a = MatF::identity(&cfg, 2);
                a.set(0, 0, S(&cfg, 1 + 3 * cf(rng)));
                a.set(0, 1, S(&cfg, cf(rng)));
                MatF b(&cfg, 2);
                b.set(0, 0, S(&cfg, cf(rng), 3));
                b.set(0, 1, S(&cfg, cf(rng)));
                MatF s(&cfg, 4);
                s.set_block(0, 0, a);
                s.set_block(2, 2, a);
                s.set_block(0, 2, b);
                // J(s p) = (nu chi)(det a) psi(tr(a^{-1} b)) J(p); det a is
                // a unit here so the norm factor is 1.
                CycloLaurent factor = shalika_character(chi, s);
                FormValue lhs = j4->evaluate(s * pt, pol);
                CHECK(lhs.value == base.value * factor);
            }
            // Right P(O)-invariance.
            MatF k = random_pk(&cfg, 4, rng);
            CHECK(j4->evaluate(pt * k, pol).value == base.value);
        }
    }
}

TEST_CASE("essential form vanishes on the block-diagonal weight family") {
    // The reduction family for the unramified support analysis: points
    // u_beta * diag(p^{f1}, p^{f2}) embedded as the upper-left GL_2 block,
    // with f nonzero and f1 + f2 = 0.  All vanish (the one-parameter
    // witness argument), as do the u_beta points with non-integral beta.
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::unramified(&cfg);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    auto block_point = [&](const PadicScalar& beta, int f1) {
        MatF g = MatF::identity(&cfg, 4);
        g.set(0, 0, S(&cfg, f1 >= 0 ? cfg.p_pow(f1) : 1,
                      f1 >= 0 ? 1 : cfg.p_pow(-f1)));
        g.set(1, 1, S(&cfg, f1 <= 0 ? cfg.p_pow(-f1) : 1,
                      f1 <= 0 ? 1 : cfg.p_pow(f1)));
        MatF u = MatF::identity(&cfg, 4);
        u.set(0, 1, beta);
        return u * g;
    };
    for (int f1 : {1, -1, 2}) {
        for (long long bden : {1ll, 3ll}) {
            CHECK(j4->evaluate(block_point(S(&cfg, 1, bden), f1), pol).value ==
                  CL(0));
        }
    }
    // f = 0 but beta non-integral: also outside the support.
    for (long long bden : {3ll, 9ll}) {
        CHECK(j4->evaluate(block_point(S(&cfg, 1, bden), 0), pol).value ==
              CL(0));
        CHECK_FALSE(support_test(chi, block_point(S(&cfg, 1, bden), 0))
                        .in_support);
    }
    // f = 0 and beta integral: in the support, value (1 - 1/q).
    CHECK(j4->evaluate(block_point(S(&cfg, 1), 0), pol).value == CL(2, 3));
}

TEST_CASE("exceptional coset outside the predicted unramified support") {
    // [DERIVED] The unit-determinant point diag(1, p, p^{-1}, 1) lies
    // outside the predicted support coset (hand factorization: any
    // witness forces a non-integral entry in the P(O) factor), yet the
    // exact evaluation gives -(q-1)/q^3: the x-integration localizes on
    // the valuation-1 shell where the unit-character integral of
    // psi(a/x) contributes -1/q against the cell mass (1-1/q)/q.  The
    // value is stable under refinement (checked at radius = mesh = 3,
    // depth 2) and the form remains equivariant and right-invariant at
    // this point, so the predicted-support predicate is a strict
    // under-approximation here; see the repository notes.
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        long long Q = static_cast<long long>(q);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr j4 = essential_form(4, chi);
        TruncationPolicy pol = tight_policy();
        MatF g = MatF::identity(&cfg, 4);
        g.set(1, 1, S(&cfg, Q));
        g.set(2, 2, S(&cfg, 1, Q));
        CHECK(j4->evaluate(g, pol).value == CL(-(Q - 1), Q * Q * Q));
        CHECK_FALSE(support_test(chi, g).in_support);
    }
    // The ramified analogue does vanish.
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::ramified(&cfg, 1, 1);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    MatF g = MatF::identity(&cfg, 4);
    g.set(1, 1, S(&cfg, 3));
    g.set(2, 2, S(&cfg, 1, 3));
    CHECK(j4->evaluate(g, pol).value == CL(0));
    CHECK(j4->evaluate(g * elem_g_n(&cfg, 4, 1), pol).value == CL(0));
}

TEST_CASE("support grid agreement, unramified (level 4)") {
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::unramified(&cfg);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    std::mt19937 rng(37);
    int nonzero = 0, zero = 0;
    std::vector<MatF> grid;
    grid.push_back(MatF::identity(&cfg, 4));
    grid.push_back(Vyz(&cfg, S(&cfg, 1, 3), S(&cfg, 1, 3)));
    grid.push_back(Vyz(&cfg, S(&cfg, 2), S(&cfg, 1, 9)));
    grid.push_back(MatF::uniformizer_diag(&cfg, {1, -1, 0}).embed(1));
    grid.push_back(MatF::uniformizer_diag(&cfg, {1, 0, -1}).embed(1));
    for (int t = 0; t < 6; ++t) {
        MatF k1 = random_pk(&cfg, 4, rng);
        grid.push_back(Vyz(&cfg, S(&cfg, t % 3, 3), S(&cfg, 1, 3)) * k1);
    }
    for (const MatF& g : grid) {
        bool val_nonzero = !j4->evaluate(g, pol).value.is_zero();
        SupportResult sr = support_test(chi, g);
        CHECK(val_nonzero == sr.in_support);
        if (sr.in_support) {
            ++nonzero;
            REQUIRE(sr.witness.has_value());
            CHECK((sr.witness->s * sr.witness->p).equals(g));
            CHECK(subgroup_member(sr.witness->s,
                                  {Subgroup::S_circ, 0, 0, 0, 0, {}}));
        } else {
            ++zero;
        }
    }
    CHECK(nonzero >= 3);
    CHECK(zero >= 2);
}

TEST_CASE("support grid agreement, ramified (level 4, q = 3, e = 1)") {
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::ramified(&cfg, 1, 1);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    std::mt19937 rng(41);
    MatF g4 = elem_g_n(&cfg, 4, 1);
    int nonzero = 0, zero = 0;
    std::vector<MatF> grid;
    grid.push_back(g4);
    grid.push_back(MatF::identity(&cfg, 4));
    grid.push_back(Vyz(&cfg, S(&cfg, 1, 3), S(&cfg, 1, 3)));
    for (int t = 0; t < 4; ++t) {
        grid.push_back(g4 * random_pk(&cfg, 4, rng));
        grid.push_back(Vyz(&cfg, S(&cfg, t, 3), S(&cfg, 1 + t, 3)) * g4);
    }
    for (const MatF& g : grid) {
        bool val_nonzero = !j4->evaluate(g, pol).value.is_zero();
        SupportResult sr = support_test(chi, g);
        CHECK(val_nonzero == sr.in_support);
        if (sr.in_support) ++nonzero; else ++zero;
    }
    CHECK(nonzero >= 5);
    CHECK(zero >= 2);
}

TEST_CASE("tower form agrees with the two-step recursion (50 points)") {
    FieldConfig cfg(3, 12);
    TruncationPolicy pol = tight_policy();
    std::mt19937 rng(53);
    std::uniform_int_distribution<long long> cf(-2, 2);
    for (bool ram : {false, true}) {
        MultChar chi = ram ? MultChar::ramified(&cfg, 1, 1)
                           : MultChar::unramified(&cfg);
        FormPtr a = essential_form(4, chi);
        FormPtr b = lambda_tower_form(4, chi);
        for (int t = 0; t < 25; ++t) {
            MatF g = Vyz(&cfg, S(&cfg, cf(rng), 3), S(&cfg, cf(rng), 3)) *
                     random_pk(&cfg, 4, rng);
            if (t % 3 == 0) g = elem_g_n(&cfg, 4, chi.conductor()) * g;
            FormValue va = a->evaluate(g, pol);
            FormValue vb = b->evaluate(g, pol);
            CHECK(va.value == vb.value);
        }
    }
}

TEST_CASE("Xi integral of the essential form at the identity") {
    // Hand-derived by shell decomposition (twice: directly through the
    // lift, and through the one-variable reduction): with the Lebesgue
    // section measure the z-in-O region contributes 1 - 1/q and the
    // o(z) = -1 shell contributes +1/q, so the value is exactly 1; the PK
    // normalization rescales both terms by q/(q-1).  The source text's
    // closed form 1 - (q-1)/q^3 is not reproduced by exact integration in
    // either normalization (see the repository notes and the acceptance
    // report).
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr xi_of_j = omega_apply(4, essential_form(4, chi));
        TruncationPolicy pol = tight_policy();
        CHECK(xi_of_j->evaluate(MatF::identity(&cfg, 4), pol).value == CL(1));
        TruncationPolicy pk = pol;
        pk.measure = CosetMeasure::PKOne;
        long long qq = static_cast<long long>(q);
        CHECK(xi_of_j->evaluate(MatF::identity(&cfg, 4), pk).value ==
              CL(qq, qq - 1));
    }
}

TEST_CASE("the z-slice integral of the Xi reduction is -1/q (m = 1)") {
    // J_z = int over y of J(h^{-1} V(y, z)) at o(z) = -1: the y-sum
    // localizes the inner x-variable and leaves the unit-shell character
    // integral, which is -1/q (independently derived from the one-variable
    // reduction; the source text prints m(q-1)/q^{m+2} here).
    for (std::uint64_t q : {2ull, 3ull}) {
        FieldConfig cfg(q, 12);
        MultChar chi = MultChar::unramified(&cfg);
        FormPtr j4 = essential_form(4, chi);
        TruncationPolicy pol = tight_policy();
        MatF hinv = elem_h_perm(&cfg, 3, 1).embed(1).inverse();
        PadicScalar z = S(&cfg, 1, static_cast<long long>(q));
        CycloLaurent got = box_integral(
            &cfg, 1, -pol.radius, pol.mesh,
            [&](const std::vector<PadicScalar>& y) {
                return j4->evaluate(hinv * Vyz(&cfg, y[0], z), pol).value;
            });
        CHECK(got == CL(-1, static_cast<long long>(q)));
    }
}

TEST_CASE("sp_extend: Shalika-mirabolic extension and indeterminacy") {
    // The extension is well defined only for children that already
    // transform by chi_psi under the overlap S cap P, so the child here
    // is the essential form (the factorization chosen internally may
    // differ from the one used to build the test point).
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::unramified(&cfg);
    TruncationPolicy pol = tight_policy();
    FormPtr j4 = essential_form(4, chi);
    FormPtr ext = FormNode::sp_extend(j4, chi);
    // On P_4 it restricts to the child, whatever factorization is picked.
    MatF u = MatF::identity(&cfg, 4);
    u.set(0, 1, S(&cfg, 1, 3));
    u.set(1, 2, S(&cfg, 2));
    CHECK(ext->evaluate(u, pol).value == j4->evaluate(u, pol).value);
    // s outside P_4 (lower-triangular unit block a): the character factor
    // appears against the child value.
    MatF a = MatF::identity(&cfg, 2);
    a.set(1, 0, S(&cfg, 1));
    MatF b(&cfg, 2);
    b.set(0, 1, S(&cfg, 1, 3));
    MatF s(&cfg, 4);
    s.set_block(0, 0, a);
    s.set_block(2, 2, a);
    s.set_block(0, 2, b);
    CHECK(ext->evaluate(s * u, pol).value ==
          j4->evaluate(u, pol).value * shalika_character(chi, s));
    // Outside S P the value is the explicit Indeterminate marker: the
    // cycle (1 4) permutation admits no Shalika-mirabolic factorization.
    MatF w = MatF::permutation(&cfg, {3, 1, 2, 0});
    FormValue out = ext->evaluate(w, pol);
    CHECK(out.indeterminate);
}

TEST_CASE("translate nodes") {
    FieldConfig cfg(3, 12);
    MultChar chi = MultChar::unramified(&cfg);
    FormPtr j4 = essential_form(4, chi);
    TruncationPolicy pol = tight_policy();
    MatF g = Vyz(&cfg, S(&cfg, 1, 3), S(&cfg, 2, 3));
    FormPtr tl = FormNode::translate(j4, g, FormNode::Side::Left);
    FormPtr tr = FormNode::translate(j4, g, FormNode::Side::Right);
    MatF pt = MatF::identity(&cfg, 4);
    CHECK(tl->evaluate(pt, pol).value == j4->evaluate(g, pol).value);
    CHECK(tr->evaluate(pt, pol).value == j4->evaluate(g, pol).value);
}

TEST_CASE("closed form nodes are pinned constants") {
    FieldConfig cfg(2, 12);
    FormPtr c = FormNode::closed_form(&cfg, 4, CL(7, 8));
    TruncationPolicy pol = tight_policy();
    CHECK(c->evaluate(MatF::identity(&cfg, 4), pol).value == CL(7, 8));
}
