#include <gtest/gtest.h>

#include <cmath>

#include "nmuon/matrix_sign.hpp"
#include "nmuon/random.hpp"

using namespace nmuon;

namespace {

double sym_spectral(const DenseMatrix& a) { return spectral_norm(SymMatrix::symmetrize(a)); }

double residual_norm(const SymMatrix& kg, const SymMatrix& x) {
    return sym_spectral(DenseMatrix::identity(kg.dim()) - matmul(kg.dense(), x.dense()));
}

// Scalar oracle for one singular value through the quintic map.
double ns5_scalar(double x) {
    for (int i = 0; i < 5; ++i) {
        const double x2 = x * x;
        x = x * (3.4445 - 4.7750 * x2 + 2.0315 * x2 * x2);
    }
    return x;
}

SymMatrix wishart(Rng& rng, std::size_t n, std::size_t samples) {
    SymMatrix k = syrk(gaussian_matrix(rng, n, samples));
    k *= 1.0 / static_cast<double>(samples);
    return k;
}

}  // namespace

TEST(MsgnExact, Examples) {
    const auto a = DenseMatrix::from_rows({{2, 0}, {0, -3}});
    EXPECT_LT((msgn_exact(a) - DenseMatrix::from_rows({{1, 0}, {0, -1}})).max_abs(), 1e-15);
    Rng rng = make_rng(1);
    const auto o = random_orthogonal(rng, 9);
    EXPECT_LT((msgn_exact(o) - o).frobenius_norm(), 1e-12);
    EXPECT_EQ(msgn_exact(DenseMatrix(3, 5)), DenseMatrix(3, 5));
}

TEST(MsgnExact, PreconditionedDisplacementHasUnitSpectrum) {
    Rng rng = make_rng(2);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    std::vector<double> h(12);
    for (double& v : h) v = u(rng);
    const auto d = gaussian_matrix(rng, 12, 20);
    const DenseMatrix s = msgn_exact(matmul(DenseMatrix::diagonal(h), d));
    for (double sv : singular_values(s)) EXPECT_NEAR(sv, 1.0, 1e-9);
}

TEST(MsgnExact, IdempotentScaleInvariantEquivariant) {
    Rng rng = make_rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = gaussian_matrix(rng, 14, 9);
        const DenseMatrix s = msgn_exact(a);
        EXPECT_LT((msgn_exact(s) - s).frobenius_norm(), 1e-9);
        EXPECT_LT((msgn_exact(7.25 * a) - s).frobenius_norm(), 1e-12);
        const auto om = random_orthogonal(rng, 14);
        const auto on = random_orthogonal(rng, 9);
        const DenseMatrix lhs = msgn_exact(matmul(matmul(om, a), on));
        const DenseMatrix rhs = matmul(matmul(om, s), on);
        EXPECT_LT((lhs - rhs).frobenius_norm(), 1e-9);
    }
}

TEST(MsgnExact, RankDeficient) {
    Rng rng = make_rng(4);
    const auto a = matmul(gaussian_matrix(rng, 10, 2), gaussian_matrix(rng, 2, 8));
    const auto sv = singular_values(msgn_exact(a));
    EXPECT_NEAR(sv[0], 1.0, 1e-10);
    EXPECT_NEAR(sv[1], 1.0, 1e-10);
    EXPECT_LT(sv[2], 1e-10);
}

TEST(NewtonSchulz, ZeroThrows) { EXPECT_THROW(newton_schulz5(DenseMatrix(3, 3)), ZeroMatrix); }

TEST(NewtonSchulz, MatchesScalarMapOnSingularValues) {
    Rng rng = make_rng(5);
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{20, 12}, {12, 20}, {16, 16}}) {
        const std::size_t r = std::min(m, n);
        const auto u = random_orthonormal_columns(rng, m, r);
        const auto v = random_orthonormal_columns(rng, n, r);
        std::vector<double> s(r);
        for (std::size_t i = 0; i < r; ++i) s[i] = 1.0 + 0.5 * std::sin(double(i));
        const DenseMatrix a = matmul_nt(matmul(u, DenseMatrix::diagonal(s)), v);
        double fro = 0.0;
        for (double x : s) fro += x * x;
        fro = std::sqrt(fro);
        std::vector<double> f(r);
        for (std::size_t i = 0; i < r; ++i) f[i] = ns5_scalar(s[i] / fro);
        const DenseMatrix want = matmul_nt(matmul(u, DenseMatrix::diagonal(f)), v);
        EXPECT_LT((newton_schulz5(a) - want).frobenius_norm(), 1e-12);
    }
}

TEST(NewtonSchulz, EqualSingularValuesGiveScaledSign) {
    // All singular values equal -> a scalar multiple of msgn. The multiple is
    // the quintic map applied to 1/sqrt(rank).
    Rng rng = make_rng(6);
    const auto o = random_orthogonal(rng, 16);
    const DenseMatrix out = newton_schulz5(3.0 * o);
    const double c = ns5_scalar(0.25);
    EXPECT_NEAR(c, 0.714526, 1e-6);
    EXPECT_LT((out - c * o).frobenius_norm(), 1e-12);
    // The multiple depends on the rank; it never reaches the 0.95-1.05 band.
    for (double rank : {1.0, 2.0, 4.0, 9.0, 64.0, 256.0}) {
        const double m = ns5_scalar(1.0 / std::sqrt(rank));
        EXPECT_GT(m, 0.68);
        EXPECT_LT(m, 1.12);
    }
}

TEST(NewtonSchulz, WellConditionedBand) {
    Rng rng = make_rng(7);
    const auto u = random_orthogonal(rng, 64);
    const auto v = random_orthogonal(rng, 64);
    std::vector<double> s(64);
    for (std::size_t i = 0; i < 64; ++i) s[i] = std::pow(10.0, -double(i) / 63.0);
    const DenseMatrix a = matmul_nt(matmul(u, DenseMatrix::diagonal(s)), v);
    const auto sv = singular_values(newton_schulz5(a));
    EXPECT_GT(sv.back(), 0.68);
    EXPECT_LT(sv.front(), 1.14);
}

TEST(Plans, TableShapes) {
    const auto& plans = builtin_plans();
    ASSERT_EQ(plans.size(), 11u);
    for (const auto& p : plans) EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(plans[1].total_sypp, 13u);
    EXPECT_DOUBLE_EQ(plans[1].s_out, 0.004865);
}

TEST(Plans, EveryPlanCertifies) {
    for (const auto& p : builtin_plans()) {
        const PlanCertificate c = certify_plan(p, 20001);
        EXPECT_LE(c.bound, p.s_out + kPublishedRounding) << p.label();
        EXPECT_GE(c.padded_bound, c.bound) << p.label();
        EXPECT_EQ(c.stage_bounds.size(), p.steps.size());
        EXPECT_NO_THROW(verify_plan(p, 20001));
    }
}

TEST(Plans, FrozenChainedBounds) {
    // Values from an independent NumPy evaluation at 200001 grid points.
    const auto& plans = builtin_plans();
    EXPECT_NEAR(verify_plan(plans[4]), 0.047094, 1e-6);
    EXPECT_LE(verify_plan(plans[4]), 0.047094 + kPublishedRounding);
    EXPECT_NEAR(verify_plan(plans[6]), 0.002087, 1e-6);
    EXPECT_NEAR(verify_plan(plans[1]), 0.004865, 1e-6);
}

TEST(Plans, CorruptedPlanIsRejected) {
    for (const auto& p : builtin_plans()) EXPECT_THROW(verify_plan(corrupt_plan(p), 20001), PlanViolation);
}

TEST(Plans, GridTooCoarse) { EXPECT_THROW(certify_plan(builtin_plans()[0], 100), Error); }

TEST(Plans, JsonRoundTrip) {
    const auto back = plans_from_json(plans_to_json(builtin_plans()));
    ASSERT_EQ(back.size(), builtin_plans().size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].epsilon, builtin_plans()[i].epsilon);
        EXPECT_EQ(back[i].s_out, builtin_plans()[i].s_out);
        EXPECT_EQ(back[i].total_sypp, builtin_plans()[i].total_sypp);
        for (std::size_t k = 0; k < back[i].steps.size(); ++k)
            EXPECT_EQ(back[i].steps[k].coeffs, builtin_plans()[i].steps[k].coeffs);
    }
    EXPECT_THROW(plans_from_json("[{\"epsilon\": 0.1}]"), ConfigError);
}

TEST(Plans, Selection) {
    EXPECT_THROW(select_plan(0.001), MarginTooSmall);
    const PolyPlan& p = select_plan(0.5);
    EXPECT_DOUBLE_EQ(p.epsilon, 0.025);
    EXPECT_DOUBLE_EQ(p.s_out, 0.008458);
    EXPECT_DOUBLE_EQ(select_plan(0.007).s_out, 0.002087);
    EXPECT_EQ(select_plan(0.007, 8).total_sypp, 8u);
    EXPECT_DOUBLE_EQ(select_plan(0.0016).s_out, 0.004865);
}

TEST(PolyInverse, ZeroMatrixGivesIdentity) {
    for (const auto& p : builtin_plans()) {
        const SymMatrix x = poly_inverse(SymMatrix(6), 1.0, p);
        EXPECT_LE((x.dense() - DenseMatrix::identity(6)).max_abs(), p.s_out);
    }
}

TEST(PolyInverse, WishartExample) {
    Rng rng = make_rng(8);
    const SymMatrix k = wishart(rng, 64, 256);
    const double gamma = 0.05 * k.trace() / 64.0;
    const PolyPlan& plan = builtin_plans()[8];
    ASSERT_DOUBLE_EQ(plan.s_out, 0.008118);
    PolyInverseInfo info;
    const SymMatrix x = poly_inverse(k, gamma, plan, &info);
    EXPECT_GE(info.margin, plan.epsilon);
    SymMatrix kg = k;
    kg.add_diagonal(gamma);
    EXPECT_LE(residual_norm(kg, x), plan.s_out);
    const SymMatrix c = cholesky_inverse(kg);
    EXPECT_LE(sym_spectral(x.dense() - c.dense()) / spectral_norm(c), 2.0 * plan.s_out);
}

TEST(PolyInverse, MarginTooSmall) {
    const double d[] = {100.0, 1.0};
    EXPECT_THROW(poly_inverse(SymMatrix::diagonal(d), 1e-3, builtin_plans()[9]), MarginTooSmall);
}

TEST(PolyInverse, MonteCarloAgainstCertificate) {
    Rng rng = make_rng(9);
    std::uniform_real_distribution<double> stretch(1.0, 3.0);
    for (const auto& plan : builtin_plans()) {
        for (int trial = 0; trial < 8; ++trial) {
            const SymMatrix k = random_spd(rng, 24, 1e6);
            const double lmax = sym_eig(k).values.front();
            const double c = stretch(rng) * 1.05 * plan.epsilon / (1.0 - 1.05 * plan.epsilon);
            const double gamma = c * lmax;
            const SymMatrix x = poly_inverse(k, gamma, plan);
            EXPECT_TRUE(x.exactly_symmetric());
            SymMatrix kg = k;
            kg.add_diagonal(gamma);
            EXPECT_LE(residual_norm(kg, x), plan.s_out) << plan.label();
        }
    }
}

TEST(PolyInverse, AutoSelection) {
    Rng rng = make_rng(10);
    const SymMatrix k = wishart(rng, 16, 64);
    PolyInverseInfo info;
    const SymMatrix x = poly_inverse(k, 0.2 * k.trace() / 16.0, std::nullopt, &info);
    ASSERT_NE(info.plan, nullptr);
    EXPECT_LE(info.plan->epsilon, info.margin);
    SymMatrix kg = k;
    kg.add_diagonal(0.2 * k.trace() / 16.0);
    EXPECT_LE(residual_norm(kg, x), info.plan->s_out);
}
