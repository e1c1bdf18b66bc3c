#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numeric>

#include "nmuon/matrix_sign.hpp"
#include "nmuon/score.hpp"

using namespace nmuon;

namespace {

TripletInstance random_instance(Rng& rng, std::size_t m, std::size_t n, std::size_t big_n) {
    return TripletInstance::from_activations(random_spd(rng, m, 50.0), gaussian_matrix(rng, m, n),
                                             gaussian_matrix(rng, n, big_n));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double nuclear(const DenseMatrix& a) {
    const auto s = singular_values(a);
    return std::accumulate(s.begin(), s.end(), 0.0);
}

}  // namespace

TEST(Triplet, Validation) {
    Rng rng = make_rng(1);
    const TripletInstance inst = random_instance(rng, 5, 7, 20);
    EXPECT_NO_THROW(inst.validate());
    EXPECT_EQ(inst.N, 20u);
    TripletInstance bad = inst;
    bad.G(0, 0) += 1.0;
    EXPECT_THROW(bad.validate(), Error);
    // N < n leaves Z Z^T singular.
    EXPECT_THROW(random_instance(rng, 5, 7, 4), NotPositiveDefinite);
    EXPECT_THROW(TripletInstance::from_second_moment(SymMatrix::identity(3), DenseMatrix(3, 4), SymMatrix::identity(3)),
                 DimensionMismatch);
}

TEST(Score, IdentityInstance) {
    const DenseMatrix d = DenseMatrix::from_rows({{1.0, -2.0}, {0.5, 3.0}});
    const auto inst = TripletInstance::from_second_moment(SymMatrix::identity(2), d, SymMatrix::identity(2));
    EXPECT_NEAR(score(inst.G, inst), std::pow(d.frobenius_norm(), 2), 1e-12);
    EXPECT_THROW(score(DenseMatrix(2, 2), inst), DegenerateDirection);
}

TEST(Score, ScaleInvariance) {
    Rng rng = make_rng(2);
    const TripletInstance inst = random_instance(rng, 6, 9, 30);
    const DenseMatrix q = gaussian_matrix(rng, 6, 9);
    const double s = score(q, inst);
    for (double c : {-3.0, 1e-3, 7.5}) EXPECT_LT(rel(score(c * q, inst), s), 1e-12);
}

TEST(Score, NewtonEqualsDisplacementForm) {
    Rng rng = make_rng(3);
    for (int t = 0; t < 10; ++t) {
        const TripletInstance inst = random_instance(rng, 8, 11, 40);
        const auto s = six_direction_scores(inst);
        EXPECT_LT(rel(s[5], score_newton_closed(inst)), 1e-9);
        // N tr(Q G^T) with the unnormalized inverse (Z Z^T)^{-1}.
        const DenseMatrix q = matmul(cholesky_inverse(inst.H), matmul(inst.G, cholesky_inverse(syrk(inst.Z))));
        EXPECT_LT(rel(double(inst.N) * inner(q, inst.G), s[5]), 1e-9);
    }
}

TEST(Score, ClosedFormsMatchDirect) {
    Rng rng = make_rng(4);
    for (int t = 0; t < 10; ++t) {
        const TripletInstance inst = random_instance(rng, 7, 10, 25);
        EXPECT_LT(rel(score_gd_closed(inst), score(inst.G, inst)), 1e-9);
        EXPECT_LT(rel(score_muon_closed(inst), score(msgn_exact(inst.G), inst)), 1e-9);
    }
}

TEST(Score, IsotropicClosedForms) {
    Rng rng = make_rng(5);
    const DenseMatrix d = gaussian_matrix(rng, 6, 6);
    const double lambda = 2.5;
    const auto inst = TripletInstance::from_second_moment(SymMatrix::identity(6, lambda), d, SymMatrix::identity(6));
    EXPECT_LT(rel(score_gd_closed(inst), lambda * std::pow(d.frobenius_norm(), 2)), 1e-12);
    const auto unit = TripletInstance::from_second_moment(SymMatrix::identity(6), d, SymMatrix::identity(6));
    EXPECT_LT(rel(score_muon_closed(unit), std::pow(nuclear(d), 2) / 6.0), 1e-10);
}

TEST(Score, NewtonIsOptimal) {
    Rng rng = make_rng(6);
    for (int t = 0; t < 20; ++t) {
        const TripletInstance inst = random_instance(rng, 6, 8, 12);
        const auto s = six_direction_scores(inst);
        for (std::size_t k = 0; k < 5; ++k) EXPECT_GE(s[5], s[k] - 1e-9 * s[5]) << to_string(kAllDirections[k]);
        EXPECT_GE(s[5], score(gaussian_matrix(rng, 6, 8), inst));
    }
}

TEST(Score, ProportionalSecondMomentMakesNewtonMuonMuon) {
    Rng rng = make_rng(7);
    const auto inst = TripletInstance::from_second_moment(random_spd(rng, 5, 10.0), gaussian_matrix(rng, 5, 7),
                                                          SymMatrix::identity(7, 3.0));
    const auto s = six_direction_scores(inst);
    EXPECT_LT(rel(s[3], s[1]), 1e-10);
    EXPECT_LT(rel(s[4], s[2]), 1e-10);
}

TEST(Score, SigmaPolarRecoversDisplacement) {
    Rng rng = make_rng(8);
    for (int t = 0; t < 10; ++t) {
        const std::size_t m = 3 + t, n = m + std::size_t(t % 3);
        const TripletInstance inst = random_instance(rng, m, n, 3 * n);
        EXPECT_LT(frobenius_distance(sigma_polar_direction(inst), inst.D), 1e-7 * inst.D.frobenius_norm());
    }
}

TEST(Spectrum, StretchedExponential) {
    const SpectrumSpec spec{128, 1.0, 1e-4, 0.3};
    const auto v = spec.values();
    ASSERT_EQ(v.size(), 128u);
    EXPECT_EQ(v.front(), 1.0);
    EXPECT_NEAR(v.back(), 1e-4, 1e-12);
    for (std::size_t k = 1; k < v.size(); ++k) EXPECT_LT(v[k], v[k - 1]);
    EXPECT_EQ(SpectrumSpec({1, 2.0, 1.0, 1.0}).values(), std::vector<double>{2.0});
    EXPECT_THROW(SpectrumSpec({4, 1.0, 2.0, 1.0}).values(), ConfigError);
    EXPECT_THROW(SpectrumSpec({4, 1.0, 0.1, 0.0}).values(), ConfigError);
}

TEST(Kron, VecIdentity) {
    Rng rng = make_rng(9);
    const SymMatrix a = random_spd(rng, 4, 10.0), h = random_spd(rng, 3, 10.0);
    const DenseMatrix q = gaussian_matrix(rng, 3, 4);
    const auto lhs = symv(kron(a, h), vec(q));
    const DenseMatrix rhs = matmul(matmul(h, q), a);
    EXPECT_LT(frobenius_distance(unvec(lhs, 3, 4), rhs), 1e-10 * rhs.frobenius_norm());
    EXPECT_EQ(unvec(vec(q), 3, 4), q);
    EXPECT_EQ(vec(DenseMatrix::from_rows({{1, 2}, {3, 4}})), (std::vector<double>{1, 3, 2, 4}));
}

TEST(Kron, SingleSampleUnitBlock) {
    DenseMatrix z(3, 1);
    z(0, 0) = 1.0;
    const SymMatrix k = kron_hessian_exact(z, {SymMatrix::identity(2)});
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(k(i, j), (i == j && i < 2) ? 1.0 : 0.0);
}

TEST(Kron, ConstantBlocksMatchApproximation) {
    Rng rng = make_rng(10);
    const DenseMatrix z = gaussian_matrix(rng, 5, 9);
    const SymMatrix h = random_spd(rng, 4, 5.0);
    const SymMatrix exact = kron_hessian_exact(z, std::vector<SymMatrix>(9, h));
    const SymMatrix approx = kron_hessian_approx(z, h);
    EXPECT_LE(frobenius_distance(exact.dense(), approx.dense()), 1e-12 * approx.frobenius_norm());
}

TEST(Kron, GradientIdentityOnQuadratic) {
    // f(W) = 1/(2N) sum_t ||(W - W*) z_t||^2 has gradient (W - W*) Z Z^T / N.
    Rng rng = make_rng(11);
    const DenseMatrix z = gaussian_matrix(rng, 6, 15);
    const DenseMatrix d = gaussian_matrix(rng, 4, 6);
    DenseMatrix g(4, 6);
    for (std::size_t t = 0; t < 15; ++t) {
        std::vector<double> r(4, 0.0);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 6; ++j) r[i] += d(i, j) * z(j, t);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 6; ++j) g(i, j) += r[i] * z(j, t) / 15.0;
    }
    const SymMatrix hess = kron_hessian_exact(z, std::vector<SymMatrix>(15, SymMatrix::identity(4)));
    const auto hv = symv(hess, vec(d));
    const auto vg = vec(g);
    for (std::size_t i = 0; i < vg.size(); ++i) EXPECT_NEAR(hv[i], vg[i], 1e-10 * g.frobenius_norm());
}

TEST(Kron, SpreadShrinksApproximationError) {
    Rng rng = make_rng(12);
    const std::size_t n = 4, m = 3, big_n = 12;
    const DenseMatrix z = gaussian_matrix(rng, n, big_n);
    const SymMatrix h = random_spd(rng, m, 4.0);
    std::vector<SymMatrix> noise;
    for (std::size_t t = 0; t < big_n; ++t) noise.push_back(SymMatrix::symmetrize(gaussian_matrix(rng, m, m)));
    double prev = 1e300;
    for (double spread : {0.5, 0.1, 0.01, 0.0}) {
        std::vector<SymMatrix> blocks;
        for (const auto& e : noise) blocks.push_back(h.axpby(1.0, spread, e));
        const double err = frobenius_distance(kron_hessian_exact(z, blocks).dense(), kron_hessian_approx(z, h).dense());
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-12);
}

TEST(Kron, SizeCap) {
    EXPECT_THROW(kron(SymMatrix::identity(65), SymMatrix::identity(64)), SizeCapExceeded);
    EXPECT_THROW(kron_hessian_approx(DenseMatrix(65, 2), SymMatrix::identity(64)), SizeCapExceeded);
}

TEST(Stieltjes, MarchenkoPasturHalfMoment) {
    const std::vector<double> spec(64, 1.0);
    const auto sol = stieltjes_solve(spec, default_stieltjes_grid(spec), kDefaultStieltjesEta);
    EXPECT_LT(rel(sol.mu_half, 8.0 / (3.0 * M_PI)), 0.01);
    EXPECT_NEAR(sol.mass, 1.0, 0.02);
    for (double d : sol.density) EXPECT_GE(d, 0.0);
    // Quarter-circle law density sqrt(x (4 - x)) / (2 pi x) in the bulk.
    for (std::size_t i = 500; i < 3500; i += 500) {
        const double x = sol.grid_x[i];
        EXPECT_NEAR(sol.density[i], std::sqrt(x * (4.0 - x)) / (2.0 * M_PI * x), 2e-3);
    }
}

TEST(Stieltjes, ScaledSpectrum) {
    const std::vector<double> spec(10, 3.0);
    const auto sol = solve_for_spectrum(spec);
    EXPECT_LT(rel(sol.mu_half, 8.0 / M_PI), 1e-3);
    EXPECT_NEAR(sol.mass, 1.0, 0.02);
}

TEST(Stieltjes, Preconditions) {
    const std::vector<double> spec{1.0, 0.5};
    const auto grid = default_stieltjes_grid(spec, 100);
    EXPECT_THROW(stieltjes_solve(std::vector<double>{1.0, -1.0}, grid, 1e-3), Error);
    EXPECT_THROW(stieltjes_solve(spec, grid, 0.0), Error);
    EXPECT_THROW(stieltjes_solve(spec, std::vector<double>{0.0, 1.0}, 1e-3), Error);
    StieltjesOptions opts;
    opts.max_iter = 3;
    EXPECT_THROW(stieltjes_solve(spec, grid, 1e-3, opts), FixedPointDiverged);
}

TEST(Stieltjes, TheoryScoresForIsotropicCurvature) {
    const double lambda = 1.7;
    const std::size_t m = 50;
    const std::vector<double> spec(m, lambda);
    const double muon = muon_theory_score(spec, m);
    EXPECT_LT(rel(muon, 64.0 / (9.0 * M_PI * M_PI) * double(m * m) * lambda), 1e-3);
    EXPECT_DOUBLE_EQ(newton_theory_score(spec, m), double(m * m) * lambda);
    EXPECT_LT(rel(gd_theory_score(spec, m), double(m * m) * lambda), 1e-12);
}

TEST(Stieltjes, EmpiricalSpectrumMatchesDensity) {
    const std::size_t m = 512;
    const auto spec = SpectrumSpec{m, 1.0, 0.05, 1.0}.values();
    Rng rng = make_rng(13);
    const SymMatrix h = conjugated_diagonal(rng, spec);
    const auto sv = singular_values(matmul(h, gaussian_matrix(rng, m, m)));
    std::vector<double> eig;
    for (double s : sv) eig.push_back(s * s / double(m));
    EXPECT_LE(ks_distance(solve_for_spectrum(spec), eig), 0.05);
}

TEST(ScoreMonteCarlo, MuonTheoryMatchesIsotropicMean) {
    ScoreStudyConfig cfg;
    cfg.m = cfg.n = 256;
    cfg.spectrum = {256, 1.0, 1e-2, 1.0};
    cfg.activation = ActivationModel::Isotropic;
    cfg.trials = 4;
    cfg.seed = 14;
    const auto spec = cfg.spectrum.values();
    double muon = 0.0, newton = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        Rng rng = make_rng(cfg.seed, t);
        const TripletInstance inst = sample_study_instance(rng, cfg);
        muon += score_muon_closed(inst) / double(cfg.trials);
        newton += score_newton_closed(inst) / double(cfg.trials);
    }
    EXPECT_LT(rel(muon, muon_theory_score(spec, 256)), 0.08);
    EXPECT_LT(rel(newton, newton_theory_score(spec, 256)), 0.03);
}

TEST(ScoreMonteCarlo, GdSpectrumApproximation) {
    ScoreStudyConfig cfg;
    cfg.m = cfg.n = 128;
    cfg.spectrum = {128, 1.0, 1e-2, 1.0};
    cfg.activation = ActivationModel::Isotropic;
    const auto spec = cfg.spectrum.values();
    double gd = 0.0;
    const int trials = 16;
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(15, std::uint64_t(t));
        gd += score_gd_closed(sample_study_instance(rng, cfg)) / trials;
    }
    EXPECT_LT(rel(gd, gd_theory_score(spec, 128)), 0.05);
}

TEST(ScoreStudy, DeterministicAndSummarized) {
    ScoreStudyConfig cfg;
    cfg.m = cfg.n = 12;
    cfg.N = 64;
    cfg.spectrum = {12, 1.0, 1e-3, 0.3};
    cfg.trials = 9;
    cfg.seed = 3;
    const auto a = run_score_study(cfg);
    const auto b = run_score_study(cfg);
    ASSERT_EQ(a.trials.size(), 9u);
    EXPECT_EQ(a.trials, b.trials);
    EXPECT_EQ(a.excluded, 0u);
    const auto c = run_score_study(cfg, 4);
    EXPECT_EQ(a.trials, c.trials);
    EXPECT_EQ(a.trial_index, c.trial_index);
    for (std::size_t k = 0; k < kDirectionCount; ++k) {
        EXPECT_LE(a.summary[k].q025, a.summary[k].mean);
        EXPECT_GE(a.summary[k].q975, a.summary[k].mean);
    }
    cfg.N = 4;
    EXPECT_THROW(run_score_study(cfg), ConfigError);
}

TEST(ScoreStudy, Quantile) {
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(quantile({0.0, 10.0}, 0.25), 2.5);
    EXPECT_DOUBLE_EQ(quantile({5.0}, 0.975), 5.0);
}
