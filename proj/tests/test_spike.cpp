#include <gtest/gtest.h>

#include <cmath>

#include "nmuon/matrix_sign.hpp"
#include "nmuon/spike.hpp"

using namespace nmuon;

namespace {

double state_gap(const SpikeState& a, const SpikeState& b) {
    double g = std::abs(a.alpha1 - b.alpha1);
    for (std::size_t k = 0; k < a.betas.size(); ++k) g = std::max(g, std::abs(a.betas[k] - b.betas[k]));
    return g;
}

constexpr SpikeMethod kMethods[] = {SpikeMethod::GD, SpikeMethod::Muon, SpikeMethod::NewtonMuon};

}  // namespace

TEST(SpikeModel, Invariants) {
    Rng rng = make_rng(1);
    const SpikeModel model = make_spike_model(rng, 32, 33, 5, 64.0);
    EXPECT_NO_THROW(model.validate());
    const SymEig e = sym_eig(model.zzt);
    EXPECT_NEAR(e.values.front(), 64.0, 1e-10);
    for (std::size_t i = 1; i < e.values.size(); ++i) EXPECT_NEAR(e.values[i], 1.0, 1e-10);
    const SpikeState back = model.extract(-1.0 * model.w_star());
    EXPECT_LT(state_gap(back, model.initial_state()), 1e-12);
    EXPECT_THROW(make_spike_model(rng, 4, 5, 5, 4.0), DimensionMismatch);
    EXPECT_THROW(make_spike_model(rng, 6, 8, 4.0, 0.0, {0.0, 1.0}), Error);
    EXPECT_THROW(make_spike_model(rng, 6, 8, 4.0, 1.0, {1.0, 0.0}), Error);
}

TEST(ScalarStep, GdGreedyContracts) {
    for (double kappa : {3.0, 16.0, 64.0}) {
        const SpikeState s{0.7, {-0.4, 0.9}, 0};
        const double eta = greedy_eta(SpikeMethod::GD, 1.0, kappa);
        const SpikeState n = scalar_step(SpikeMethod::GD, s, kappa, eta);
        const double rho = (kappa - 1.0) / (kappa + 1.0);
        EXPECT_NEAR(std::abs(n.alpha1), rho * 0.7, 1e-15);
        EXPECT_NEAR(std::abs(n.betas[0]), rho * 0.4, 1e-15);
        EXPECT_NEAR(std::abs(n.betas[1]), rho * 0.9, 1e-15);
    }
}

TEST(ScalarStep, NewtonMuonUnitStep) {
    const SpikeState n = scalar_step(SpikeMethod::NewtonMuon, {1.0, {0.0}, 0}, 9.0, 1.0);
    EXPECT_DOUBLE_EQ(n.alpha1, 0.0);
    EXPECT_DOUBLE_EQ(n.betas[0], 0.0);
}

TEST(ScalarStep, OriginConventions) {
    const SpikeState s{0.0, {0.0, 0.0}, 3};
    for (auto m : {SpikeMethod::Muon, SpikeMethod::NewtonMuon}) {
        const SpikeState n = scalar_step(m, s, 10.0, 0.5);
        EXPECT_EQ(n.alpha1, 0.0);
        EXPECT_EQ(n.betas[0], 0.0);
        EXPECT_EQ(n.betas[1], 0.0);
        EXPECT_EQ(n.t, 4u);
    }
}

TEST(ScalarStep, MuonFirstMode) {
    const double kappa = 4.0, a = 0.3, b = -0.5, eta = 0.1;
    const SpikeState n = scalar_step(SpikeMethod::Muon, {a, {b, 0.2}, 0}, kappa, eta);
    const double nrm = std::sqrt(kappa * kappa * a * a + b * b);
    EXPECT_DOUBLE_EQ(n.alpha1, a - eta * kappa * a / nrm);
    EXPECT_DOUBLE_EQ(n.betas[0], b - eta * b / nrm);
    EXPECT_DOUBLE_EQ(n.betas[1], 0.1);
}

TEST(GreedyEta, Values) {
    EXPECT_DOUBLE_EQ(greedy_eta(SpikeMethod::GD, 7.0, 3.0), 0.5);
    EXPECT_NEAR(greedy_eta(SpikeMethod::NewtonMuon, 1.0, 100.0), 0.585786437626905, 1e-15);
    EXPECT_NEAR(greedy_eta(SpikeMethod::Muon, 2.0, 1e8), 2.0, 1e-7);
    // The Muon step equalizes eta and r - eta / sqrt(kappa^2 + 1).
    const double eta = greedy_eta(SpikeMethod::Muon, 1.5, 10.0);
    EXPECT_NEAR(eta, 1.5 - eta / std::sqrt(101.0), 1e-15);
}

TEST(IterationsToEps, FrozenCounts) {
    // Counts from direct evaluation of the geometric bound recursions.
    EXPECT_EQ(iterations_to_eps(SpikeMethod::NewtonMuon, 1.0, 1e-3, 16.0), 13u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 3.0), 10u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 16.0), 56u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 64.0), 222u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 256.0), 885u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::Muon, 1.0, 1e-3, 16.0), 115u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::Muon, 1.0, 1e-3, 64.0), 446u);
    EXPECT_EQ(iterations_to_eps(SpikeMethod::Muon, 1.0, 1e-3, 256.0), 1772u);
    EXPECT_THROW(iterations_to_eps(SpikeMethod::GD, 1.0, 2.0, 3.0), Error);
}

TEST(IterationsToEps, RateSeparation) {
    for (double k : {4.0, 64.0, 256.0})
        EXPECT_EQ(iterations_to_eps(SpikeMethod::NewtonMuon, 1.0, 1e-3, k), 13u);
    EXPECT_GE(iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 256.0),
              8 * iterations_to_eps(SpikeMethod::GD, 1.0, 1e-3, 16.0));
    const double ks[] = {16.0, 64.0, 256.0};
    for (auto m : {SpikeMethod::GD, SpikeMethod::Muon})
        for (int i = 0; i + 1 < 3; ++i) {
            const double ratio = double(iterations_to_eps(m, 1.0, 1e-3, ks[i + 1])) /
                                 double(iterations_to_eps(m, 1.0, 1e-3, ks[i]));
            EXPECT_GE(ratio, 4.0 * 0.7);
            EXPECT_LE(ratio, 4.0 * 1.3);
        }
}

void expect_agreement(const SpikeModel& model, SpikeMethod method, const EtaRule& rule) {
    const auto mat = matrix_simulate(model, method, 50, rule);
    const auto sc = scalar_simulate(model, method, 50, rule);
    ASSERT_EQ(mat.size(), 51u);
    for (std::size_t t = 0; t <= 50; ++t) {
        EXPECT_LT(state_gap(mat[t].state, sc[t]), 1e-9) << to_string(method) << " t=" << t;
        EXPECT_LE(mat[t].off_basis, 1e-9 * model.w_star().frobenius_norm());
    }
}

std::vector<double> decaying_schedule() {
    std::vector<double> eta(50);
    for (std::size_t t = 0; t < eta.size(); ++t) eta[t] = 0.02 * std::pow(0.95, double(t));
    return eta;
}

TEST(MatrixSimulate, AgreesWithScalarRecursionsOnSchedule) {
    Rng rng = make_rng(2);
    for (double kappa : {4.0, 64.0}) {
        const SpikeModel model = make_spike_model(rng, 32, 33, 5, kappa);
        for (auto method : kMethods) expect_agreement(model, method, EtaRule::from_schedule(decaying_schedule()));
    }
}

TEST(MatrixSimulate, AgreesWithScalarRecursionsGreedy) {
    Rng rng = make_rng(2);
    for (double kappa : {4.0, 64.0}) {
        const SpikeModel model = make_spike_model(rng, 32, 33, 5, kappa);
        for (auto method : kMethods) {
            if (method == SpikeMethod::Muon && kappa > 4.0) continue;
            expect_agreement(model, method, EtaRule::greedy());
        }
    }
}

TEST(MatrixSimulate, GreedyMuonChatterLeavesSubspace) {
    // Coefficients chattering below eta/2 amplify rounding off the basis by
    // roughly eta/|beta| per step; the checker must report it.
    Rng rng = make_rng(2);
    make_spike_model(rng, 32, 33, 5, 4.0);
    const SpikeModel model = make_spike_model(rng, 32, 33, 5, 64.0);
    try {
        matrix_simulate(model, SpikeMethod::Muon, 50, EtaRule::greedy());
        FAIL() << "expected DecompositionViolated";
    } catch (const DecompositionViolated& e) {
        EXPECT_GT(e.step(), 10u);
        EXPECT_GT(e.residual(), 1e-9 * model.w_star().frobenius_norm());
    }
}

TEST(MatrixSimulate, NewtonMuonFirstDirection) {
    Rng rng = make_rng(3);
    const SpikeModel model = make_spike_model(rng, 10, 12, 3, 50.0);
    const DenseMatrix ws = model.w_star();
    const DenseMatrix g = matmul(-1.0 * ws, model.zzt);
    const DenseMatrix nm = msgn_exact(matmul(g, cholesky_inverse(model.zzt)));
    EXPECT_LT((nm - msgn_exact(-1.0 * ws)).frobenius_norm(), 1e-10);
    const auto traj = matrix_simulate(model, SpikeMethod::NewtonMuon, 1, EtaRule::constant(0.1));
    const DenseMatrix w1 = model.assemble(traj[1].state) + ws;
    EXPECT_LT((w1 - (-0.1) * msgn_exact(-1.0 * ws)).frobenius_norm(), 1e-10);
}

TEST(MatrixSimulate, GdMonotone) {
    Rng rng = make_rng(4);
    const SpikeModel model = make_spike_model(rng, 12, 15, 4, 64.0);
    const auto traj = matrix_simulate(model, SpikeMethod::GD, 40, EtaRule::greedy());
    for (std::size_t t = 1; t < traj.size(); ++t)
        EXPECT_LT(traj[t].frobenius_residual, traj[t - 1].frobenius_residual);
}

TEST(MatrixSimulate, ScheduleRule) {
    Rng rng = make_rng(5);
    const SpikeModel model = make_spike_model(rng, 6, 8, 2, 4.0);
    const EtaRule rule = EtaRule::from_schedule({0.1, 0.05, 0.02});
    const auto mat = matrix_simulate(model, SpikeMethod::Muon, 3, rule);
    const auto sc = scalar_simulate(model, SpikeMethod::Muon, 3, rule);
    EXPECT_LT(state_gap(mat.back().state, sc.back()), 1e-12);
    EXPECT_THROW(matrix_simulate(model, SpikeMethod::Muon, 4, rule), Error);
}

TEST(MatrixIterations, NewtonMuonIsKappaFree) {
    Rng rng = make_rng(6);
    for (double kappa : {16.0, 256.0}) {
        const SpikeModel model = make_spike_model(rng, 16, 17, 3, kappa);
        const double r0 = model.initial_state().max_abs();
        const MatrixConvergence nm = matrix_iterations_to_eps(model, SpikeMethod::NewtonMuon, r0 * 1e-3, 100);
        EXPECT_TRUE(nm.reached);
        EXPECT_LE(nm.iterations, iterations_to_eps(SpikeMethod::NewtonMuon, r0, r0 * 1e-3, kappa));
        EXPECT_LT(nm.max_scalar_gap, 1e-9);
    }
}
