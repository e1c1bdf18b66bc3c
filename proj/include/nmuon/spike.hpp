#pragma once

// Single-spike quadratic case study: scalar coefficient recursions, greedy
// step sizes and a full-matrix simulator that checks them.

#include <cstddef>
#include <string>
#include <vector>

#include "nmuon/dense.hpp"
#include "nmuon/random.hpp"

namespace nmuon {

enum class SpikeMethod { GD, Muon, NewtonMuon };

std::string to_string(SpikeMethod m);
SpikeMethod spike_method_from_string(const std::string& s);

struct SpikeState {
    double alpha1 = 0.0;
    std::vector<double> betas;  // beta_1 .. beta_r
    std::size_t t = 0;

    // max(|alpha1|, |beta_i|)
    double max_abs() const;
};

struct SpikeModel {
    std::size_t m = 0, n = 0, r = 0;
    double kappa = 0.0;
    DenseMatrix U;   // m x r
    std::vector<double> e1;
    DenseMatrix B;   // n x r, columns orthogonal to e1
    double alpha0 = 0.0;
    std::vector<double> betas0;
    SymMatrix zzt;   // U_Z diag(kappa, 1, ..., 1) U_Z^T

    // W* such that W_0 - W* = -W* has coefficients (alpha0, betas0).
    DenseMatrix w_star() const;
    // u_1 (a e_1^T + b_1 b_1^T) + sum_{i>=2} u_i b_i b_i^T
    DenseMatrix assemble(const SpikeState& s) const;
    // Projection of D onto the coefficient basis.
    SpikeState extract(const DenseMatrix& d) const;
    SpikeState initial_state() const;
    void validate() const;
};

// Random orthonormal frames; coefficients drawn as +-U[0.5, 1].
SpikeModel make_spike_model(Rng& rng, std::size_t m, std::size_t n, std::size_t r, double kappa);

// Same frames with caller-supplied coefficients.
SpikeModel make_spike_model(Rng& rng, std::size_t m, std::size_t n, double kappa, double alpha0,
                            std::vector<double> betas0);

SpikeState scalar_step(SpikeMethod method, const SpikeState& s, double kappa, double eta);

double greedy_eta(SpikeMethod method, double r_t, double kappa);

// Worst-case contraction factor of the greedy bound recursion.
double contraction_factor(SpikeMethod method, double kappa);

std::size_t iterations_to_eps(SpikeMethod method, double r0, double eps, double kappa);

struct EtaRule {
    enum class Kind { Constant, Greedy, Schedule };
    Kind kind = Kind::Greedy;
    double value = 0.0;
    std::vector<double> schedule;

    static EtaRule constant(double eta) { return {Kind::Constant, eta, {}}; }
    static EtaRule greedy() { return {Kind::Greedy, 0.0, {}}; }
    static EtaRule from_schedule(std::vector<double> s) { return {Kind::Schedule, 0.0, std::move(s)}; }

    double eta(SpikeMethod method, const SpikeState& s, double kappa) const;
};

struct SpikePoint {
    SpikeState state;
    double frobenius_residual = 0.0;  // ||W_t - W*||_F
    double off_basis = 0.0;           // part of W_t - W* outside the basis
    double eta = 0.0;                 // step taken from this point (0 at the end)
};

// Full-matrix run from W_0 = 0; returns steps + 1 points. Throws
// DecompositionViolated if the off-basis part exceeds 1e-9 ||W*||_F.
std::vector<SpikePoint> matrix_simulate(const SpikeModel& model, SpikeMethod method, std::size_t steps,
                                        const EtaRule& rule);

std::vector<SpikeState> scalar_simulate(const SpikeModel& model, SpikeMethod method, std::size_t steps,
                                        const EtaRule& rule);

// Steps of the matrix simulation until max coefficient <= eps, capped at max_steps.
struct MatrixConvergence {
    std::size_t iterations = 0;
    bool reached = false;
    double max_scalar_gap = 0.0;  // largest coefficient gap vs the scalar recursion
};

MatrixConvergence matrix_iterations_to_eps(const SpikeModel& model, SpikeMethod method, double eps,
                                           std::size_t max_steps);

}  // namespace nmuon
