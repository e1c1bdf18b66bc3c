#pragma once

// Desk-scale training runs: the single-spike quadratic objective and a small
// bias-free MLP with hand-written backprop.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmuon/bench/config.hpp"
#include "nmuon/dense.hpp"

namespace nmuon::bench {

// Rows of the full-data loss in MLP mode are taken every kEvalEvery steps and
// at the last step.
inline constexpr std::size_t kEvalEvery = 50;
inline constexpr double kDivergenceFactor = 1e6;

struct CurvePoint {
    std::size_t step = 0;
    double lr = 0.0;
    double loss = 0.0;                  // quadratic: objective; MLP: current batch
    std::optional<double> dist;         // quadratic: ||W_t - W*||_F
    std::optional<double> train_loss;   // MLP: full-data loss at eval steps
    double wall_time = 0.0;             // seconds since the run started
};

struct TrainRun {
    std::string label;
    std::vector<CurvePoint> curve;
    std::optional<std::size_t> steps_to_target;  // quadratic mode
    double final_loss = 0.0;                     // objective, or full-data loss for MLP
    bool reached = false;                        // target distance / loss threshold met
};

// Quadratic mode: f(W) = ||(W - W*) Z||_F^2 / (2N) on a single-spike model
// with r modes, ZZ^T / N = diag(kappa, 1, ..., 1) in a random frame. Stops at
// the target distance or after total_steps.
TrainRun train_quadratic(const ExperimentConfig& cfg, const OptimizerBlock& opt);

// MLP mode on a synthetic teacher task. Throws Diverged when the batch loss
// exceeds kDivergenceFactor times its initial value or stops being finite.
TrainRun train_mlp(const ExperimentConfig& cfg, const OptimizerBlock& opt);

std::vector<TrainRun> run_training(const ExperimentConfig& cfg);

// ------------------------------------------------------------ MLP pieces

struct MlpData {
    DenseMatrix x;              // d_in x samples
    DenseMatrix y;              // MSE targets, d_out x samples
    std::vector<std::size_t> labels;  // cross-entropy classes
};

MlpData make_mlp_data(const ExperimentConfig& cfg);

class Mlp {
public:
    Mlp(const MlpSpec& spec, std::uint64_t seed);

    struct Pass {
        double loss = 0.0;
        std::vector<DenseMatrix> inputs;  // layer inputs Z_l (fan_in x batch)
        std::vector<DenseMatrix> grads;   // dL/dW_l
    };

    // Mean loss over the columns of x; gradients only when `backward`.
    Pass run(const DenseMatrix& x, const DenseMatrix& y, const std::vector<std::size_t>& labels,
             bool backward) const;

    std::vector<DenseMatrix>& weights() noexcept { return w_; }
    const std::vector<DenseMatrix>& weights() const noexcept { return w_; }

private:
    MlpSpec spec_;
    std::vector<DenseMatrix> w_;
};

}  // namespace nmuon::bench
