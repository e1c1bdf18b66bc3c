#pragma once

// Experiment configuration: an INI document (or the same layout as JSON),
// named presets, and a canonical serializer.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nmuon/matrix_sign.hpp"
#include "nmuon/optimizers.hpp"
#include "nmuon/precond.hpp"
#include "nmuon/score.hpp"

namespace nmuon::bench {

enum class Experiment { Verify, Spike, ScoreStudy, Plans, Train };
enum class OptimizerKind { GD, Muon, NewtonMuon, AdamW };
enum class TrainMode { Quadratic, Mlp };
enum class Activation { Relu, Tanh, Gelu };
enum class Loss { Mse, CrossEntropy };
enum class InputModel { Isotropic, Spiked, Stretched };

std::string to_string(Experiment e);
std::string to_string(OptimizerKind k);
std::string to_string(TrainMode m);
std::string to_string(Activation a);
std::string to_string(Loss l);
std::string to_string(InputModel i);

struct OptimizerBlock {
    std::string label;
    OptimizerKind kind = OptimizerKind::NewtonMuon;
    double lr = 0.02;
    double mu = 0.95;
    double weight_decay = 0.0;
    // Preconditioner (Newton-Muon only).
    double ewma_beta = 0.95;
    double ridge_gamma = 0.2;
    std::size_t refresh_k = 32;
    std::size_t blocks = 1;
    SignBackend sign_backend = SignBackend::Svd;
    InverseBackend inverse_backend = InverseBackend::Cholesky;
    // AdamW only.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Quadratic mode: replace lr by the single-spike greedy step.
    bool greedy = false;

    MatrixVariant variant() const;
    MatrixOptimizerConfig matrix_config() const;
    AdamWConfig adamw_config() const;

    friend bool operator==(const OptimizerBlock&, const OptimizerBlock&) = default;
};

struct ScheduleConfig {
    std::size_t total_steps = 200;
    std::size_t warmup = 0;
    double min_ratio = 1.0;

    friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct MlpSpec {
    std::vector<std::size_t> widths{16, 32, 32, 4};
    Activation activation = Activation::Tanh;
    bool residual = true;
    Loss loss = Loss::CrossEntropy;
    InputModel input = InputModel::Spiked;
    double input_kappa = 16.0;
    std::size_t batch = 128;
    std::size_t samples = 1024;
    double loss_threshold = 0.5;

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::Verify;
    std::uint64_t seed = 0;
    std::string output = "out";

    std::size_t m = 32;
    std::size_t n = 32;
    std::size_t N = 256;
    std::size_t r = 1;
    double kappa = 64.0;

    double lambda_max = 1.0;
    double lambda_min = 1e-4;
    double p = 0.3;

    std::vector<double> kappas{16.0, 64.0, 256.0};
    double eps_ratio = 1e3;
    std::size_t max_steps = 5000;

    std::size_t trials = 64;
    ActivationModel activation = ActivationModel::Spiked;
    std::size_t threads = 1;

    TrainMode mode = TrainMode::Quadratic;
    double target = 1e-3;
    MlpSpec mlp;
    ScheduleConfig schedule;
    std::vector<OptimizerBlock> optimizers;

    // Throws ConfigError naming the first bad field.
    void validate() const;

    SpectrumSpec spectrum() const { return {m, lambda_max, lambda_min, p}; }
    ScoreStudyConfig study_config() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Sections and keys in file order, with raw string values: the common form
// of INI and JSON input.
struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
};
using Document = std::vector<Section>;

Document read_ini(const std::string& text);
Document read_json(const std::string& text);

ExperimentConfig from_document(const Document& doc);
Document to_document(const ExperimentConfig& cfg);

// Canonical INI text; parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);

// Leading '{' selects JSON, anything else INI.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace nmuon::bench
