#pragma once

// Update rules for matrix parameters plus the AdamW baseline and the
// warmup/cosine schedule.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nmuon/dense.hpp"
#include "nmuon/matrix_sign.hpp"
#include "nmuon/precond.hpp"

namespace nmuon {

enum class MatrixVariant {
    GD,
    MuonSvd,
    MuonNs5,
    NewtonMuonSvd,
    NewtonMuonNs5,
    FactorizedSigma,
    DiagSigma,
};

std::string to_string(MatrixVariant v);
MatrixVariant matrix_variant_from_string(const std::string& s);
bool uses_preconditioner(MatrixVariant v);
SignBackend sign_backend_of(MatrixVariant v);

// W - lr G.
DenseMatrix gd_step(const DenseMatrix& w, const DenseMatrix& g, double lr);

struct MatrixOptState {
    DenseMatrix momentum_buf;
    double mu = 0.95;
    double lr = 0.02;
    double weight_decay = 0.0;
    MatrixVariant variant = MatrixVariant::MuonSvd;

    MatrixOptState(std::size_t rows, std::size_t cols, double lr, double mu = 0.95,
                   double weight_decay = 0.0, MatrixVariant variant = MatrixVariant::MuonSvd);
    void validate() const;
};

// buf <- mu buf + G; returns (1 - lr wd) W - lr msgn(buf).
DenseMatrix muon_step(MatrixOptState& state, const DenseMatrix& w, const DenseMatrix& g,
                      SignBackend backend);

// Refreshes `precond` on Z, right-preconditions the raw gradient, then runs
// muon_step on the result.
DenseMatrix newton_muon_step(MatrixOptState& state, SecondMomentState& precond, const DenseMatrix& w,
                             const DenseMatrix& g, const DenseMatrix& z, std::size_t step,
                             SignBackend backend);

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamWState {
    DenseMatrix m;
    DenseMatrix v;
    AdamWConfig cfg;
    std::size_t t = 0;

    AdamWState(std::size_t rows, std::size_t cols, AdamWConfig cfg);
};

DenseMatrix adamw_step(AdamWState& state, const DenseMatrix& w, const DenseMatrix& g);
// Same rule with an explicit learning rate (used under a schedule).
DenseMatrix adamw_step(AdamWState& state, const DenseMatrix& w, const DenseMatrix& g, double lr);

// M msgn(M^T G ZZT_inv) for Sigma_W = M M^T.
DenseMatrix factorized_sigma_direction(const DenseMatrix& m, const DenseMatrix& g,
                                       const SymMatrix& zzt_inv, SignBackend backend = SignBackend::Svd);

struct DiagSigmaState {
    std::vector<double> u;  // EWMA of row norms of applied directions
    double lambda = 0.5;
    double beta = 0.9;

    DiagSigmaState(std::size_t rows, double lambda, double beta);
    // Diagonal of M: sqrt(lambda u^2 + (1 - lambda) mean(u^2)).
    std::vector<double> m_diag() const;
};

DiagSigmaState diag_sigma_update(const DiagSigmaState& state, const DenseMatrix& q_applied);

// Linear warmup from 0, then cosine decay to min_ratio * base_lr at `total`.
double lr_schedule(std::size_t step, std::size_t total, std::size_t warmup, double min_ratio, double base_lr);

struct MatrixOptimizerConfig {
    MatrixVariant variant = MatrixVariant::NewtonMuonSvd;
    double lr = 0.02;
    double mu = 0.95;
    double weight_decay = 0.0;
    PrecondConfig precond;
    double sigma_lambda = 0.5;
    double sigma_beta = 0.9;
};

// One matrix parameter with its variant-specific state.
class MatrixOptimizer {
public:
    MatrixOptimizer(std::size_t rows, std::size_t cols, const MatrixOptimizerConfig& cfg);

    // `z` (cols x N layer inputs) is required for the preconditioned variants.
    // `lr` overrides the configured rate when given.
    DenseMatrix step(const DenseMatrix& w, const DenseMatrix& g, const DenseMatrix* z, std::size_t step,
                     std::optional<double> lr = std::nullopt);

    // Fixed factor for FactorizedSigma (defaults to I).
    void set_sigma_factor(DenseMatrix m);

    const MatrixOptimizerConfig& config() const noexcept { return cfg_; }
    const SecondMomentState* precond() const noexcept { return precond_ ? &*precond_ : nullptr; }
    const DenseMatrix& last_direction() const noexcept { return last_dir_; }

private:
    MatrixOptimizerConfig cfg_;
    MatrixOptState state_;
    std::optional<SecondMomentState> precond_;
    DenseMatrix sigma_m_;
    std::optional<DiagSigmaState> diag_;
    DenseMatrix last_dir_;
};

}  // namespace nmuon
