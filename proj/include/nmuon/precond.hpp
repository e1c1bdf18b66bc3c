#pragma once

// Per-layer activation second moment and right preconditioning.

#include <cstddef>
#include <string>
#include <vector>

#include "nmuon/dense.hpp"

namespace nmuon {

enum class InverseBackend { Cholesky, Polynomial };

std::string to_string(InverseBackend b);
InverseBackend inverse_backend_from_string(const std::string& s);

struct PrecondConfig {
    double beta = 0.95;
    double gamma = 0.2;
    std::size_t refresh_k = 32;
    std::size_t blocks = 1;
    InverseBackend backend = InverseBackend::Cholesky;

    void validate(std::size_t dim) const;

    friend bool operator==(const PrecondConfig&, const PrecondConfig&) = default;
};

inline constexpr double kInitialSecondMoment = 1e-3;
inline constexpr int kMaxRidgeRetries = 6;

class SecondMomentState {
public:
    SecondMomentState(std::size_t dim, PrecondConfig cfg);

    // Refreshes K and its inverse when (step + 1) % refresh_k == 0. Returns
    // whether a refresh happened. Z is dim x N; N = 0 is skipped.
    bool maybe_refresh(const DenseMatrix& z, std::size_t step);

    // G K^{-1}, blockwise when blocks > 1.
    DenseMatrix apply_right_precond(const DenseMatrix& g) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t block_dim() const noexcept { return dim_ / cfg_.blocks; }
    const PrecondConfig& config() const noexcept { return cfg_; }
    std::size_t refresh_count() const noexcept { return refreshes_; }
    std::size_t ridge_retries() const noexcept { return retries_; }

    const SymMatrix& block_k(std::size_t b) const { return k_.at(b); }
    const SymMatrix& block_k_inv(std::size_t b) const { return k_inv_.at(b); }
    // Ridge actually used at the last refresh, per block.
    double block_ridge(std::size_t b) const { return ridge_.at(b); }

    // Block-diagonal assemblies of K and K^{-1}.
    SymMatrix k() const;
    SymMatrix k_inv() const;

    std::string to_json() const;
    static SecondMomentState from_json(const std::string& text);

    friend bool operator==(const SecondMomentState&, const SecondMomentState&) = default;

private:
    std::size_t dim_;
    PrecondConfig cfg_;
    std::vector<SymMatrix> k_;
    std::vector<SymMatrix> k_inv_;
    std::vector<double> ridge_;
    std::size_t refreshes_ = 0;
    std::size_t retries_ = 0;
};

struct SecondMomentReport {
    double d_min = 0.0;
    double d_mean = 0.0;
    double d_max = 0.0;
    double offdiag_mass = 0.0;  // (1/n) sum_i sum_{j != i} |K_ij|
    double condition = 0.0;     // +inf when lambda_min <= 0
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

SecondMomentReport diagnostics(const SymMatrix& k);

}  // namespace nmuon
