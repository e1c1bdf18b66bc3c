#pragma once

// One-step quadratic scores of candidate update directions, the Kronecker
// curvature construction, and the random-matrix prediction of the Muon score.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nmuon/dense.hpp"
#include "nmuon/random.hpp"

namespace nmuon {

// Local quadratic model around W: G = H D (Z Z^T / N) with D = W - W*.
struct TripletInstance {
    SymMatrix H;   // m x m, positive definite
    DenseMatrix D; // m x n
    DenseMatrix Z; // n x N; empty when the second moment is given directly
    std::size_t N = 0;
    SymMatrix A;   // Z Z^T / N
    DenseMatrix G;

    static TripletInstance from_activations(SymMatrix h, DenseMatrix d, DenseMatrix z);
    static TripletInstance from_second_moment(SymMatrix h, DenseMatrix d, SymMatrix a);

    std::size_t m() const noexcept { return D.rows(); }
    std::size_t n() const noexcept { return D.cols(); }

    // Checks shapes, G against H D A, and positive definiteness of H and A.
    void validate() const;
};

// tr(Q G^T)^2 / tr(H Q A Q^T).
double score(const DenseMatrix& q, const TripletInstance& inst);

double score_gd_closed(const TripletInstance& inst);
double score_muon_closed(const TripletInstance& inst);
// tr(H D A D^T)
double score_newton_closed(const TripletInstance& inst);

enum class Direction { Gradient, MuonSvd, MuonNs5, NewtonMuonSvd, NewtonMuonNs5, Newton };
inline constexpr std::size_t kDirectionCount = 6;
inline constexpr std::array<Direction, kDirectionCount> kAllDirections = {
    Direction::Gradient,      Direction::MuonSvd,       Direction::MuonNs5,
    Direction::NewtonMuonSvd, Direction::NewtonMuonNs5, Direction::Newton};

std::string to_string(Direction d);

DenseMatrix direction(Direction d, const TripletInstance& inst);

// Sigma^{1/2} msgn(Sigma^{1/2} G A^{-1}) with Sigma = D D^T; equals D when m <= n
// and D has full row rank.
DenseMatrix sigma_polar_direction(const TripletInstance& inst);

using DirectionScores = std::array<double, kDirectionCount>;

// Scores in kAllDirections order.
DirectionScores six_direction_scores(const TripletInstance& inst);

// lambda_k = lambda_max * exp(-tau (k-1)^p), tau = log(lambda_max / lambda_min) / (m-1)^p.
struct SpectrumSpec {
    std::size_t m = 0;
    double lambda_max = 1.0;
    double lambda_min = 1e-4;
    double p = 0.3;

    void validate() const;
    std::vector<double> values() const;
};

// ------------------------------------------------------------ Kronecker

inline constexpr std::size_t kKronDimCap = 4096;

// Column stacking: vec(Q)[i + j m] = Q(i, j).
std::vector<double> vec(const DenseMatrix& q);
DenseMatrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

// A (x) H, so that (A (x) H) vec(Q) = vec(H Q A^T).
SymMatrix kron(const SymMatrix& a, const SymMatrix& h);

// (1/N) sum_t (z_t z_t^T) (x) H_t.
SymMatrix kron_hessian_exact(const DenseMatrix& z, const std::vector<SymMatrix>& h_blocks);
// (Z Z^T / N) (x) H.
SymMatrix kron_hessian_approx(const DenseMatrix& z, const SymMatrix& h);

std::vector<double> symv(const SymMatrix& k, std::span<const double> x);

// ------------------------------------------------------------ random-matrix theory

struct StieltjesOptions {
    double damping = 0.5;
    // Stop when |delta m| <= tol * max(1, |m|).
    double tol = 1e-12;
    std::size_t max_iter = 100000;
    // Imaginary offset at x is max(eta, eta_rel * x).
    double eta_rel = 0.0;
};

struct StieltjesSolution {
    std::vector<double> grid_x;
    std::vector<double> density;
    std::vector<std::complex<double>> m_values;
    double eta = 0.0;
    double mass = 0.0;     // trapezoid integral of the density
    double mu_half = 0.0;  // trapezoid integral of sqrt(x) * density
    std::size_t max_iterations = 0;
};

// Limiting spectral law of S = (1/m) H D D^T H for Gaussian D and the given
// eigenvalues of H.
StieltjesSolution stieltjes_solve(std::span<const double> spectrum, std::span<const double> grid, double eta,
                                  const StieltjesOptions& opts = {});

inline constexpr double kDefaultStieltjesEta = 1e-4;
inline constexpr std::size_t kDefaultStieltjesGrid = 4000;

// Uniform grid on [0, 4.2 max(lambda)^2].
std::vector<double> default_stieltjes_grid(std::span<const double> spectrum,
                                           std::size_t points = kDefaultStieltjesGrid);

// Union of the uniform grid and a geometric grid reaching down to
// 1e-6 min(lambda)^2, for spectra whose bulk sits far below a fixed eta.
std::vector<double> graded_stieltjes_grid(std::span<const double> spectrum,
                                          std::size_t points = kDefaultStieltjesGrid);

// Graded grid with eta_rel = 1e-5; used by muon_theory_score.
StieltjesSolution solve_for_spectrum(std::span<const double> spectrum);

// m^3 mu_half^2 / sum(lambda).
double muon_theory_score(std::span<const double> spectrum, std::size_t m);
// n sum(lambda).
double newton_theory_score(std::span<const double> spectrum, std::size_t n);
// n tr(H^2)^2 / tr(H^3).
double gd_theory_score(std::span<const double> spectrum, std::size_t n);

// Largest gap between the empirical CDF of `samples` and the CDF implied by
// the density on its grid.
double ks_distance(const StieltjesSolution& sol, std::vector<double> samples);

// ------------------------------------------------------------ spiked study

enum class ActivationModel { Spiked, Isotropic };

std::string to_string(ActivationModel a);
ActivationModel activation_model_from_string(const std::string& s);

struct ScoreStudyConfig {
    std::size_t m = 128;
    std::size_t n = 128;
    std::size_t N = 2048;
    double kappa = 64.0;
    SpectrumSpec spectrum{128, 1.0, 1e-4, 0.3};
    std::size_t trials = 64;
    std::uint64_t seed = 0;
    // Isotropic uses Z Z^T / N = I exactly and ignores N and kappa.
    ActivationModel activation = ActivationModel::Spiked;

    void validate() const;
};

// Columns z_i ~ Normal(0, diag(kappa, 1, ..., 1)), H = P diag(spectrum) P^T,
// D with iid standard normal entries.
TripletInstance sample_study_instance(Rng& rng, const ScoreStudyConfig& cfg);

struct ScoreSummary {
    double mean = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

struct ScoreStudyResult {
    std::vector<DirectionScores> trials;     // kept trials, in trial order
    std::vector<std::size_t> trial_index;    // seed stream of each kept trial
    std::size_t excluded = 0;                // degenerate instances dropped
    std::array<ScoreSummary, kDirectionCount> summary;
};

// Trials whose instance is degenerate (a library error or a non-finite score)
// are dropped and counted. `threads` splits trials across workers; results do
// not depend on it.
ScoreStudyResult run_score_study(const ScoreStudyConfig& cfg, std::size_t threads = 1);

// Linear interpolation between order statistics.
double quantile(std::vector<double> xs, double q);

}  // namespace nmuon
