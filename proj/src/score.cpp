#include "nmuon/score.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <thread>

#include "nmuon/matrix_sign.hpp"

namespace nmuon {

// ------------------------------------------------------------ instances

TripletInstance TripletInstance::from_activations(SymMatrix h, DenseMatrix d, DenseMatrix z) {
    if (z.rows() != d.cols() || z.cols() == 0) throw DimensionMismatch("Z must be n x N with N >= 1");
    TripletInstance inst;
    inst.N = z.cols();
    inst.A = syrk(z).scaled(1.0 / double(inst.N));
    inst.Z = std::move(z);
    inst.H = std::move(h);
    inst.D = std::move(d);
    inst.G = matmul(matmul(inst.H, inst.D), inst.A);
    inst.validate();
    return inst;
}

TripletInstance TripletInstance::from_second_moment(SymMatrix h, DenseMatrix d, SymMatrix a) {
    TripletInstance inst;
    inst.H = std::move(h);
    inst.D = std::move(d);
    inst.A = std::move(a);
    inst.G = matmul(matmul(inst.H, inst.D), inst.A);
    inst.validate();
    return inst;
}

void TripletInstance::validate() const {
    if (H.dim() != D.rows() || A.dim() != D.cols() || G.rows() != D.rows() || G.cols() != D.cols())
        throw DimensionMismatch("triplet instance shapes disagree");
    if (!Z.empty() && (Z.rows() != D.cols() || Z.cols() != N)) throw DimensionMismatch("Z must be n x N");
    if (!H.dense().all_finite() || !D.all_finite() || !A.dense().all_finite())
        throw NonFiniteValue("triplet instance has non-finite entries");
    const DenseMatrix implied = matmul(matmul(H, D), A);
    if (frobenius_distance(implied, G) > 1e-10 * std::max(implied.frobenius_norm(), 1e-300))
        throw Error("G differs from H D (Z Z^T / N)");
    cholesky_factor(H);
    cholesky_factor(A);
}

// ------------------------------------------------------------ scores

double score(const DenseMatrix& q, const TripletInstance& inst) {
    if (q.rows() != inst.m() || q.cols() != inst.n()) throw DimensionMismatch("score: Q must match G");
    const double num = inner(q, inst.G);
    const double den = inner(matmul(inst.H, q), matmul(q, inst.A));
    if (!(den > 1e-300)) throw DegenerateDirection("score: curvature along Q is not positive");
    return num * num / den;
}

double score_gd_closed(const TripletInstance& inst) {
    const DenseMatrix& h = inst.H.dense();
    const DenseMatrix& a = inst.A.dense();
    const DenseMatrix h2 = matmul(h, h), h3 = matmul(h2, h);
    const DenseMatrix a2 = matmul(a, a), a3 = matmul(a2, a);
    const double num = inner(matmul(matmul(h2, inst.D), a2), inst.D);
    const double den = inner(matmul(matmul(h3, inst.D), a3), inst.D);
    if (!(den > 1e-300)) throw DegenerateDirection("score: curvature along G is not positive");
    return num * num / den;
}

double score_muon_closed(const TripletInstance& inst) {
    const CompactSVD svd = compact_svd(inst.G);
    double nuc = 0.0;
    for (double s : svd.S) nuc += s;
    const DenseMatrix uhu = matmul_tn(svd.U, matmul(inst.H, svd.U));
    const DenseMatrix vav = matmul_tn(svd.V, matmul(inst.A, svd.V));
    const double den = inner(uhu, vav);
    if (!(den > 1e-300)) throw DegenerateDirection("score: curvature along msgn(G) is not positive");
    return nuc * nuc / den;
}

double score_newton_closed(const TripletInstance& inst) {
    return inner(matmul(matmul(inst.H, inst.D), inst.A), inst.D);
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::Gradient: return "gradient";
        case Direction::MuonSvd: return "muon-svd";
        case Direction::MuonNs5: return "muon-ns5";
        case Direction::NewtonMuonSvd: return "nm-svd";
        case Direction::NewtonMuonNs5: return "nm-ns5";
        case Direction::Newton: return "newton";
    }
    return "unknown";
}

DenseMatrix direction(Direction d, const TripletInstance& inst) {
    switch (d) {
        case Direction::Gradient: return inst.G;
        case Direction::MuonSvd: return msgn_exact(inst.G);
        case Direction::MuonNs5: return newton_schulz5(inst.G);
        case Direction::NewtonMuonSvd: return msgn_exact(matmul(inst.G, cholesky_inverse(inst.A)));
        case Direction::NewtonMuonNs5: return newton_schulz5(matmul(inst.G, cholesky_inverse(inst.A)));
        case Direction::Newton:
            return matmul(cholesky_inverse(inst.H), matmul(inst.G, cholesky_inverse(inst.A)));
    }
    return inst.G;
}

DenseMatrix sigma_polar_direction(const TripletInstance& inst) {
    const SymMatrix root = psd_sqrt(syrk(inst.D));
    return matmul(root, msgn_exact(matmul(root, matmul(inst.G, cholesky_inverse(inst.A)))));
}

DirectionScores six_direction_scores(const TripletInstance& inst) {
    DirectionScores out{};
    for (std::size_t k = 0; k < kDirectionCount; ++k) out[k] = score(direction(kAllDirections[k], inst), inst);
    return out;
}

void SpectrumSpec::validate() const {
    if (m < 1) throw ConfigError("spectrum needs m >= 1");
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !std::isfinite(lambda_max))
        throw ConfigError("spectrum needs 0 < lambda_min <= lambda_max");
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("spectrum needs p > 0");
}

std::vector<double> SpectrumSpec::values() const {
    validate();
    std::vector<double> out(m, lambda_max);
    if (m == 1) return out;
    const double tau = std::log(lambda_max / lambda_min) / std::pow(double(m - 1), p);
    for (std::size_t k = 1; k < m; ++k) out[k] = lambda_max * std::exp(-tau * std::pow(double(k), p));
    return out;
}

// ------------------------------------------------------------ Kronecker

std::vector<double> vec(const DenseMatrix& q) {
    std::vector<double> v(q.size());
    for (std::size_t j = 0; j < q.cols(); ++j)
        for (std::size_t i = 0; i < q.rows(); ++i) v[i + j * q.rows()] = q(i, j);
    return v;
}

DenseMatrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) throw DimensionMismatch("unvec: length is not rows * cols");
    DenseMatrix q(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) q(i, j) = v[i + j * rows];
    return q;
}

namespace {

void check_kron_size(std::size_t m, std::size_t n) {
    if (m * n > kKronDimCap) throw SizeCapExceeded("Kronecker Hessian needs m n <= 4096");
}

}  // namespace

SymMatrix kron(const SymMatrix& a, const SymMatrix& h) {
    const std::size_t n = a.dim(), m = h.dim();
    check_kron_size(m, n);
    DenseMatrix out(m * n, m * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) {
            const double ajl = a(j, l);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < m; ++k) out(i + j * m, k + l * m) = ajl * h(i, k);
        }
    return SymMatrix::from_lower(out);
}

SymMatrix kron_hessian_exact(const DenseMatrix& z, const std::vector<SymMatrix>& h_blocks) {
    const std::size_t n = z.rows(), big_n = z.cols();
    if (h_blocks.size() != big_n || big_n == 0) throw DimensionMismatch("need one H block per column of Z");
    const std::size_t m = h_blocks.front().dim();
    check_kron_size(m, n);
    for (const auto& h : h_blocks)
        if (h.dim() != m) throw DimensionMismatch("H blocks must share a size");
    DenseMatrix out(m * n, m * n);
    for (std::size_t t = 0; t < big_n; ++t) {
        const SymMatrix& h = h_blocks[t];
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l) {
                const double c = z(j, t) * z(l, t) / double(big_n);
                if (c == 0.0) continue;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t k = 0; k < m; ++k) out(i + j * m, k + l * m) += c * h(i, k);
            }
    }
    return SymMatrix::from_lower(out);
}

SymMatrix kron_hessian_approx(const DenseMatrix& z, const SymMatrix& h) {
    if (z.cols() == 0) throw DimensionMismatch("Z needs at least one column");
    check_kron_size(h.dim(), z.rows());
    return kron(syrk(z).scaled(1.0 / double(z.cols())), h);
}

std::vector<double> symv(const SymMatrix& k, std::span<const double> x) {
    if (x.size() != k.dim()) throw DimensionMismatch("symv: length mismatch");
    std::vector<double> y(k.dim(), 0.0);
    for (std::size_t i = 0; i < k.dim(); ++i) {
        double acc = 0.0;
        const auto row = k.dense().row(i);
        for (std::size_t j = 0; j < x.size(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

// ------------------------------------------------------------ random-matrix theory

namespace {

struct Atom {
    double lambda_sq;
    double weight;
};

std::vector<Atom> compress(std::span<const double> spectrum) {
    std::map<double, std::size_t> counts;
    for (double l : spectrum) ++counts[l * l];
    std::vector<Atom> atoms;
    atoms.reserve(counts.size());
    for (auto [l2, c] : counts) atoms.push_back({l2, double(c) / double(spectrum.size())});
    return atoms;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return acc;
}

}  // namespace

StieltjesSolution stieltjes_solve(std::span<const double> spectrum, std::span<const double> grid, double eta,
                                  const StieltjesOptions& opts) {
    if (spectrum.empty()) throw DimensionMismatch("stieltjes_solve: empty spectrum");
    double lmax = 0.0;
    for (double l : spectrum) {
        if (!(l > 0.0) || !std::isfinite(l)) throw Error("stieltjes_solve: spectrum must be positive");
        lmax = std::max(lmax, l);
    }
    if (!(eta > 0.0)) throw Error("stieltjes_solve: eta must be positive");
    if (grid.size() < 2 || grid.front() > 0.0 || grid.back() < 4.0 * lmax * lmax)
        throw Error("stieltjes_solve: grid must cover [0, 4 max(lambda)^2]");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw Error("stieltjes_solve: grid must be increasing");

    const std::vector<Atom> atoms = compress(spectrum);
    StieltjesSolution sol;
    sol.eta = eta;
    sol.grid_x.assign(grid.begin(), grid.end());
    sol.density.resize(grid.size());
    sol.m_values.resize(grid.size());

    const double w = opts.damping;
    std::complex<double> m(0.0, 1.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::complex<double> z(grid[g], std::max(eta, opts.eta_rel * grid[g]));
        std::size_t it = 0;
        for (;; ++it) {
            if (it == opts.max_iter) throw FixedPointDiverged(grid[g], it);
            std::complex<double> acc = 0.0;
            for (const Atom& a : atoms) acc += a.weight / (1.0 + a.lambda_sq * m);
            std::complex<double> next = (1.0 - w) * m - w * acc / z;
            if (next.imag() < 0.0) next = std::conj(next);
            const double delta = std::abs(next - m);
            m = next;
            if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) throw FixedPointDiverged(grid[g], it);
            if (delta <= opts.tol * std::max(1.0, std::abs(m))) break;
        }
        sol.max_iterations = std::max(sol.max_iterations, it + 1);
        sol.m_values[g] = m;
        sol.density[g] = std::max(m.imag(), 0.0) / M_PI;
    }
    std::vector<double> weighted(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) weighted[g] = std::sqrt(grid[g]) * sol.density[g];
    sol.mass = trapezoid(sol.grid_x, sol.density);
    sol.mu_half = trapezoid(sol.grid_x, weighted);
    return sol;
}

std::vector<double> default_stieltjes_grid(std::span<const double> spectrum, std::size_t points) {
    if (points < 2) throw Error("grid needs at least two points");
    double lmax = 0.0;
    for (double l : spectrum) lmax = std::max(lmax, l);
    const double top = 4.2 * lmax * lmax;
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = top * double(i) / double(points - 1);
    return grid;
}

std::vector<double> graded_stieltjes_grid(std::span<const double> spectrum, std::size_t points) {
    std::vector<double> grid = default_stieltjes_grid(spectrum, points);
    const auto [lo_it, hi_it] = std::minmax_element(spectrum.begin(), spectrum.end());
    const double lo = 1e-6 * *lo_it * *lo_it, top = grid.back();
    for (std::size_t i = 0; i < points; ++i)
        grid.push_back(lo * std::pow(top / lo, double(i) / double(points - 1)));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

StieltjesSolution solve_for_spectrum(std::span<const double> spectrum) {
    if (spectrum.empty()) throw DimensionMismatch("solve_for_spectrum: empty spectrum");
    const double lmin = *std::min_element(spectrum.begin(), spectrum.end());
    StieltjesOptions opts;
    opts.eta_rel = 1e-5;
    return stieltjes_solve(spectrum, graded_stieltjes_grid(spectrum), 1e-10 * lmin * lmin, opts);
}

double muon_theory_score(std::span<const double> spectrum, std::size_t m) {
    if (spectrum.size() != m) throw DimensionMismatch("muon_theory_score: spectrum length must be m");
    const StieltjesSolution sol = solve_for_spectrum(spectrum);
    double tr = 0.0;
    for (double l : spectrum) tr += l;
    const double md = double(m);
    return md * md * md * sol.mu_half * sol.mu_half / tr;
}

double newton_theory_score(std::span<const double> spectrum, std::size_t n) {
    double tr = 0.0;
    for (double l : spectrum) tr += l;
    return double(n) * tr;
}

double gd_theory_score(std::span<const double> spectrum, std::size_t n) {
    double t2 = 0.0, t3 = 0.0;
    for (double l : spectrum) {
        t2 += l * l;
        t3 += l * l * l;
    }
    return double(n) * t2 * t2 / t3;
}

double ks_distance(const StieltjesSolution& sol, std::vector<double> samples) {
    if (samples.empty()) throw Error("ks_distance: no samples");
    const std::size_t g = sol.grid_x.size();
    std::vector<double> cdf(g, 0.0);
    for (std::size_t i = 1; i < g; ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (sol.grid_x[i] - sol.grid_x[i - 1]) * (sol.density[i] + sol.density[i - 1]);
    const double total = cdf.back();
    for (double& c : cdf) c /= total;
    auto model_cdf = [&](double x) {
        if (x <= sol.grid_x.front()) return 0.0;
        if (x >= sol.grid_x.back()) return 1.0;
        const auto it = std::upper_bound(sol.grid_x.begin(), sol.grid_x.end(), x);
        const std::size_t hi = std::size_t(it - sol.grid_x.begin()), lo = hi - 1;
        const double t = (x - sol.grid_x[lo]) / (sol.grid_x[hi] - sol.grid_x[lo]);
        return cdf[lo] + t * (cdf[hi] - cdf[lo]);
    };
    std::sort(samples.begin(), samples.end());
    const double k = double(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = model_cdf(samples[i]);
        d = std::max({d, std::abs(double(i + 1) / k - f), std::abs(double(i) / k - f)});
    }
    return d;
}

// ------------------------------------------------------------ spiked study

std::string to_string(ActivationModel a) {
    return a == ActivationModel::Spiked ? "spiked" : "isotropic";
}

ActivationModel activation_model_from_string(const std::string& s) {
    if (s == "spiked") return ActivationModel::Spiked;
    if (s == "isotropic") return ActivationModel::Isotropic;
    throw ConfigError("unknown activation model '" + s + "'");
}

void ScoreStudyConfig::validate() const {
    if (m < 1 || n < 1) throw ConfigError("score study needs m, n >= 1");
    if (trials < 1) throw ConfigError("score study needs trials >= 1");
    if (spectrum.m != m) throw ConfigError("spectrum length must equal m");
    spectrum.validate();
    if (activation == ActivationModel::Spiked) {
        if (N < n) throw ConfigError("spiked study needs N >= n for a full-rank second moment");
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
    }
}

TripletInstance sample_study_instance(Rng& rng, const ScoreStudyConfig& cfg) {
    const std::vector<double> eigs = cfg.spectrum.values();
    SymMatrix h = conjugated_diagonal(rng, eigs);
    DenseMatrix d = gaussian_matrix(rng, cfg.m, cfg.n);
    if (cfg.activation == ActivationModel::Isotropic)
        return TripletInstance::from_second_moment(std::move(h), std::move(d), SymMatrix::identity(cfg.n));
    DenseMatrix z = gaussian_matrix(rng, cfg.n, cfg.N);
    const double s = std::sqrt(cfg.kappa);
    for (double& v : z.row(0)) v *= s;
    return TripletInstance::from_activations(std::move(h), std::move(d), std::move(z));
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw Error("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = std::clamp(q, 0.0, 1.0) * double(xs.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - double(lo)) * (xs[hi] - xs[lo]);
}

ScoreStudyResult run_score_study(const ScoreStudyConfig& cfg, std::size_t threads) {
    cfg.validate();
    std::vector<std::optional<DirectionScores>> slots(cfg.trials);
    auto run_range = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t t = begin; t < cfg.trials; t += stride) {
            try {
                Rng rng = make_rng(cfg.seed, t);
                const DirectionScores s = six_direction_scores(sample_study_instance(rng, cfg));
                if (std::all_of(s.begin(), s.end(), [](double x) { return std::isfinite(x); })) slots[t] = s;
            } catch (const Error&) {
            }
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, cfg.trials);
    if (threads == 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(run_range, w, threads);
        for (auto& th : pool) th.join();
    }

    ScoreStudyResult res;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        if (slots[t]) {
            res.trials.push_back(*slots[t]);
            res.trial_index.push_back(t);
        } else {
            ++res.excluded;
        }
    }
    if (res.trials.empty()) throw Error("every score-study trial was degenerate");
    const std::size_t kept = res.trials.size();
    for (std::size_t k = 0; k < kDirectionCount; ++k) {
        std::vector<double> xs(kept);
        double sum = 0.0;
        for (std::size_t t = 0; t < kept; ++t) sum += xs[t] = res.trials[t][k];
        res.summary[k] = {sum / double(kept), quantile(xs, 0.025), quantile(xs, 0.975)};
    }
    return res;
}

}  // namespace nmuon
