#include "nmuon/spike.hpp"

#include <algorithm>
#include <cmath>

#include "nmuon/matrix_sign.hpp"

namespace nmuon {

std::string to_string(SpikeMethod m) {
    switch (m) {
        case SpikeMethod::GD: return "gd";
        case SpikeMethod::Muon: return "muon";
        case SpikeMethod::NewtonMuon: return "newton-muon";
    }
    return "unknown";
}

SpikeMethod spike_method_from_string(const std::string& s) {
    if (s == "gd") return SpikeMethod::GD;
    if (s == "muon") return SpikeMethod::Muon;
    if (s == "newton-muon" || s == "nm") return SpikeMethod::NewtonMuon;
    throw ConfigError("unknown spike method '" + s + "'");
}

double SpikeState::max_abs() const {
    double m = std::abs(alpha1);
    for (double b : betas) m = std::max(m, std::abs(b));
    return m;
}

// ------------------------------------------------------------------ model

DenseMatrix SpikeModel::assemble(const SpikeState& s) const {
    DenseMatrix d(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = U(i, 0) * s.alpha1 * e1[j];
            for (std::size_t k = 0; k < r; ++k) v += U(i, k) * s.betas[k] * B(j, k);
            d(i, j) = v;
        }
    }
    return d;
}

DenseMatrix SpikeModel::w_star() const { return -1.0 * assemble(initial_state()); }

SpikeState SpikeModel::extract(const DenseMatrix& d) const {
    // u_i^T D, one row vector per mode.
    const DenseMatrix ud = matmul_tn(U, d);
    SpikeState s;
    s.betas.resize(r);
    for (std::size_t j = 0; j < n; ++j) s.alpha1 += ud(0, j) * e1[j];
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t j = 0; j < n; ++j) s.betas[k] += ud(k, j) * B(j, k);
    return s;
}

SpikeState SpikeModel::initial_state() const { return {alpha0, betas0, 0}; }

void SpikeModel::validate() const {
    if (!(kappa > 1.0)) throw Error("spike model needs kappa > 1");
    if (r < 1 || r > m || r + 1 > n) throw DimensionMismatch("spike model needs 1 <= r <= m and r <= n - 1");
    if (betas0.size() != r) throw DimensionMismatch("spike model needs r initial betas");
    if (alpha0 == 0.0 && betas0[0] == 0.0) throw Error("spike model needs (alpha0, beta_1) != (0, 0)");
    for (std::size_t k = 1; k < r; ++k)
        if (betas0[k] == 0.0) throw Error("spike model needs beta_i != 0 for i >= 2");
    const DenseMatrix eye = DenseMatrix::identity(r);
    if ((matmul_tn(U, U) - eye).frobenius_norm() > 1e-10 || (matmul_tn(B, B) - eye).frobenius_norm() > 1e-10)
        throw Error("spike model frames are not orthonormal");
    for (std::size_t k = 0; k < r; ++k) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += B(j, k) * e1[j];
        if (std::abs(dot) > 1e-10) throw Error("spike model: b_i not orthogonal to e_1");
    }
}

namespace {

SpikeModel build_frames(Rng& rng, std::size_t m, std::size_t n, std::size_t r, double kappa) {
    if (r < 1 || r > m || r + 1 > n) throw DimensionMismatch("spike model needs 1 <= r <= m and r <= n - 1");
    SpikeModel model;
    model.m = m;
    model.n = n;
    model.r = r;
    model.kappa = kappa;
    model.U = random_orthonormal_columns(rng, m, r);
    const DenseMatrix uz = random_orthogonal(rng, n);
    model.e1 = uz.column(0);
    // B spans a random r-dimensional subspace of e1-perp.
    DenseMatrix rest(n, n - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 1; j < n; ++j) rest(i, j - 1) = uz(i, j);
    model.B = matmul(rest, random_orthonormal_columns(rng, n - 1, r));
    std::vector<double> eig(n, 1.0);
    eig[0] = kappa;
    DenseMatrix scaled = uz;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= eig[j];
    model.zzt = SymMatrix::from_lower(matmul_nt(scaled, uz));
    return model;
}

}  // namespace

SpikeModel make_spike_model(Rng& rng, std::size_t m, std::size_t n, std::size_t r, double kappa) {
    SpikeModel model = build_frames(rng, m, n, r, kappa);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    std::bernoulli_distribution sign(0.5);
    auto draw = [&] { return (sign(rng) ? 1.0 : -1.0) * mag(rng); };
    model.alpha0 = draw();
    model.betas0.resize(r);
    for (double& b : model.betas0) b = draw();
    model.validate();
    return model;
}

SpikeModel make_spike_model(Rng& rng, std::size_t m, std::size_t n, double kappa, double alpha0,
                            std::vector<double> betas0) {
    SpikeModel model = build_frames(rng, m, n, betas0.size(), kappa);
    model.alpha0 = alpha0;
    model.betas0 = std::move(betas0);
    model.validate();
    return model;
}

// ------------------------------------------------------------- recursions

namespace {

double unit_sign(double b) { return b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0); }

}  // namespace

SpikeState scalar_step(SpikeMethod method, const SpikeState& s, double kappa, double eta) {
    SpikeState next = s;
    next.t = s.t + 1;
    const double a = s.alpha1;
    const double b1 = s.betas.empty() ? 0.0 : s.betas[0];
    switch (method) {
        case SpikeMethod::GD:
            next.alpha1 = (1.0 - eta * kappa) * a;
            for (auto& b : next.betas) b *= 1.0 - eta;
            return next;
        case SpikeMethod::Muon: {
            const double nrm = std::sqrt(kappa * kappa * a * a + b1 * b1);
            if (nrm > 0.0) {
                next.alpha1 = a - eta * kappa * a / nrm;
                next.betas[0] = b1 - eta * b1 / nrm;
            }
            break;
        }
        case SpikeMethod::NewtonMuon: {
            const double nrm = std::sqrt(a * a + b1 * b1);
            if (nrm > 0.0) {
                next.alpha1 = a - eta * a / nrm;
                next.betas[0] = b1 - eta * b1 / nrm;
            }
            break;
        }
    }
    for (std::size_t i = 1; i < next.betas.size(); ++i) next.betas[i] = s.betas[i] - eta * unit_sign(s.betas[i]);
    return next;
}

double greedy_eta(SpikeMethod method, double r_t, double kappa) {
    switch (method) {
        case SpikeMethod::GD: return 2.0 / (kappa + 1.0);
        case SpikeMethod::NewtonMuon: return (2.0 - std::sqrt(2.0)) * r_t;
        case SpikeMethod::Muon: {
            const double root = std::sqrt(kappa * kappa + 1.0);
            return r_t * root / (root + 1.0);
        }
    }
    return 0.0;
}

double contraction_factor(SpikeMethod method, double kappa) {
    switch (method) {
        case SpikeMethod::GD: return (kappa - 1.0) / (kappa + 1.0);
        case SpikeMethod::NewtonMuon: return 2.0 - std::sqrt(2.0);
        case SpikeMethod::Muon: {
            const double root = std::sqrt(kappa * kappa + 1.0);
            return root / (root + 1.0);
        }
    }
    return 1.0;
}

std::size_t iterations_to_eps(SpikeMethod method, double r0, double eps, double kappa) {
    if (!(eps > 0.0 && eps < r0)) throw Error("iterations_to_eps needs 0 < eps < r0");
    const double rho = contraction_factor(method, kappa);
    if (!(rho < 1.0)) throw Error("contraction factor must be < 1");
    std::size_t t = 0;
    for (double r = r0; r > eps; r *= rho) ++t;
    return t;
}

double EtaRule::eta(SpikeMethod method, const SpikeState& s, double kappa) const {
    switch (kind) {
        case Kind::Constant: return value;
        case Kind::Greedy: return greedy_eta(method, s.max_abs(), kappa);
        case Kind::Schedule:
            if (s.t >= schedule.size()) throw Error("eta schedule shorter than the run");
            return schedule[s.t];
    }
    return 0.0;
}

// ------------------------------------------------------------- simulation

namespace {

// Polar factor with singular values below `floor` treated as zero. Rounding in
// W - W* leaves O(ulp * ||W*||) noise off the invariant basis, and the sign map
// would lift it to unit size once the iterate itself gets small.
DenseMatrix floored_msgn(const DenseMatrix& g, double floor) {
    const CompactSVD svd = compact_svd(g, 0.0);
    DenseMatrix out(g.rows(), g.cols());
    for (std::size_t k = 0; k < svd.rank() && svd.S[k] > floor; ++k)
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) out(i, j) += svd.U(i, k) * svd.V(j, k);
    return out;
}

// Full-batch direction for f(W) = 1/2 ||(W - W*) Z||_F^2 at displacement D.
DenseMatrix spike_direction(SpikeMethod method, const DenseMatrix& d, const SpikeModel& model,
                            const SymMatrix& zzt_inv, double noise) {
    const DenseMatrix g = matmul(d, model.zzt);
    switch (method) {
        case SpikeMethod::GD: return g;
        case SpikeMethod::Muon: return floored_msgn(g, noise * model.kappa);
        case SpikeMethod::NewtonMuon: return floored_msgn(matmul(g, zzt_inv), noise);
    }
    return g;
}

double noise_floor(const DenseMatrix& ws) { return 1e-12 * ws.frobenius_norm(); }

}  // namespace

std::vector<SpikePoint> matrix_simulate(const SpikeModel& model, SpikeMethod method, std::size_t steps,
                                        const EtaRule& rule) {
    model.validate();
    const DenseMatrix ws = model.w_star();
    const double scale = ws.frobenius_norm();
    const SymMatrix zzt_inv = cholesky_inverse(model.zzt);
    DenseMatrix w(model.m, model.n);

    std::vector<SpikePoint> out;
    out.reserve(steps + 1);
    for (std::size_t t = 0;; ++t) {
        const DenseMatrix d = w - ws;
        SpikePoint p;
        p.state = model.extract(d);
        p.state.t = t;
        p.frobenius_residual = d.frobenius_norm();
        p.off_basis = (d - model.assemble(p.state)).frobenius_norm();
        if (p.off_basis > 1e-9 * scale) throw DecompositionViolated(t, p.off_basis);
        if (t == steps) {
            out.push_back(std::move(p));
            break;
        }
        p.eta = rule.eta(method, p.state, model.kappa);
        const DenseMatrix dir = spike_direction(method, d, model, zzt_inv, noise_floor(ws));
        w -= p.eta * dir;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<SpikeState> scalar_simulate(const SpikeModel& model, SpikeMethod method, std::size_t steps,
                                        const EtaRule& rule) {
    std::vector<SpikeState> out{model.initial_state()};
    for (std::size_t t = 0; t < steps; ++t) {
        const SpikeState& s = out.back();
        out.push_back(scalar_step(method, s, model.kappa, rule.eta(method, s, model.kappa)));
    }
    return out;
}

MatrixConvergence matrix_iterations_to_eps(const SpikeModel& model, SpikeMethod method, double eps,
                                           std::size_t max_steps) {
    model.validate();
    const DenseMatrix ws = model.w_star();
    const double scale = ws.frobenius_norm();
    const SymMatrix zzt_inv = cholesky_inverse(model.zzt);
    const EtaRule rule = EtaRule::greedy();
    DenseMatrix w(model.m, model.n);
    SpikeState scalar = model.initial_state();
    MatrixConvergence out;
    for (std::size_t t = 0; t <= max_steps; ++t) {
        const DenseMatrix d = w - ws;
        SpikeState s = model.extract(d);
        s.t = t;
        const double off = (d - model.assemble(s)).frobenius_norm();
        if (off > 1e-9 * scale) throw DecompositionViolated(t, off);
        double gap = std::abs(s.alpha1 - scalar.alpha1);
        for (std::size_t k = 0; k < s.betas.size(); ++k) gap = std::max(gap, std::abs(s.betas[k] - scalar.betas[k]));
        out.max_scalar_gap = std::max(out.max_scalar_gap, gap);
        if (s.max_abs() <= eps) {
            out.iterations = t;
            out.reached = true;
            return out;
        }
        if (t == max_steps) break;
        const double eta = rule.eta(method, s, model.kappa);
        const DenseMatrix dir = spike_direction(method, d, model, zzt_inv, noise_floor(ws));
        w -= eta * dir;
        scalar = scalar_step(method, scalar, model.kappa, rule.eta(method, scalar, model.kappa));
    }
    out.iterations = max_steps;
    return out;
}

}  // namespace nmuon
