#include "nmuon/optimizers.hpp"

#include <cmath>
#include <numbers>

namespace nmuon {

namespace {

struct VariantName {
    MatrixVariant v;
    const char* name;
};

constexpr VariantName kVariantNames[] = {
    {MatrixVariant::GD, "gd"},
    {MatrixVariant::MuonSvd, "muon-svd"},
    {MatrixVariant::MuonNs5, "muon-ns5"},
    {MatrixVariant::NewtonMuonSvd, "nm-svd"},
    {MatrixVariant::NewtonMuonNs5, "nm-ns5"},
    {MatrixVariant::FactorizedSigma, "factorized-sigma"},
    {MatrixVariant::DiagSigma, "diag-sigma"},
};

void same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch(what);
}

// (1 - lr wd) W - lr D
DenseMatrix apply_update(const DenseMatrix& w, const DenseMatrix& dir, double lr, double wd) {
    DenseMatrix out = w;
    if (wd != 0.0) out *= 1.0 - lr * wd;
    for (std::size_t k = 0; k < out.size(); ++k) out.values()[k] -= lr * dir.values()[k];
    return out;
}

void accumulate(DenseMatrix& buf, double mu, const DenseMatrix& g) {
    buf *= mu;
    buf += g;
}

DenseMatrix scale_rows(const std::vector<double>& d, const DenseMatrix& a) {
    DenseMatrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (double& x : out.row(i)) x *= d[i];
    return out;
}

}  // namespace

std::string to_string(MatrixVariant v) {
    for (const auto& e : kVariantNames)
        if (e.v == v) return e.name;
    return "unknown";
}

MatrixVariant matrix_variant_from_string(const std::string& s) {
    for (const auto& e : kVariantNames)
        if (s == e.name) return e.v;
    throw ConfigError("unknown optimizer variant '" + s + "'");
}

bool uses_preconditioner(MatrixVariant v) {
    return v == MatrixVariant::NewtonMuonSvd || v == MatrixVariant::NewtonMuonNs5 ||
           v == MatrixVariant::FactorizedSigma || v == MatrixVariant::DiagSigma;
}

SignBackend sign_backend_of(MatrixVariant v) {
    return v == MatrixVariant::MuonNs5 || v == MatrixVariant::NewtonMuonNs5 ? SignBackend::NewtonSchulz5
                                                                            : SignBackend::Svd;
}

DenseMatrix gd_step(const DenseMatrix& w, const DenseMatrix& g, double lr) {
    same_shape(w, g, "gd_step: W and G differ in shape");
    return apply_update(w, g, lr, 0.0);
}

MatrixOptState::MatrixOptState(std::size_t rows, std::size_t cols, double lr_, double mu_, double wd,
                               MatrixVariant v)
    : momentum_buf(rows, cols), mu(mu_), lr(lr_), weight_decay(wd), variant(v) {
    validate();
}

void MatrixOptState::validate() const {
    if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("momentum mu must lie in [0, 1)");
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

DenseMatrix muon_step(MatrixOptState& state, const DenseMatrix& w, const DenseMatrix& g, SignBackend backend) {
    same_shape(w, g, "muon_step: W and G differ in shape");
    same_shape(state.momentum_buf, g, "muon_step: momentum buffer shape");
    accumulate(state.momentum_buf, state.mu, g);
    return apply_update(w, msgn(state.momentum_buf, backend), state.lr, state.weight_decay);
}

DenseMatrix newton_muon_step(MatrixOptState& state, SecondMomentState& precond, const DenseMatrix& w,
                             const DenseMatrix& g, const DenseMatrix& z, std::size_t step,
                             SignBackend backend) {
    precond.maybe_refresh(z, step);
    return muon_step(state, w, precond.apply_right_precond(g), backend);
}

AdamWState::AdamWState(std::size_t rows, std::size_t cols, AdamWConfig c) : m(rows, cols), v(rows, cols), cfg(c) {
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
        throw ConfigError("AdamW betas must lie in [0, 1)");
    if (!(c.eps > 0.0)) throw ConfigError("AdamW eps must be > 0");
}

DenseMatrix adamw_step(AdamWState& s, const DenseMatrix& w, const DenseMatrix& g) {
    return adamw_step(s, w, g, s.cfg.lr);
}

DenseMatrix adamw_step(AdamWState& s, const DenseMatrix& w, const DenseMatrix& g, double lr) {
    same_shape(w, g, "adamw_step: W and G differ in shape");
    same_shape(s.m, g, "adamw_step: state shape");
    ++s.t;
    const double b1 = s.cfg.beta1, b2 = s.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.t));
    DenseMatrix out = w;
    out *= 1.0 - lr * s.cfg.weight_decay;
    auto m = s.m.values();
    auto v = s.v.values();
    auto gv = g.values();
    auto o = out.values();
    for (std::size_t k = 0; k < o.size(); ++k) {
        m[k] = b1 * m[k] + (1.0 - b1) * gv[k];
        v[k] = b2 * v[k] + (1.0 - b2) * gv[k] * gv[k];
        const double mhat = m[k] / c1;
        const double vhat = v[k] / c2;
        o[k] -= lr * mhat / (std::sqrt(vhat) + s.cfg.eps);
    }
    return out;
}

DenseMatrix factorized_sigma_direction(const DenseMatrix& m, const DenseMatrix& g, const SymMatrix& zzt_inv,
                                       SignBackend backend) {
    if (m.rows() != g.rows()) throw DimensionMismatch("factorized_sigma_direction: M rows != G rows");
    return matmul(m, msgn(matmul_tn(m, matmul(g, zzt_inv)), backend));
}

DiagSigmaState::DiagSigmaState(std::size_t rows, double lambda_, double beta_)
    : u(rows, 1.0), lambda(lambda_), beta(beta_) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("sigma lambda must lie in [0, 1]");
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("sigma beta must lie in [0, 1)");
}

std::vector<double> DiagSigmaState::m_diag() const {
    double mean_sq = 0.0;
    for (double x : u) mean_sq += x * x;
    mean_sq /= static_cast<double>(u.size());
    std::vector<double> d(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) d[i] = std::sqrt(lambda * u[i] * u[i] + (1.0 - lambda) * mean_sq);
    return d;
}

DiagSigmaState diag_sigma_update(const DiagSigmaState& state, const DenseMatrix& q) {
    if (q.rows() != state.u.size()) throw DimensionMismatch("diag_sigma_update: row count mismatch");
    DiagSigmaState next = state;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double s = 0.0;
        for (double x : q.row(i)) s += x * x;
        next.u[i] = state.beta * state.u[i] + (1.0 - state.beta) * std::sqrt(s);
    }
    return next;
}

double lr_schedule(std::size_t step, std::size_t total, std::size_t warmup, double min_ratio, double base_lr) {
    if (step > total) throw Error("lr_schedule: step beyond total");
    if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (total == warmup) return base_lr;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return base_lr * (min_ratio + (1.0 - min_ratio) * cosine);
}

// ------------------------------------------------------------ MatrixOptimizer

MatrixOptimizer::MatrixOptimizer(std::size_t rows, std::size_t cols, const MatrixOptimizerConfig& cfg)
    : cfg_(cfg), state_(rows, cols, cfg.lr, cfg.mu, cfg.weight_decay, cfg.variant) {
    if (uses_preconditioner(cfg.variant)) precond_.emplace(cols, cfg.precond);
    if (cfg.variant == MatrixVariant::FactorizedSigma) sigma_m_ = DenseMatrix::identity(rows);
    if (cfg.variant == MatrixVariant::DiagSigma) diag_.emplace(rows, cfg.sigma_lambda, cfg.sigma_beta);
}

void MatrixOptimizer::set_sigma_factor(DenseMatrix m) {
    if (m.rows() != state_.momentum_buf.rows()) throw DimensionMismatch("sigma factor must have W's row count");
    sigma_m_ = std::move(m);
}

DenseMatrix MatrixOptimizer::step(const DenseMatrix& w, const DenseMatrix& g, const DenseMatrix* z,
                                  std::size_t step, std::optional<double> lr) {
    same_shape(w, g, "MatrixOptimizer::step: W and G differ in shape");
    const double rate = lr.value_or(cfg_.lr);
    DenseMatrix grad = g;
    if (precond_) {
        if (!z) throw DimensionMismatch("preconditioned variant needs layer inputs Z");
        precond_->maybe_refresh(*z, step);
        grad = precond_->apply_right_precond(g);
    }
    accumulate(state_.momentum_buf, state_.mu, grad);
    const DenseMatrix& buf = state_.momentum_buf;
    const SignBackend backend = sign_backend_of(cfg_.variant);

    switch (cfg_.variant) {
        case MatrixVariant::GD:
            last_dir_ = buf;
            break;
        case MatrixVariant::MuonSvd:
        case MatrixVariant::MuonNs5:
        case MatrixVariant::NewtonMuonSvd:
        case MatrixVariant::NewtonMuonNs5:
            last_dir_ = msgn(buf, backend);
            break;
        case MatrixVariant::FactorizedSigma:
            last_dir_ = matmul(sigma_m_, msgn(matmul_tn(sigma_m_, buf), backend));
            break;
        case MatrixVariant::DiagSigma: {
            // Normalized so that mean(M^2) = 1; the direction is defined up to scale.
            std::vector<double> d = diag_->m_diag();
            double ms = 0.0;
            for (double x : d) ms += x * x;
            ms = std::sqrt(ms / static_cast<double>(d.size()));
            if (ms > 0.0)
                for (double& x : d) x /= ms;
            last_dir_ = scale_rows(d, msgn(scale_rows(d, buf), backend));
            *diag_ = diag_sigma_update(*diag_, last_dir_);
            break;
        }
    }
    return apply_update(w, last_dir_, rate, cfg_.weight_decay);
}

}  // namespace nmuon
