#include "nmuon/bench/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nmuon/optimizers.hpp"
#include "nmuon/random.hpp"
#include "nmuon/spike.hpp"

namespace nmuon::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SpikeMethod spike_method(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::GD: return SpikeMethod::GD;
        case OptimizerKind::Muon: return SpikeMethod::Muon;
        case OptimizerKind::NewtonMuon: return SpikeMethod::NewtonMuon;
        case OptimizerKind::AdamW: break;
    }
    throw ConfigError("adamw has no greedy step rule");
}

void check_divergence(const std::string& label, std::size_t step, double loss, double initial) {
    if (!std::isfinite(loss) || loss > kDivergenceFactor * initial)
        throw Diverged("optimizer '" + label + "' diverged at step " + std::to_string(step) + ": loss " +
                       std::to_string(loss) + " vs initial " + std::to_string(initial));
}

// One parameter matrix with whichever update rule the block selects.
class ParamStepper {
public:
    ParamStepper(const OptimizerBlock& b, std::size_t rows, std::size_t cols) {
        if (b.kind == OptimizerKind::AdamW) {
            adam_.emplace(rows, cols, b.adamw_config());
        } else {
            const MatrixOptimizerConfig mc = b.matrix_config();
            if (uses_preconditioner(mc.variant)) mc.precond.validate(cols);
            mat_.emplace(rows, cols, mc);
        }
    }

    DenseMatrix step(const DenseMatrix& w, const DenseMatrix& g, const DenseMatrix& z, std::size_t t, double lr) {
        if (adam_) return adamw_step(*adam_, w, g, lr);
        return mat_->step(w, g, &z, t, lr);
    }

private:
    std::optional<AdamWState> adam_;
    std::optional<MatrixOptimizer> mat_;
};

double act(Activation a, double x) {
    switch (a) {
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Gelu: {
            const double c = std::sqrt(2.0 / std::numbers::pi);
            return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
        }
    }
    return x;
}

double act_grad(Activation a, double x) {
    switch (a) {
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Gelu: {
            const double c = std::sqrt(2.0 / std::numbers::pi);
            const double u = c * (x + 0.044715 * x * x * x);
            const double t = std::tanh(u);
            return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
        }
    }
    return 1.0;
}

DenseMatrix gather_columns(const DenseMatrix& a, std::span<const std::size_t> idx) {
    DenseMatrix out(a.rows(), idx.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = a(i, idx[j]);
    return out;
}

std::vector<double> input_eigenvalues(const ExperimentConfig& cfg) {
    const std::size_t d = cfg.mlp.widths.front();
    const double k = cfg.mlp.input_kappa;
    switch (cfg.mlp.input) {
        case InputModel::Isotropic: return std::vector<double>(d, 1.0);
        case InputModel::Spiked: {
            std::vector<double> e(d, 1.0);
            e[0] = k;
            return e;
        }
        case InputModel::Stretched: return SpectrumSpec{d, 1.0, 1.0 / k, cfg.p}.values();
    }
    return {};
}

}  // namespace

// ------------------------------------------------------------ quadratic

TrainRun train_quadratic(const ExperimentConfig& cfg, const OptimizerBlock& opt) {
    Rng rng = make_rng(cfg.seed, 0);
    const SpikeModel model = make_spike_model(rng, cfg.m, cfg.n, cfg.r, cfg.kappa);
    const DenseMatrix ws = model.w_star();
    const double inv_n = 1.0 / static_cast<double>(cfg.N);
    // Z Z^T / N equals the model's second moment exactly.
    const DenseMatrix q = random_orthonormal_columns(rng, cfg.N, cfg.n).transpose();
    const DenseMatrix z = std::sqrt(static_cast<double>(cfg.N)) * matmul(psd_sqrt(model.zzt), q);

    ParamStepper stepper(opt, cfg.m, cfg.n);
    const std::size_t total = cfg.schedule.total_steps;
    TrainRun run;
    run.label = opt.label;
    DenseMatrix w(cfg.m, cfg.n);
    const auto t0 = Clock::now();
    double initial = 0.0;
    for (std::size_t t = 0;; ++t) {
        const DenseMatrix d = w - ws;
        const DenseMatrix dz = matmul(d, z);
        const double loss = 0.5 * inv_n * inner(dz, dz);
        if (t == 0) initial = loss;
        check_divergence(opt.label, t, loss, initial);
        const double dist = d.frobenius_norm();
        double lr = 0.0;
        const bool done = dist <= cfg.target || t == total;
        if (!done) {
            lr = opt.greedy ? greedy_eta(spike_method(opt.kind), model.extract(d).max_abs(), cfg.kappa)
                            : lr_schedule(t, total, cfg.schedule.warmup, cfg.schedule.min_ratio, opt.lr);
        }
        run.curve.push_back({t, lr, loss, dist, std::nullopt, seconds_since(t0)});
        run.final_loss = loss;
        if (dist <= cfg.target) {
            run.steps_to_target = t;
            run.reached = true;
        }
        if (done) break;
        const DenseMatrix g = inv_n * matmul_nt(dz, z);
        w = stepper.step(w, g, z, t, lr);
    }
    return run;
}

// ------------------------------------------------------------ MLP

MlpData make_mlp_data(const ExperimentConfig& cfg) {
    const auto& spec = cfg.mlp;
    const std::size_t d_in = spec.widths.front();
    const std::size_t d_out = spec.widths.back();
    Rng rng = make_rng(cfg.seed, 1);

    const std::vector<double> eigs = input_eigenvalues(cfg);
    std::vector<double> root(eigs.size());
    for (std::size_t i = 0; i < eigs.size(); ++i) root[i] = std::sqrt(eigs[i]);
    const DenseMatrix p = random_orthogonal(rng, d_in);
    MlpData data;
    data.x = matmul(matmul(p, DenseMatrix::diagonal(root)), gaussian_matrix(rng, d_in, spec.samples));

    // Teacher: one tanh layer on the whitened input.
    std::vector<double> inv_root(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) inv_root[i] = 1.0 / root[i];
    const DenseMatrix whiten = matmul_nt(matmul(p, DenseMatrix::diagonal(inv_root)), p);
    const std::size_t hidden = std::max<std::size_t>(d_in, 8);
    const DenseMatrix t1 = gaussian_matrix(rng, hidden, d_in, 1.5 / std::sqrt(double(d_in)));
    const DenseMatrix t2 = gaussian_matrix(rng, d_out, hidden, 2.0 / std::sqrt(double(hidden)));
    DenseMatrix h = matmul(t1, matmul(whiten, data.x));
    for (double& v : h.values()) v = std::tanh(v);
    data.y = matmul(t2, h);
    if (spec.loss == Loss::CrossEntropy) {
        data.labels.resize(spec.samples);
        for (std::size_t j = 0; j < spec.samples; ++j) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < d_out; ++k)
                if (data.y(k, j) > data.y(best, j)) best = k;
            data.labels[j] = best;
        }
    }
    return data;
}

Mlp::Mlp(const MlpSpec& spec, std::uint64_t seed) : spec_(spec) {
    Rng rng = make_rng(seed, 3);
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
        w_.push_back(gaussian_matrix(rng, out, in, 1.0 / std::sqrt(double(in))));
    }
}

Mlp::Pass Mlp::run(const DenseMatrix& x, const DenseMatrix& y, const std::vector<std::size_t>& labels,
                   bool backward) const {
    const std::size_t layers = w_.size();
    const double inv_b = 1.0 / static_cast<double>(x.cols());
    auto residual = [&](std::size_t l) { return spec_.residual && w_[l].rows() == w_[l].cols(); };

    Pass pass;
    std::vector<DenseMatrix> pre;
    DenseMatrix a = x;
    DenseMatrix out;
    for (std::size_t l = 0; l < layers; ++l) {
        pass.inputs.push_back(a);
        DenseMatrix z = matmul(w_[l], a);
        if (l + 1 == layers) {
            out = std::move(z);
            break;
        }
        DenseMatrix h = z;
        for (double& v : h.values()) v = act(spec_.activation, v);
        pre.push_back(std::move(z));
        a = residual(l) ? a + h : std::move(h);
    }

    DenseMatrix d_out(out.rows(), out.cols());
    if (spec_.loss == Loss::Mse) {
        const DenseMatrix diff = out - y;
        pass.loss = 0.5 * inv_b * inner(diff, diff);
        d_out = inv_b * diff;
    } else {
        double total = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) {
            double mx = out(0, j);
            for (std::size_t k = 1; k < out.rows(); ++k) mx = std::max(mx, out(k, j));
            double sum = 0.0;
            for (std::size_t k = 0; k < out.rows(); ++k) sum += std::exp(out(k, j) - mx);
            const double log_z = mx + std::log(sum);
            total += log_z - out(labels[j], j);
            for (std::size_t k = 0; k < out.rows(); ++k) {
                const double prob = std::exp(out(k, j) - log_z);
                d_out(k, j) = inv_b * (prob - (k == labels[j] ? 1.0 : 0.0));
            }
        }
        pass.loss = inv_b * total;
    }
    if (!backward) return pass;

    pass.grads.resize(layers);
    DenseMatrix d_a = d_out;
    for (std::size_t l = layers; l-- > 0;) {
        DenseMatrix d_pre = d_a;
        if (l + 1 < layers) {
            auto dv = d_pre.values();
            const auto pv = pre[l].values();
            for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= act_grad(spec_.activation, pv[i]);
        }
        pass.grads[l] = matmul_nt(d_pre, pass.inputs[l]);
        if (l == 0) break;
        DenseMatrix d_prev = matmul_tn(w_[l], d_pre);
        if (l + 1 < layers && residual(l)) d_prev += d_a;
        d_a = std::move(d_prev);
    }
    return pass;
}

TrainRun train_mlp(const ExperimentConfig& cfg, const OptimizerBlock& opt) {
    const MlpSpec& spec = cfg.mlp;
    const MlpData data = make_mlp_data(cfg);
    Mlp net(spec, cfg.seed);
    std::vector<ParamStepper> steppers;
    for (const auto& w : net.weights()) steppers.emplace_back(opt, w.rows(), w.cols());

    const std::size_t total = cfg.schedule.total_steps;
    const bool ce = spec.loss == Loss::CrossEntropy;
    Rng order_rng = make_rng(cfg.seed, 2);
    std::vector<std::size_t> perm(spec.samples);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t cursor = spec.samples;
    const std::vector<std::size_t> no_labels;

    auto full_loss = [&] { return net.run(data.x, data.y, data.labels, false).loss; };

    TrainRun run;
    run.label = opt.label;
    const auto t0 = Clock::now();
    double initial = 0.0;
    for (std::size_t t = 0; t < total; ++t) {
        if (cursor + spec.batch > spec.samples) {
            std::shuffle(perm.begin(), perm.end(), order_rng);
            cursor = 0;
        }
        const std::span<const std::size_t> idx(perm.data() + cursor, spec.batch);
        cursor += spec.batch;
        const DenseMatrix xb = gather_columns(data.x, idx);
        const DenseMatrix yb = ce ? DenseMatrix{} : gather_columns(data.y, idx);
        std::vector<std::size_t> lb;
        if (ce)
            for (std::size_t i : idx) lb.push_back(data.labels[i]);

        const Mlp::Pass pass = net.run(xb, yb, ce ? lb : no_labels, true);
        if (t == 0) initial = pass.loss;
        check_divergence(opt.label, t, pass.loss, initial);
        const double lr = lr_schedule(t, total, cfg.schedule.warmup, cfg.schedule.min_ratio, opt.lr);
        std::optional<double> train_loss;
        if (t % kEvalEvery == 0) train_loss = full_loss();
        run.curve.push_back({t, lr, pass.loss, std::nullopt, train_loss, seconds_since(t0)});

        auto& ws = net.weights();
        for (std::size_t l = 0; l < ws.size(); ++l) ws[l] = steppers[l].step(ws[l], pass.grads[l], pass.inputs[l], t, lr);
    }
    run.final_loss = full_loss();
    check_divergence(opt.label, total, run.final_loss, initial);
    run.curve.push_back({total, lr_schedule(total, total, cfg.schedule.warmup, cfg.schedule.min_ratio, opt.lr),
                         run.final_loss, std::nullopt, run.final_loss, seconds_since(t0)});
    run.reached = run.final_loss <= spec.loss_threshold;
    return run;
}

std::vector<TrainRun> run_training(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != Experiment::Train) throw ConfigError("run_training needs experiment type train");
    std::vector<TrainRun> runs;
    for (const auto& opt : cfg.optimizers)
        runs.push_back(cfg.mode == TrainMode::Quadratic ? train_quadratic(cfg, opt) : train_mlp(cfg, opt));
    return runs;
}

}  // namespace nmuon::bench
