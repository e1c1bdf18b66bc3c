#include "nmuon/bench/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

#include "nmuon/bench/checks.hpp"
#include "nmuon/bench/io.hpp"
#include "nmuon/bench/trainer.hpp"
#include "nmuon/spike.hpp"

namespace nmuon::bench {

namespace fs = std::filesystem;

namespace {

std::ostream& out(const CommandOptions& o) { return o.log ? *o.log : std::cout; }

// Shared bookkeeping: resolved config, manifest, list of written files.
class Run {
public:
    explicit Run(const ExperimentConfig& cfg) : dir_(cfg.output) {
        fs::create_directories(dir_);
        const std::string ini = to_ini(cfg);
        std::ofstream(dir_ / "config.ini", std::ios::binary | std::ios::trunc) << ini;
        manifest_.experiment = to_string(cfg.experiment);
        manifest_.config_hash = hex64(fnv1a64(ini));
        manifest_.seed = cfg.seed;
        manifest_.files.push_back("config.ini");
    }

    CsvWriter csv(const std::string& name, std::vector<std::string> header) {
        manifest_.files.push_back(name);
        return CsvWriter(dir_ / name, std::move(header));
    }

    int finish(int code) {
        manifest_.status = code == kExitPass ? "pass" : "fail";
        manifest_.write(dir_);
        return code;
    }

private:
    fs::path dir_;
    Manifest manifest_;
};

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void require_type(const ExperimentConfig& cfg, Experiment want) {
    if (cfg.experiment != want)
        throw ConfigError("config describes experiment '" + to_string(cfg.experiment) + "', not '" +
                          to_string(want) + "'");
}

}  // namespace

std::string default_preset(Experiment e) {
    switch (e) {
        case Experiment::Verify: return "verify";
        case Experiment::Spike: return "spike-table";
        case Experiment::ScoreStudy: return "baseline-study";
        case Experiment::Plans: return "plans";
        case Experiment::Train: return "quadratic-desk";
    }
    return "verify";
}

int cmd_verify(const ExperimentConfig& cfg, const CommandOptions& opts) {
    require_type(cfg, Experiment::Verify);
    bool any = false;
    for (const auto& s : check_registry()) any = any || s.name.find(opts.filter) != std::string::npos;
    if (!any) throw ConfigError("--filter '" + opts.filter + "' matches no property");

    Run run(cfg);
    CsvWriter csv = run.csv("verify.csv", {"name", "criterion", "passed", "measured", "threshold", "seconds", "detail"});
    const CheckOptions co{cfg.seed, cfg.threads, opts.corrupt_plan};
    bool all = true;
    for (const auto& s : check_registry()) {
        if (s.name.find(opts.filter) == std::string::npos) continue;
        const CheckResult r = run_check(s, co);
        all = all && r.passed;
        out(opts) << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name << " measured="
                  << r.measured << " threshold=" << r.threshold << " (" << std::fixed << std::setprecision(1)
                  << r.seconds << " s) " << std::defaultfloat << std::setprecision(6) << r.detail << "\n";
        csv.row({r.name, std::to_string(s.criterion), r.passed ? "true" : "false", num(r.measured), num(r.threshold),
                 num(r.seconds), r.detail});
    }
    return run.finish(all ? kExitPass : kExitFailure);
}

int cmd_spike(const ExperimentConfig& cfg, const CommandOptions& opts) {
    require_type(cfg, Experiment::Spike);
    Run run(cfg);
    CsvWriter csv = run.csv("spike.csv", {"method", "kappa", "iters_bound", "iters_matrix", "max_residual"});
    const SpikeMethod methods[] = {SpikeMethod::GD, SpikeMethod::Muon, SpikeMethod::NewtonMuon};
    for (double kappa : cfg.kappas) {
        // Same frames and coefficients for every kappa.
        Rng rng = make_rng(cfg.seed, 0);
        const SpikeModel model = make_spike_model(rng, cfg.m, cfg.n, cfg.r, kappa);
        const double r0 = model.initial_state().max_abs();
        const double eps = r0 / cfg.eps_ratio;
        for (SpikeMethod method : methods) {
            const std::size_t bound = iterations_to_eps(method, r0, eps, kappa);
            MatrixConvergence mc;
            try {
                mc = matrix_iterations_to_eps(model, method, eps, cfg.max_steps);
            } catch (const DecompositionViolated& e) {
                out(opts) << "error: " << to_string(method) << " at kappa " << kappa << ": " << e.what()
                          << " (step " << e.step() << ")\n";
                return run.finish(kExitFailure);
            }
            const std::string matrix = mc.reached ? num(mc.iterations) : "NA";
            csv.row({to_string(method), num(kappa), num(bound), matrix, num(mc.max_scalar_gap)});
            out(opts) << std::left << std::setw(12) << to_string(method) << " kappa=" << std::setw(6) << kappa
                      << " bound=" << std::setw(6) << bound << " matrix=" << std::setw(6) << matrix
                      << " max_residual=" << mc.max_scalar_gap << "\n";
        }
    }
    return run.finish(kExitPass);
}

int cmd_score_study(const ExperimentConfig& cfg, const CommandOptions& opts) {
    require_type(cfg, Experiment::ScoreStudy);
    Run run(cfg);
    const ScoreStudyResult res = run_score_study(cfg.study_config(), cfg.threads);

    std::vector<std::string> header{"trial"};
    for (Direction d : kAllDirections) header.push_back(to_string(d));
    CsvWriter trials = run.csv("trials.csv", header);
    for (std::size_t i = 0; i < res.trials.size(); ++i) {
        std::vector<std::string> row{num(res.trial_index[i])};
        for (double s : res.trials[i]) row.push_back(num(s));
        trials.row(row);
    }
    CsvWriter summary = run.csv("summary.csv", {"direction", "mean", "q025", "q975", "trials", "excluded"});
    out(opts) << "trials used " << res.trials.size() << ", excluded " << res.excluded << "\n";
    for (std::size_t k = 0; k < kDirectionCount; ++k) {
        const ScoreSummary& s = res.summary[k];
        summary.row({to_string(kAllDirections[k]), num(s.mean), num(s.q025), num(s.q975), num(res.trials.size()),
                     num(res.excluded)});
        out(opts) << std::left << std::setw(10) << to_string(kAllDirections[k]) << " mean=" << std::setw(12) << s.mean
                  << " [" << s.q025 << ", " << s.q975 << "]\n";
    }
    return run.finish(kExitPass);
}

int cmd_plans(const ExperimentConfig& cfg, const CommandOptions& opts) {
    require_type(cfg, Experiment::Plans);
    Run run(cfg);
    CsvWriter csv = run.csv("plans.csv", {"plan", "epsilon", "total_sypp", "s_out", "certified", "padded",
                                          "max_residual", "trials", "status"});
    std::vector<PolyPlan> plans = builtin_plans();
    if (opts.corrupt_plan) plans[0] = corrupt_plan(plans[0]);
    Rng rng = make_rng(cfg.seed, 0);
    bool all = true;
    for (const PolyPlan& plan : plans) {
        const PlanReport rep = check_plan(plan, rng);
        all = all && rep.passed();
        csv.row({rep.label, num(plan.epsilon), num(plan.total_sypp), num(plan.s_out), num(rep.certified),
                 num(rep.padded), num(rep.max_residual), num(rep.trials), rep.passed() ? "pass" : rep.violation});
        out(opts) << (rep.passed() ? "PASS " : "FAIL ") << std::left << std::setw(18) << rep.label
                  << " s_out=" << std::setw(9) << plan.s_out << " certified=" << std::setw(11) << rep.certified
                  << " measured=" << rep.max_residual << (rep.passed() ? "" : "  " + rep.violation) << "\n";
    }
    return run.finish(all ? kExitPass : kExitFailure);
}

int cmd_train(const ExperimentConfig& cfg, const CommandOptions& opts) {
    require_type(cfg, Experiment::Train);
    Run run(cfg);
    std::vector<TrainRun> runs;
    try {
        runs = run_training(cfg);
    } catch (const Diverged& e) {
        out(opts) << "error: " << e.what() << "\n";
        return run.finish(kExitFailure);
    }
    const bool quad = cfg.mode == TrainMode::Quadratic;
    CsvWriter curves = run.csv("curves.csv", quad ? std::vector<std::string>{"optimizer", "step", "lr", "loss", "dist"}
                                                  : std::vector<std::string>{"optimizer", "step", "lr", "batch_loss",
                                                                             "train_loss"});
    // Wall time lives in its own file so curves.csv stays bit-reproducible.
    CsvWriter timing = run.csv("timing.csv", {"optimizer", "step", "wall_time_s"});
    CsvWriter summary = run.csv("summary.csv", {"optimizer", "steps_to_target", "final_loss", "reached"});
    bool all = true;
    for (const TrainRun& r : runs) {
        for (const CurvePoint& p : r.curve) {
            const std::string last = quad ? num(*p.dist) : (p.train_loss ? num(*p.train_loss) : "");
            curves.row({r.label, num(p.step), num(p.lr), num(p.loss), last});
            timing.row({r.label, num(p.step), num(p.wall_time)});
        }
        const std::string steps = r.steps_to_target ? num(*r.steps_to_target) : "NA";
        summary.row({r.label, steps, num(r.final_loss), r.reached ? "true" : "false"});
        all = all && r.reached;
        out(opts) << std::left << std::setw(14) << r.label << " reached=" << (r.reached ? "yes" : "no ")
                  << " steps_to_target=" << std::setw(6) << steps << " final_loss=" << r.final_loss
                  << " wall=" << r.curve.back().wall_time << " s\n";
    }
    return run.finish(all ? kExitPass : kExitFailure);
}

int run_experiment(const ExperimentConfig& cfg, const CommandOptions& opts) {
    switch (cfg.experiment) {
        case Experiment::Verify: return cmd_verify(cfg, opts);
        case Experiment::Spike: return cmd_spike(cfg, opts);
        case Experiment::ScoreStudy: return cmd_score_study(cfg, opts);
        case Experiment::Plans: return cmd_plans(cfg, opts);
        case Experiment::Train: return cmd_train(cfg, opts);
    }
    return kExitConfig;
}

}  // namespace nmuon::bench
