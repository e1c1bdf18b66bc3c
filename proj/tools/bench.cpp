// bench verify|spike|score-study|plans|train [--config PATH | --preset NAME]
//       [--filter NAME] [--seed U64] [--out DIR] [--threads N] [--corrupt-plan]
// bench presets [--dump NAME]

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "nmuon/bench/commands.hpp"
#include "nmuon/bench/config.hpp"

using namespace nmuon;
using namespace nmuon::bench;

int main(int argc, char** argv) {
    CLI::App app{"Newton-Muon experiment runner"};
    app.require_subcommand(1);

    std::string config_path, preset_name, filter, out_dir, dump;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool corrupt = false;

    struct Sub {
        const char* name;
        Experiment experiment;
        const char* help;
    };
    const Sub subs[] = {
        {"verify", Experiment::Verify, "run the property and acceptance suites"},
        {"spike", Experiment::Spike, "single-spike iterations-to-eps table"},
        {"score-study", Experiment::ScoreStudy, "six-direction score study"},
        {"plans", Experiment::Plans, "certify the polynomial-inverse plans"},
        {"train", Experiment::Train, "quadratic or MLP training curves"},
    };
    std::vector<CLI::App*> cmds;
    for (const Sub& s : subs) {
        CLI::App* c = app.add_subcommand(s.name, s.help);
        auto* cfg_opt = c->add_option("--config", config_path, "INI or JSON experiment config");
        c->add_option("--preset", preset_name, "named preset")->excludes(cfg_opt);
        c->add_option("--seed", seed, "override the master seed");
        c->add_option("--out", out_dir, "override the output directory");
        c->add_option("--threads", threads, "worker threads for trial-parallel studies");
        if (s.experiment == Experiment::Verify) c->add_option("--filter", filter, "run checks whose name contains this");
        if (s.experiment == Experiment::Verify || s.experiment == Experiment::Plans)
            c->add_flag("--corrupt-plan", corrupt, "replace the first plan with a corrupted copy");
        cmds.push_back(c);
    }
    CLI::App* presets = app.add_subcommand("presets", "list presets, or print one as INI");
    presets->add_option("--dump", dump, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }

    try {
        if (presets->parsed()) {
            if (dump.empty()) {
                for (const auto& n : preset_names()) std::cout << n << "\n";
            } else {
                std::cout << to_ini(preset(dump));
            }
            return kExitPass;
        }
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            if (!cmds[i]->parsed()) continue;
            ExperimentConfig cfg = !config_path.empty() ? load_config(config_path)
                                   : preset(preset_name.empty() ? default_preset(subs[i].experiment) : preset_name);
            if (cfg.experiment != subs[i].experiment)
                throw ConfigError("config describes experiment '" + to_string(cfg.experiment) + "', not '" +
                                  subs[i].name + "'");
            if (seed) cfg.seed = *seed;
            if (!out_dir.empty()) cfg.output = out_dir;
            if (threads) cfg.threads = *threads;
            cfg.validate();
            CommandOptions opts;
            opts.filter = filter;
            opts.corrupt_plan = corrupt;
            return run_experiment(cfg, opts);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitConfig;
}
