// Command-line driver: run, validate, sweep and audit experiments from a JSON config.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hfsl/hfsl.hpp"

namespace ex = hfsl::experiment;

namespace {

int with_config(const std::string& path, const std::string& output, bool quiet,
                int (*body)(const ex::ExperimentConfig&, std::ostream*)) {
    ex::ExperimentConfig cfg;
    try {
        cfg = ex::load_config(path);
        if (!output.empty()) cfg.output_dir = output;
        ex::check_inputs(cfg);
    } catch (const hfsl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ex::kExitConfig;
    }
    try {
        return body(cfg, quiet ? nullptr : &std::cerr);
    } catch (const hfsl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ex::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ex::kExitFailed;
    }
}

int do_run(const ex::ExperimentConfig& cfg, std::ostream* log) {
    const auto run = ex::run_experiment(cfg, log);
    std::cout << ex::render_summary(run.report);
    std::cout << "wrote " << cfg.output_dir << "/results.csv\n";
    return run.exit_code;
}

int do_sweep(const ex::ExperimentConfig& cfg, std::ostream* log) {
    const auto run = ex::run_sweep(cfg, log);
    std::cout << "sigma,clip,auuc,mia_auc\n";
    for (const auto& m : run.result.means()) {
        std::cout << ex::compact(m.sigma) << ',' << ex::compact(m.clip) << ',' << ex::fixed(m.auuc, 4) << ','
                  << ex::fixed(m.mia_auc, 4) << '\n';
    }
    std::cout << "wrote " << cfg.output_dir << "/sweep.csv\n";
    std::cout << "Note: " << hfsl::privacy::kAuditCaveat << '\n';
    return run.exit_code;
}

int do_audit(const ex::ExperimentConfig& cfg, std::ostream* log) {
    const auto run = ex::run_reaudit(cfg, log);
    for (const auto& c : run.cells) {
        std::cout << c.method << " seed " << c.seed << ": ";
        if (!c.ok) std::cout << "failed (" << c.error << ")\n";
        else if (c.metrics.mia_auc) std::cout << "MIA AUC " << ex::fixed(*c.metrics.mia_auc, 4) << '\n';
        else std::cout << "no feasible audit\n";
    }
    std::cout << "wrote " << cfg.output_dir << "/reaudit.csv\n";
    std::cout << "Note: " << hfsl::privacy::kAuditCaveat << '\n';
    return run.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid federated/split uplift experiments"};
    app.require_subcommand(1);
    std::string config, output;
    bool quiet = false;

    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "JSON experiment config")->required();
        return sub;
    };
    auto* run = add("run", "train, evaluate and audit every method and seed");
    auto* validate = add("validate", "check a config without running anything");
    auto* sweep = add("sweep", "privacy-utility grid over noise and clipping");
    auto* audit = add("audit", "re-audit models saved by a previous run");
    for (auto* sub : {run, sweep, audit}) {
        sub->add_option("-o,--output", output, "override output_dir");
        sub->add_flag("-q,--quiet", quiet, "no progress on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : ex::kExitConfig;
    }

    if (*validate) {
        try {
            const auto cfg = ex::load_config(config);
            ex::check_inputs(cfg);
            std::cout << "ok: " << cfg.methods.size() << " methods, " << cfg.seeds.size() << " seeds\n";
            return ex::kExitOk;
        } catch (const hfsl::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return ex::kExitConfig;
        }
    }
    if (*run) return with_config(config, output, quiet, do_run);
    if (*sweep) return with_config(config, output, quiet, do_sweep);
    return with_config(config, output, quiet, do_audit);
}
