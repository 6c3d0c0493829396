#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hfsl/experiment/report.hpp"

namespace hfsl::experiment {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPartial = 2, kExitFailed = 3 };

inline int exit_code_for(std::size_t ok, std::size_t failed) {
    if (failed == 0) return kExitOk;
    return ok == 0 ? kExitFailed : kExitPartial;
}

// Collects written files so the manifest can list each with its hash.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }

    void text(const std::string& rel, const std::string& content) {
        auto out = open_out(root_ / rel);
        out << content;
        if (!out) throw IoError("write failed for '" + (root_ / rel).string() + "'");
        files_.push_back(rel);
    }

    void curve(const std::string& rel, const eval::UpliftCurve& c) {
        emit_uplift_points(c, root_ / rel);
        files_.push_back(rel);
    }

    void sweep(const std::string& rel, const privacy::SweepResult& s) {
        emit_privacy_sweep(s, root_ / rel);
        files_.push_back(rel);
    }

    void model(const std::string& rel, const collab::TrainResult& r) {
        save_model(r, root_ / rel);
        files_.push_back(rel);
    }

    // Writes `rel` listing every file so far, plus `extra` fields.
    void manifest(const std::string& rel, nlohmann::json extra) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : files_) files.push_back({{"path", f}, {"fnv1a64", file_hash(root_ / f)}});
        extra["files"] = files;
        auto out = open_out(root_ / rel);
        out << extra.dump(1) << '\n';
        if (!out) throw IoError("write failed for '" + (root_ / rel).string() + "'");
    }

private:
    std::filesystem::path root_;
    std::vector<std::string> files_;
};

inline std::string cell_stem(const std::string& method, std::uint64_t seed) {
    return method + "_seed" + std::to_string(seed);
}

inline std::string hex64(std::uint64_t v) {
    char h[17];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(v));
    return h;
}

struct SeedData {
    std::uint64_t seed = 0;
    std::optional<PreparedData> prepared;
    std::string error;
};

// One split and preprocessing per seed, shared by every method.
inline std::vector<SeedData> prepare_all(const LoadedData& loaded, const ExperimentConfig& cfg, std::ostream* log) {
    std::vector<SeedData> out;
    for (auto seed : cfg.seeds) {
        SeedData s;
        s.seed = seed;
        try {
            s.prepared = prepare(loaded, cfg, seed);
        } catch (const Error& e) {
            s.error = e.what();
            if (log) *log << "seed " << seed << ": preparation failed: " << e.what() << '\n';
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<PreparedData> prepared_only(const std::vector<SeedData>& seeds) {
    std::vector<PreparedData> out;
    for (const auto& s : seeds) {
        if (s.prepared) out.push_back(*s.prepared);
    }
    return out;
}

struct ExperimentRun {
    std::vector<PreparedData> prepared;
    std::vector<CellResult> cells;
    ExperimentReport report;
    int exit_code = kExitOk;
};

inline nlohmann::json manifest_base(const ExperimentConfig& cfg, const std::vector<SeedData>& seeds) {
    nlohmann::json m;
    m["config"] = cfg.source;
    m["caveat"] = privacy::kAuditCaveat;
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : seeds) {
        nlohmann::json e{{"seed", s.seed}};
        if (s.prepared) {
            e["split_hash"] = hex64(s.prepared->split_hash);
            e["train"] = s.prepared->split.train.size();
            e["valid"] = s.prepared->split.valid.size();
            e["test"] = s.prepared->split.test.size();
        } else {
            e["error"] = s.error;
        }
        splits.push_back(e);
    }
    m["splits"] = splits;
    return m;
}

// Trains, evaluates and audits every (method, seed) cell, then writes the
// report tables and per-cell artifacts under cfg.output_dir.
inline ExperimentRun run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    check_inputs(cfg);
    const auto loaded = load_dataset(cfg.dataset);
    const auto seeds = prepare_all(loaded, cfg, log);

    ExperimentRun run;
    run.prepared = prepared_only(seeds);
    for (const auto& s : seeds) {
        for (const auto& m : cfg.methods) {
            if (!s.prepared) {
                CellResult failed;
                failed.method = m.name;
                failed.seed = s.seed;
                failed.error = "preparation failed: " + s.error;
                run.cells.push_back(std::move(failed));
                continue;
            }
            if (log) *log << "seed " << s.seed << ": " << method_label(m.name) << "..." << std::flush;
            run.cells.push_back(run_cell(m, *s.prepared, cfg));
            if (log) *log << (run.cells.back().ok ? " ok" : " failed: " + run.cells.back().error) << '\n';
        }
    }
    run.report = build_report(cfg, run.prepared, run.cells);

    ArtifactWriter w(cfg.output_dir);
    w.text("results.csv", render_results(run.report));
    w.text("clients.csv", render_clients(run.report));
    w.text("cells.csv", render_cells(run.cells, run.prepared));
    w.text("client_cells.csv", render_client_cells(run.cells));
    w.text("audit.csv", render_audits(cfg, run.cells));
    w.text("history.csv", render_history(run.cells));
    w.text("summary.txt", render_summary(run.report));
    nlohmann::json cells = nlohmann::json::array();
    std::size_t ok = 0, failed = 0;
    for (const auto& c : run.cells) {
        const auto stem = cell_stem(c.method, c.seed);
        nlohmann::json e{{"method", c.method}, {"seed", c.seed}, {"status", c.ok ? "ok" : "failed"}};
        for (const auto& p : run.prepared) {
            if (p.seed == c.seed) e["split_hash"] = hex64(p.split_hash);
        }
        if (c.ok) {
            ++ok;
            w.curve("curves/" + stem + ".csv", c.curve);
            w.text("ledger/" + stem + ".csv", render_ledger(c.training.ledger));
            w.model("models/" + stem + ".json", c.training);
        } else {
            ++failed;
            e["error"] = c.error;
        }
        cells.push_back(e);
    }
    auto manifest = manifest_base(cfg, seeds);
    manifest["cells"] = cells;
    w.manifest("manifest.json", manifest);
    run.exit_code = exit_code_for(ok, failed);
    return run;
}

struct SweepRun {
    privacy::SweepResult result;
    int exit_code = kExitOk;
};

inline SweepRun run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    check_inputs(cfg);
    const auto loaded = load_dataset(cfg.dataset);
    const auto seeds = prepare_all(loaded, cfg, log);
    const auto prepared = prepared_only(seeds);
    SweepRun run;
    if (prepared.empty()) {
        run.exit_code = kExitFailed;
        return run;
    }
    if (log) *log << "sweep over " << cfg.sweep.sigmas.size() << " sigma x " << cfg.sweep.clips.size() << " clip values\n";
    run.result = privacy::privacy_utility_sweep(cfg, prepared, cfg.sweep.sigmas, cfg.sweep.clips);
    ArtifactWriter w(cfg.output_dir);
    w.sweep("sweep.csv", run.result);
    w.manifest("sweep_manifest.json", manifest_base(cfg, seeds));
    run.exit_code = prepared.size() == seeds.size() ? kExitOk : kExitPartial;
    return run;
}

struct ReauditRun {
    std::vector<CellResult> cells;  // audits only
    int exit_code = kExitOk;
};

// Audits the models saved by a previous `run` of the same config.
inline ReauditRun run_reaudit(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    check_inputs(cfg);
    const auto loaded = load_dataset(cfg.dataset);
    const auto seeds = prepare_all(loaded, cfg, log);
    ReauditRun run;
    std::size_t ok = 0, failed = 0;
    const std::filesystem::path root(cfg.output_dir);
    for (const auto& s : seeds) {
        for (const auto& m : cfg.methods) {
            if (!collab::is_split_based(m.round.mode)) continue;
            CellResult cell;
            cell.method = m.name;
            cell.seed = s.seed;
            try {
                if (!s.prepared) throw Error("preparation failed: " + s.error);
                cell.training = load_model(root / "models" / (cell_stem(m.name, s.seed) + ".json"));
                if (cell.training.client_ids.size() != s.prepared->clients.size()) {
                    throw Error("saved model has a different client count");
                }
                cell.audits = audit_clients(cell.training, m.round.defense, *s.prepared, cfg.audit);
                cell.metrics.mia_auc = mean_attack_auc(cell.audits);
                cell.ok = true;
                ++ok;
            } catch (const Error& e) {
                cell.error = e.what();
                ++failed;
            }
            if (log) *log << "seed " << s.seed << ": " << method_label(m.name) << (cell.ok ? " ok" : " failed: " + cell.error) << '\n';
            run.cells.push_back(std::move(cell));
        }
    }
    ArtifactWriter w(cfg.output_dir);
    w.text("reaudit.csv", render_audits(cfg, run.cells));
    w.manifest("reaudit_manifest.json", manifest_base(cfg, seeds));
    run.exit_code = exit_code_for(ok, failed);
    return run;
}

}  // namespace hfsl::experiment
