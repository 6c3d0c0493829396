#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hfsl/experiment/pipeline.hpp"

namespace hfsl::privacy {

struct SweepPoint {
    double sigma = 0.0;
    double clip = collab::kNoClip;
    std::uint64_t seed = 0;
    double auuc = 0.0;
    double mia_auc = std::numeric_limits<double>::quiet_NaN();  // NaN when no audit was feasible
};

struct SweepMean {
    double sigma = 0.0;
    double clip = collab::kNoClip;
    double auuc = 0.0;
    double mia_auc = std::numeric_limits<double>::quiet_NaN();
    std::size_t seeds = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // grid order: sigma, then clip, then seed
    std::vector<SweepMean> means() const {
        std::vector<SweepMean> out;
        for (const auto& p : points) {
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const SweepMean& m) { return m.sigma == p.sigma && m.clip == p.clip; });
            if (it == out.end()) {
                out.push_back({p.sigma, p.clip, 0.0, 0.0, 0});
                it = out.end() - 1;
            }
            it->auuc += p.auuc;
            it->mia_auc += p.mia_auc;
            ++it->seeds;
        }
        for (auto& m : out) {
            m.auuc /= static_cast<double>(m.seeds);
            m.mia_auc /= static_cast<double>(m.seeds);
        }
        return out;
    }
};

// The round config the sweep varies: the configured method of that name, or
// its defaults when the method is not part of the main run.
inline collab::RoundConfig sweep_base(const experiment::ExperimentConfig& cfg) {
    for (const auto& m : cfg.methods) {
        if (m.name == cfg.sweep.method) return m.round;
    }
    return experiment::detail::round_config_for(cfg.sweep.method, cfg.training, cfg.defense, "sweep.method");
}

// One full train + evaluate + audit cycle per (sigma, clip, seed). A defense
// with sigma 0 and no clipping is the identity, so that point equals the
// undefended run.
inline SweepResult privacy_utility_sweep(const experiment::ExperimentConfig& cfg,
                                         const std::vector<experiment::PreparedData>& prepared,
                                         std::span<const double> sigmas, std::span<const double> clips) {
    const auto base = sweep_base(cfg);
    if (!collab::is_split_based(base.mode)) throw ValidationError("privacy_utility_sweep: base method must be split-based");
    auto audited = cfg;
    audited.audit.enabled = true;
    SweepResult out;
    for (double sigma : sigmas) {
        for (double clip : clips) {
            experiment::MethodConfig method{cfg.sweep.method, base};
            method.round.defense = collab::DefenseConfig{clip, sigma};
            method.round.defense->validate();
            for (const auto& p : prepared) {
                auto cell = experiment::run_cell(method, p, audited);
                if (!cell.ok) throw Error("privacy_utility_sweep: sigma=" + std::to_string(sigma) + " clip=" +
                                          std::to_string(clip) + " seed=" + std::to_string(p.seed) + ": " + cell.error);
                SweepPoint pt{sigma, clip, p.seed, cell.metrics.auuc, std::numeric_limits<double>::quiet_NaN()};
                if (cell.metrics.mia_auc) pt.mia_auc = *cell.metrics.mia_auc;
                out.points.push_back(pt);
            }
        }
    }
    return out;
}

}  // namespace hfsl::privacy
