#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hfsl/collab/defense.hpp"
#include "hfsl/data/partition.hpp"
#include "hfsl/eval/metrics.hpp"
#include "hfsl/nn/logistic.hpp"
#include "hfsl/uplift/model.hpp"

namespace hfsl::privacy {

inline constexpr std::size_t kMinAuditSample = 10;
inline constexpr std::size_t kDefaultAuditSample = 500;

// Reports must say what the audit number does and does not mean.
inline constexpr const char* kAuditCaveat =
    "MIA AUC measures one logistic attacker on cut-layer representations; "
    "it is an empirical leakage signal, not a privacy guarantee.";

struct AuditConfig {
    std::size_t m = 0;  // per class; 0 = min(500, pool sizes)
    double attacker_train_fraction = 0.5;
    std::uint64_t seed = 0;
    // Label-permutation control: shuffles membership labels before fitting.
    bool shuffle_membership = false;
};

struct AuditResult {
    double attack_auc = 0.5;
    std::size_t m = 0;
    bool attacker_converged = false;
};

// What the honest-but-curious server receives for x: trunk output, through
// the client adapter and the transmission defense when those are in use.
struct AuditTarget {
    const nn::TrunkParams* trunk = nullptr;
    const collab::AdapterParams* adapter = nullptr;
    std::optional<collab::DefenseConfig> defense;
};

namespace detail {

inline nn::Matrix representations(const AuditTarget& target, const nn::Matrix& x, Rng& noise) {
    auto z = nn::forward_trunk(*target.trunk, x).z;
    if (target.adapter) z = collab::apply_adapter(z, *target.adapter);
    if (target.defense) z = collab::apply_defense(z, *target.defense, noise);
    return z;
}

inline std::vector<std::size_t> sample_without_replacement(std::size_t pool, std::size_t m, Rng& rng) {
    auto perm = rng.permutation(pool);
    perm.resize(m);
    return perm;
}

}  // namespace detail

// Membership inference on cut-layer representations: m members from the
// client's training rows, m non-members from its test rows, a logistic
// attacker fit on a membership-stratified part and scored by AUC on the rest.
// Read-only with respect to the model.
inline AuditResult mia_audit(const AuditTarget& target, const data::Samples& members, const data::Samples& nonmembers,
                             const AuditConfig& config) {
    if (target.trunk == nullptr) throw ContractError("mia_audit: no trunk");
    if (!(config.attacker_train_fraction > 0.0 && config.attacker_train_fraction < 1.0)) {
        throw ValidationError("mia_audit: attacker_train_fraction must be in (0, 1)");
    }
    const std::size_t pool = std::min(members.size(), nonmembers.size());
    const std::size_t m = config.m ? config.m : std::min(kDefaultAuditSample, pool);
    if (m < kMinAuditSample) {
        throw AuditInfeasible("mia_audit: sample size " + std::to_string(m) + " below minimum " +
                              std::to_string(kMinAuditSample));
    }
    if (members.size() < m || nonmembers.size() < m) {
        throw AuditInfeasible("mia_audit: pools (" + std::to_string(members.size()) + ", " +
                              std::to_string(nonmembers.size()) + ") smaller than m=" + std::to_string(m));
    }

    Rng sampler(derive_seed(config.seed, Stream::audit_sample));
    Rng noise(derive_seed(config.seed, Stream::audit_noise));
    const auto mi = detail::sample_without_replacement(members.size(), m, sampler);
    const auto ni = detail::sample_without_replacement(nonmembers.size(), m, sampler);
    const auto zm = detail::representations(target, members.x.select_rows(mi), noise);
    const auto zn = detail::representations(target, nonmembers.x.select_rows(ni), noise);

    // Stratified attacker split: the first n_fit of each (already shuffled) class.
    const auto n_fit = static_cast<std::size_t>(
        std::llround(config.attacker_train_fraction * static_cast<double>(m)));
    if (n_fit < 1 || n_fit >= m) throw AuditInfeasible("mia_audit: attacker split leaves an empty side");
    const std::size_t dim = zm.cols();
    nn::Matrix fit_x(2 * n_fit, dim), eval_x(2 * (m - n_fit), dim);
    std::vector<int> fit_s, eval_s;
    std::size_t fr = 0, er = 0;
    for (int cls = 1; cls >= 0; --cls) {
        const nn::Matrix& z = cls ? zm : zn;
        for (std::size_t i = 0; i < m; ++i) {
            const bool fit = i < n_fit;
            auto dst = fit ? fit_x.row(fr++) : eval_x.row(er++);
            std::copy(z.row(i).begin(), z.row(i).end(), dst.begin());
            (fit ? fit_s : eval_s).push_back(cls);
        }
    }
    if (config.shuffle_membership) {
        sampler.shuffle(fit_s);
        sampler.shuffle(eval_s);
    }

    // Standardize with attacker-training statistics.
    for (std::size_t j = 0; j < dim; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < fit_x.rows(); ++r) s += fit_x(r, j);
        const double mean = s / static_cast<double>(fit_x.rows());
        double ss = 0.0;
        for (std::size_t r = 0; r < fit_x.rows(); ++r) ss += (fit_x(r, j) - mean) * (fit_x(r, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(fit_x.rows()));
        const double inv = sd > 1e-12 ? 1.0 / sd : 0.0;
        for (std::size_t r = 0; r < fit_x.rows(); ++r) fit_x(r, j) = (fit_x(r, j) - mean) * inv;
        for (std::size_t r = 0; r < eval_x.rows(); ++r) eval_x(r, j) = (eval_x(r, j) - mean) * inv;
    }

    AuditResult result;
    result.m = m;
    try {
        const auto attacker = nn::train_logistic(fit_x, fit_s);
        result.attacker_converged = attacker.converged;
        result.attack_auc = eval::auroc(attacker.predict_proba(eval_x), eval_s);
    } catch (const DegenerateLabelsError& e) {
        throw AuditInfeasible(std::string("mia_audit: ") + e.what());
    } catch (const EvaluationInfeasible& e) {
        throw AuditInfeasible(std::string("mia_audit: ") + e.what());
    }
    return result;
}

inline AuditResult mia_audit(const uplift::TwoHeadModel& model, const std::optional<collab::DefenseConfig>& defense,
                             const data::ClientDataset& client, const AuditConfig& config) {
    AuditTarget target{&model.trunk, model.adapter ? &*model.adapter : nullptr, defense};
    return mia_audit(target, client.train, client.test, config);
}

}  // namespace hfsl::privacy
