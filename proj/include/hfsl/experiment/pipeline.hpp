#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hfsl/collab/protocols.hpp"
#include "hfsl/data/csv.hpp"
#include "hfsl/data/partition.hpp"
#include "hfsl/data/preprocess.hpp"
#include "hfsl/data/split.hpp"
#include "hfsl/data/synthetic.hpp"
#include "hfsl/eval/client_metrics.hpp"
#include "hfsl/eval/trim.hpp"
#include "hfsl/eval/uplift_curve.hpp"
#include "hfsl/experiment/config.hpp"
#include "hfsl/nn/params.hpp"
#include "hfsl/privacy/audit.hpp"
#include "hfsl/uplift/propensity.hpp"

namespace hfsl::experiment {

struct LoadedData {
    data::DataTable table;
    std::optional<std::vector<double>> true_tau;  // synthetic only
};

inline data::SyntheticSpec synthetic_spec(const SyntheticOptions& s) {
    Rng rng(derive_seed(s.weights_seed, Stream::synthetic, {0}));
    auto spec = data::SyntheticSpec::with_random_weights(s.n_per_client, s.clients, s.features, s.client_shift_scale,
                                                         s.effect_scale, s.propensity_strength, rng);
    spec.missing_rate = s.missing_rate;
    return spec;
}

// The dataset is fixed across experiment seeds; seeds only drive splits,
// initialization, batching and noise.
inline LoadedData load_dataset(const DatasetConfig& cfg) {
    LoadedData out;
    if (cfg.source == DataSource::csv) {
        out.table = data::load_csv(cfg.csv_path, cfg.csv_schema);
        return out;
    }
    Rng rng(derive_seed(cfg.synthetic.weights_seed, Stream::synthetic, {1}));
    auto syn = data::generate_synthetic(synthetic_spec(cfg.synthetic), rng);
    out.table = std::move(syn.table);
    out.true_tau = std::move(syn.true_tau);
    return out;
}

// FNV-1a over the three index lists, used to show every method saw the same split.
inline std::uint64_t split_hash(const data::SplitIndices& s) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    for (const auto* part : {&s.train, &s.valid, &s.test}) {
        mix(part->size());
        for (auto i : *part) mix(i);
    }
    return h;
}

// Everything that is shared by all methods for one seed.
struct PreparedData {
    std::uint64_t seed = 0;
    data::SplitIndices split;
    std::uint64_t split_hash = 0;
    data::PreprocessStats stats;
    std::vector<data::ClientDataset> clients;
    data::Samples pooled_test;  // client order
    uplift::PropensityModel propensity;
    std::vector<std::vector<double>> client_test_propensity;
    std::vector<double> test_propensity;  // aligned with pooled_test
    eval::TrimResult trim;
    std::vector<double> grid;
    eval::MeanStd random_auuc;
    double end_uplift = 0.0;  // u(1) on the kept rows, the same for every ranking
    std::optional<std::vector<double>> true_tau_test;  // aligned with pooled_test
};

inline eval::TrimResult apply_trim(std::span<const double> e, const EvalConfig& cfg) {
    return cfg.trim == TrimMode::quantile ? eval::trim_quantile(e, cfg.trim_fraction)
                                          : eval::trim_positivity(e, cfg.alpha);
}

inline PreparedData prepare(const LoadedData& loaded, const ExperimentConfig& cfg, std::uint64_t seed) {
    PreparedData p;
    p.seed = seed;
    const auto& table = loaded.table;
    Rng split_rng(derive_seed(seed, Stream::split, {}));
    p.split = data::stratified_split(table, cfg.split, split_rng);
    p.split_hash = split_hash(p.split);
    p.stats = data::fit_preprocess(table, p.split.train);
    const auto x = data::apply_preprocess(p.stats, table, data::all_rows(table));
    p.clients = data::partition_clients(table, x, p.split);

    const auto train = data::pool(p.clients, &data::ClientDataset::train);
    p.propensity = uplift::fit_propensity(train.x, train.t);
    p.pooled_test = data::pool(p.clients, &data::ClientDataset::test);
    for (const auto& c : p.clients) {
        p.client_test_propensity.push_back(p.propensity.predict(c.test.x));
        const auto& e = p.client_test_propensity.back();
        p.test_propensity.insert(p.test_propensity.end(), e.begin(), e.end());
    }
    p.trim = apply_trim(p.test_propensity, cfg.evaluation);
    p.grid = eval::default_grid(cfg.evaluation.grid_points);

    std::vector<int> kt, ky;
    for (auto i : p.trim.keep) {
        kt.push_back(p.pooled_test.t[i]);
        ky.push_back(p.pooled_test.y[i]);
    }
    Rng baseline(derive_seed(seed, Stream::baseline, {}));
    p.random_auuc = eval::random_ranking_auuc(kt, ky, cfg.evaluation.random_reps, baseline, p.grid);
    p.end_uplift = eval::uplift_curve(std::vector<double>(kt.size(), 0.0), kt, ky, p.grid).end_uplift;

    if (loaded.true_tau) {
        std::vector<double> tau;
        for (auto r : p.pooled_test.rows) tau.push_back((*loaded.true_tau)[r]);
        p.true_tau_test = std::move(tau);
    }
    return p;
}

struct AuditRecord {
    std::string client_id;
    int round = 0;  // training rounds completed when audited
    bool ok = false;
    std::string error;
    privacy::AuditResult result;
};

struct CellMetrics {
    double auroc = 0.0;
    double auuc = 0.0;
    double end_uplift = 0.0;
    double trim_pct = 0.0;
    double worst_auuc = 0.0;
    double comm_mb = 0.0;
    int rounds = 0;
    std::optional<double> mia_auc;  // split-based methods only
    double valid_loss = 0.0;        // model-selection hook
};

struct CellResult {
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    CellMetrics metrics;
    eval::UpliftCurve curve;
    eval::ClientMetrics clients;
    std::vector<AuditRecord> audits;
    collab::TrainResult training;
    std::vector<double> tau_test;  // pooled test order
};

inline collab::RoundConfig seeded(collab::RoundConfig rc, std::uint64_t seed) {
    rc.seed = seed;
    return rc;
}

inline std::vector<AuditRecord> audit_clients(const collab::TrainResult& trained,
                                              const std::optional<collab::DefenseConfig>& defense,
                                              const PreparedData& prepared, const AuditSettings& settings) {
    std::vector<AuditRecord> out;
    for (std::size_t k = 0; k < prepared.clients.size(); ++k) {
        const auto& client = prepared.clients[k];
        if (!settings.clients.empty() &&
            std::find(settings.clients.begin(), settings.clients.end(), client.client_id) == settings.clients.end()) {
            continue;
        }
        AuditRecord rec;
        rec.client_id = client.client_id;
        rec.round = static_cast<int>(trained.history.size());
        privacy::AuditConfig ac;
        ac.m = settings.m;
        ac.attacker_train_fraction = settings.attacker_train_fraction;
        // Same audit stream for every method, so methods are audited on the same samples.
        ac.seed = derive_seed(prepared.seed, Stream::audit_sample, {k});
        try {
            rec.result = privacy::mia_audit(trained.model_for_client(k), defense, client, ac);
            rec.ok = true;
        } catch (const Error& e) {
            rec.error = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::optional<double> mean_attack_auc(const std::vector<AuditRecord>& audits) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& a : audits) {
        if (!a.ok) continue;
        s += a.result.attack_auc;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
}

// Scores a trained result on the shared test rows.
inline void evaluate(CellResult& cell, const PreparedData& p) {
    const auto& trained = cell.training;
    std::vector<double> prob;
    std::vector<eval::ClientScores> scores;
    for (std::size_t k = 0; k < p.clients.size(); ++k) {
        const auto& c = p.clients[k];
        eval::ClientScores s;
        s.client_id = c.client_id;
        s.t = c.test.t;
        s.y = c.test.y;
        s.propensity = p.client_test_propensity[k];
        if (!c.test.empty()) {
            const auto mu = uplift::predict_mu(trained.model_for_client(k), c.test.x);
            s.factual_prob = uplift::factual_prob(mu.treated, mu.control, c.test.t);
            s.tau = uplift::uplift_score(mu.treated, mu.control);
        }
        prob.insert(prob.end(), s.factual_prob.begin(), s.factual_prob.end());
        cell.tau_test.insert(cell.tau_test.end(), s.tau.begin(), s.tau.end());
        scores.push_back(std::move(s));
    }
    cell.metrics.auroc = eval::auroc(prob, p.pooled_test.y);

    std::vector<double> tau;
    std::vector<int> t, y;
    for (auto i : p.trim.keep) {
        tau.push_back(cell.tau_test[i]);
        t.push_back(p.pooled_test.t[i]);
        y.push_back(p.pooled_test.y[i]);
    }
    cell.curve = eval::uplift_curve(tau, t, y, p.grid);
    cell.metrics.auuc = cell.curve.auuc;
    cell.metrics.end_uplift = cell.curve.end_uplift;
    cell.metrics.trim_pct = 100.0 * p.trim.trim_rate;
    cell.clients = eval::per_client_metrics(scores, p.trim.bounds, p.grid);
    cell.metrics.worst_auuc = cell.clients.auuc.worst;
    cell.metrics.comm_mb = trained.ledger.total_mb();
    cell.metrics.rounds = static_cast<int>(trained.history.size());

    double loss = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < p.clients.size(); ++k) {
        const auto& v = p.clients[k].valid;
        if (v.empty()) continue;
        const auto mu = uplift::predict_mu(trained.model_for_client(k), v.x);
        loss += nn::bce_loss(v.y, uplift::factual_prob(mu.treated, mu.control, v.t)) * static_cast<double>(v.size());
        n += v.size();
    }
    cell.metrics.valid_loss = n ? loss / static_cast<double>(n) : 0.0;
}

// Train, evaluate and (for split-based methods) audit one (method, seed) cell.
// Errors are captured in the result rather than thrown.
inline CellResult run_cell(const MethodConfig& method, const PreparedData& p, const ExperimentConfig& cfg) {
    CellResult cell;
    cell.method = method.name;
    cell.seed = p.seed;
    try {
        const auto rc = seeded(method.round, p.seed);
        cell.training = collab::train(p.clients, rc);
        evaluate(cell, p);
        if (collab::is_split_based(rc.mode) && cfg.audit.enabled) {
            cell.audits = audit_clients(cell.training, rc.defense, p, cfg.audit);
            cell.metrics.mia_auc = mean_attack_auc(cell.audits);
            if (cfg.audit.per_round) {
                // Training is a pure function of (seed, round), so a shorter run
                // reproduces the state after that many rounds of the full one.
                std::vector<AuditRecord> earlier;
                for (int r = 1; r < rc.rounds; ++r) {
                    auto shorter = rc;
                    shorter.rounds = r;
                    auto more = audit_clients(collab::train(p.clients, shorter), rc.defense, p, cfg.audit);
                    earlier.insert(earlier.end(), more.begin(), more.end());
                }
                cell.audits.insert(cell.audits.begin(), earlier.begin(), earlier.end());
            }
        }
        cell.ok = true;
    } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.what();
    }
    return cell;
}

}  // namespace hfsl::experiment
