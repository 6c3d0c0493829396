#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hfsl/eval/metrics.hpp"
#include "hfsl/eval/trim.hpp"
#include "hfsl/eval/uplift_curve.hpp"

namespace hfsl::eval {

// One client's test-split predictions.
struct ClientScores {
    std::string client_id;
    std::vector<double> factual_prob;
    std::vector<double> tau;
    std::vector<double> propensity;
    std::vector<int> t;
    std::vector<int> y;
};

struct ClientRow {
    std::string client_id;
    bool included = false;
    std::string reason;  // why an excluded client was left out
    double auroc = 0.0;
    double auuc = 0.0;
    std::size_t n_test = 0;
    std::size_t n_kept = 0;
};

struct Spread {
    double mean = 0.0;
    double std = 0.0;  // population, across clients
    double worst = 0.0;
};

struct ClientMetrics {
    std::vector<ClientRow> clients;
    Spread auroc;
    Spread auuc;
    std::size_t included() const {
        return static_cast<std::size_t>(std::count_if(clients.begin(), clients.end(),
                                                      [](const ClientRow& r) { return r.included; }));
    }
};

inline Spread spread(const std::vector<double>& v) {
    const auto ms = mean_std(v);
    return {ms.mean, ms.std, *std::min_element(v.begin(), v.end())};
}

// AUROC on each client's test rows and AUUC on the rows inside `bounds`.
// Clients without both outcome classes, or whose kept rows miss an arm,
// are flagged and excluded from the summary.
inline ClientMetrics per_client_metrics(const std::vector<ClientScores>& clients, TrimBounds bounds,
                                        std::span<const double> grid) {
    ClientMetrics m;
    std::vector<double> aurocs, auucs;
    for (const auto& c : clients) {
        ClientRow row;
        row.client_id = c.client_id;
        row.n_test = c.y.size();
        try {
            if (c.y.empty()) throw EvaluationInfeasible("empty test split");
            row.auroc = auroc(c.factual_prob, c.y);
            const auto trim = trim_bounds(c.propensity, bounds);
            row.n_kept = trim.keep.size();
            std::vector<double> tau;
            std::vector<int> t, y;
            for (auto i : trim.keep) {
                tau.push_back(c.tau[i]);
                t.push_back(c.t[i]);
                y.push_back(c.y[i]);
            }
            row.auuc = uplift_curve(tau, t, y, grid).auuc;
            row.included = true;
            aurocs.push_back(row.auroc);
            auucs.push_back(row.auuc);
        } catch (const EvaluationInfeasible& e) {
            row.reason = e.what();
        }
        m.clients.push_back(std::move(row));
    }
    if (aurocs.empty()) throw EvaluationInfeasible("per_client_metrics: no client could be evaluated");
    m.auroc = spread(aurocs);
    m.auuc = spread(auucs);
    return m;
}

}  // namespace hfsl::eval
