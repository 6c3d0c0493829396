#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hfsl/eval/metrics.hpp"
#include "hfsl/experiment/pipeline.hpp"
#include "hfsl/experiment/serialize.hpp"

namespace hfsl::experiment {

inline constexpr const char* kRandomRankingMethod = "Random ranking";

// Across-seed summary of one metric (population std).
struct Stat {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

inline Stat stat_of(const std::vector<double>& v) {
    if (v.empty()) return {};
    const auto ms = eval::mean_std(v);
    return {ms.mean, ms.std, v.size()};
}

struct ReportRow {
    std::string dataset;
    std::string method;  // display label
    bool split_based = false;
    bool baseline = false;  // the random-ranking row
    Stat auroc, auuc, end_uplift, trim_pct, worst_auuc, comm_mb, rounds;
    std::optional<Stat> mia;
    std::size_t seeds_ok = 0;
    std::size_t seeds_failed = 0;
};

// Per-client spread, averaged across seeds.
struct ClientReportRow {
    std::string dataset;
    std::string method;
    Stat auuc_mean, auuc_std, auuc_worst;
    Stat auroc_mean, auroc_std, auroc_worst;
    std::size_t seeds_ok = 0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<ClientReportRow> clients;
    std::string caveat = privacy::kAuditCaveat;
};

inline ExperimentReport build_report(const ExperimentConfig& cfg, const std::vector<PreparedData>& prepared,
                                     const std::vector<CellResult>& cells) {
    ExperimentReport rep;
    for (const auto& m : cfg.methods) {
        ReportRow row;
        row.dataset = cfg.dataset.name;
        row.method = method_label(m.name);
        row.split_based = collab::is_split_based(m.round.mode);
        ClientReportRow crow;
        crow.dataset = row.dataset;
        crow.method = row.method;
        std::vector<double> auroc, auuc, end, trim, worst, comm, rounds, mia;
        std::vector<double> ca_mean, ca_std, ca_worst, cr_mean, cr_std, cr_worst;
        for (const auto& c : cells) {
            if (c.method != m.name) continue;
            if (!c.ok) {
                ++row.seeds_failed;
                continue;
            }
            ++row.seeds_ok;
            auroc.push_back(c.metrics.auroc);
            auuc.push_back(c.metrics.auuc);
            end.push_back(c.metrics.end_uplift);
            trim.push_back(c.metrics.trim_pct);
            worst.push_back(c.metrics.worst_auuc);
            comm.push_back(c.metrics.comm_mb);
            rounds.push_back(c.metrics.rounds);
            if (c.metrics.mia_auc) mia.push_back(*c.metrics.mia_auc);
            ca_mean.push_back(c.clients.auuc.mean);
            ca_std.push_back(c.clients.auuc.std);
            ca_worst.push_back(c.clients.auuc.worst);
            cr_mean.push_back(c.clients.auroc.mean);
            cr_std.push_back(c.clients.auroc.std);
            cr_worst.push_back(c.clients.auroc.worst);
        }
        row.auroc = stat_of(auroc);
        row.auuc = stat_of(auuc);
        row.end_uplift = stat_of(end);
        row.trim_pct = stat_of(trim);
        row.worst_auuc = stat_of(worst);
        row.comm_mb = stat_of(comm);
        row.rounds = stat_of(rounds);
        if (row.split_based && !mia.empty()) row.mia = stat_of(mia);
        crow.auuc_mean = stat_of(ca_mean);
        crow.auuc_std = stat_of(ca_std);
        crow.auuc_worst = stat_of(ca_worst);
        crow.auroc_mean = stat_of(cr_mean);
        crow.auroc_std = stat_of(cr_std);
        crow.auroc_worst = stat_of(cr_worst);
        crow.seeds_ok = row.seeds_ok;
        rep.rows.push_back(std::move(row));
        rep.clients.push_back(std::move(crow));
    }

    ReportRow base;
    base.dataset = cfg.dataset.name;
    base.method = kRandomRankingMethod;
    base.baseline = true;
    std::vector<double> auuc, end, trim;
    for (const auto& p : prepared) {
        auuc.push_back(p.random_auuc.mean);
        end.push_back(p.end_uplift);
        trim.push_back(100.0 * p.trim.trim_rate);
    }
    base.auuc = stat_of(auuc);
    base.end_uplift = stat_of(end);
    base.trim_pct = stat_of(trim);
    base.seeds_ok = prepared.size();
    base.seeds_failed = cfg.seeds.size() - prepared.size();
    rep.rows.push_back(std::move(base));
    return rep;
}

namespace detail {

inline std::string na_pair() { return "N/A,N/A"; }

inline std::string pair(const Stat& s, int decimals) {
    if (s.n == 0) return na_pair();
    return fixed(s.mean, decimals) + "," + fixed(s.std, decimals);
}

inline std::string csv_field(const std::string& s) { return data::detail::quote_if_needed(s); }

}  // namespace detail

inline constexpr int kMetricDecimals = 4;
inline constexpr int kCommDecimals = 2;

// Main results table, columns in the fixed reporting order.
inline std::string render_results(const ExperimentReport& rep) {
    using detail::pair;
    std::ostringstream out;
    out << "dataset,method,auroc,auroc_std,auuc,auuc_std,end_uplift,end_uplift_std,trim_pct,trim_pct_std,"
           "worst_client_auuc,worst_client_auuc_std,comm_mb,comm_mb_std,rounds,rounds_std,mia_auc,mia_auc_std,"
           "seeds_ok,seeds_failed\n";
    for (const auto& r : rep.rows) {
        out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.method) << ',';
        if (r.baseline) {
            out << detail::na_pair() << ',' << pair(r.auuc, kMetricDecimals) << ','
                << pair(r.end_uplift, kMetricDecimals) << ',' << pair(r.trim_pct, 2) << ',' << detail::na_pair()
                << ',' << detail::na_pair() << ',' << detail::na_pair() << ',' << detail::na_pair();
        } else {
            out << pair(r.auroc, kMetricDecimals) << ',' << pair(r.auuc, kMetricDecimals) << ','
                << pair(r.end_uplift, kMetricDecimals) << ',' << pair(r.trim_pct, 2) << ','
                << pair(r.worst_auuc, kMetricDecimals) << ',' << pair(r.comm_mb, kCommDecimals) << ','
                << pair(r.rounds, 0) << ',' << (r.mia ? pair(*r.mia, kMetricDecimals) : detail::na_pair());
        }
        out << ',' << r.seeds_ok << ',' << r.seeds_failed << '\n';
    }
    return out.str();
}

// Per-client table: mean/std/worst across clients for AUUC and AUROC.
inline std::string render_clients(const ExperimentReport& rep) {
    std::ostringstream out;
    out << "dataset,method,auuc_mean,auuc_std,auuc_worst,auroc_mean,auroc_std,auroc_worst,seeds_ok\n";
    auto v = [](const Stat& s) { return s.n ? fixed(s.mean, kMetricDecimals) : std::string("N/A"); };
    for (const auto& r : rep.clients) {
        out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.method) << ',' << v(r.auuc_mean) << ','
            << v(r.auuc_std) << ',' << v(r.auuc_worst) << ',' << v(r.auroc_mean) << ',' << v(r.auroc_std) << ','
            << v(r.auroc_worst) << ',' << r.seeds_ok << '\n';
    }
    return out.str();
}

// One row per (method, seed) at full precision, including failures.
inline std::string render_cells(const std::vector<CellResult>& cells, const std::vector<PreparedData>& prepared) {
    std::ostringstream out;
    out << "method,seed,status,auroc,auuc,end_uplift,trim_pct,worst_client_auuc,comm_bytes,comm_mb,rounds,mia_auc,"
           "valid_loss,random_auuc,split_hash,error\n";
    for (const auto& c : cells) {
        const PreparedData* p = nullptr;
        for (const auto& q : prepared) {
            if (q.seed == c.seed) p = &q;
        }
        out << c.method << ',' << c.seed << ',' << (c.ok ? "ok" : "failed") << ',';
        if (c.ok) {
            const auto& m = c.metrics;
            out << exact(m.auroc) << ',' << exact(m.auuc) << ',' << exact(m.end_uplift) << ',' << exact(m.trim_pct)
                << ',' << exact(m.worst_auuc) << ',' << c.training.ledger.total_bytes() << ',' << exact(m.comm_mb)
                << ',' << m.rounds << ',' << (m.mia_auc ? exact(*m.mia_auc) : "N/A") << ',' << exact(m.valid_loss);
        } else {
            out << ",,,,,,,,,";
        }
        out << ',' << (p ? exact(p->random_auuc.mean) : "") << ',';
        if (p) {
            char h[17];
            std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(p->split_hash));
            out << h;
        }
        out << ',' << detail::csv_field(c.error) << '\n';
    }
    return out.str();
}

inline std::string render_client_cells(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "method,seed,client,included,reason,n_test,n_kept,auroc,auuc\n";
    for (const auto& c : cells) {
        if (!c.ok) continue;
        for (const auto& r : c.clients.clients) {
            out << c.method << ',' << c.seed << ',' << detail::csv_field(r.client_id) << ',' << (r.included ? 1 : 0)
                << ',' << detail::csv_field(r.reason) << ',' << r.n_test << ',' << r.n_kept << ',';
            if (r.included) out << exact(r.auroc) << ',' << exact(r.auuc);
            else out << ',';
            out << '\n';
        }
    }
    return out.str();
}

inline std::string render_audits(const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "dataset,method,seed,round,client,sigma,clip,status,attack_auc,m,attacker_converged,error\n";
    for (const auto& c : cells) {
        const MethodConfig* m = nullptr;
        for (const auto& x : cfg.methods) {
            if (x.name == c.method) m = &x;
        }
        const auto& def = m ? m->round.defense : std::nullopt;
        for (const auto& a : c.audits) {
            out << detail::csv_field(cfg.dataset.name) << ',' << c.method << ',' << c.seed << ',' << a.round << ','
                << detail::csv_field(a.client_id) << ',' << (def ? exact(def->noise_sigma) : "0") << ','
                << (def ? exact(def->clip_norm) : "inf") << ',' << (a.ok ? "ok" : "infeasible") << ',';
            if (a.ok) out << exact(a.result.attack_auc) << ',' << a.result.m << ',' << (a.result.attacker_converged ? 1 : 0);
            else out << ",,";
            out << ',' << detail::csv_field(a.error) << '\n';
        }
    }
    return out.str();
}

inline std::string render_history(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out << "method,seed,round,mean_train_loss,steps,bytes\n";
    for (const auto& c : cells) {
        if (!c.ok) continue;
        for (const auto& h : c.training.history) {
            out << c.method << ',' << c.seed << ',' << h.round << ',' << exact(h.mean_train_loss) << ',' << h.steps
                << ',' << h.bytes << '\n';
        }
    }
    return out.str();
}

// Bytes per (round, direction, payload kind).
inline std::string render_ledger(const collab::CommLedger& ledger) {
    std::ostringstream out;
    out << "round,direction,kind,bytes\n";
    for (const auto& [key, bytes] : ledger.breakdown()) {
        const auto [round, dir, kind] = key;
        out << round << ',' << collab::to_string(static_cast<collab::Direction>(dir)) << ','
            << collab::to_string(static_cast<collab::PayloadKind>(kind)) << ',' << bytes << '\n';
    }
    return out.str();
}

// Plain-text summary for reading in a terminal.
inline std::string render_summary(const ExperimentReport& rep) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-15s %-17s %-17s %-8s %-9s %-9s\n", "dataset", "method", "AUROC",
                  "AUUC", "Trim%", "Comm MB", "MIA AUC");
    out << line;
    auto ms = [](const Stat& s, int d) {
        return s.n ? fixed(s.mean, d) + " +/- " + fixed(s.std, d) : std::string("N/A");
    };
    for (const auto& r : rep.rows) {
        std::snprintf(line, sizeof line, "%-16s %-15s %-17s %-17s %-8s %-9s %-9s\n", r.dataset.c_str(),
                      r.method.c_str(), r.baseline ? "N/A" : ms(r.auroc, 4).c_str(), ms(r.auuc, 4).c_str(),
                      r.trim_pct.n ? fixed(r.trim_pct.mean, 2).c_str() : "N/A",
                      r.baseline || !r.comm_mb.n ? "N/A" : fixed(r.comm_mb.mean, 2).c_str(),
                      r.mia ? fixed(r.mia->mean, 4).c_str() : "N/A");
        out << line;
    }
    out << "\nNote: " << rep.caveat << '\n';
    return out.str();
}

}  // namespace hfsl::experiment
