#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfsl/collab/protocols.hpp"
#include "hfsl/data/csv.hpp"
#include "hfsl/data/split.hpp"

namespace hfsl::experiment {

using nlohmann::json;

enum class DataSource { synthetic, csv };
enum class TrimMode { alpha, quantile };

struct SyntheticOptions {
    std::size_t n_per_client = 1000;
    std::size_t clients = 3;
    std::size_t features = 8;
    double client_shift_scale = 0.5;
    double effect_scale = 1.5;
    double propensity_strength = 1.0;
    double missing_rate = 0.0;
    std::uint64_t weights_seed = 7;  // fixes the dataset across experiment seeds
};

struct DatasetConfig {
    std::string name = "synthetic";
    DataSource source = DataSource::synthetic;
    std::string csv_path;
    data::CsvSchema csv_schema;
    SyntheticOptions synthetic;
};

struct TrainingDefaults {
    int rounds = 5;
    int local_epochs = 1;
    std::size_t batch_size = 256;
    double lr_client = 1e-3;
    double lr_server = 1e-3;
    double participation = 1.0;
};

// One row of the results table: a named protocol variant and its training setup.
struct MethodConfig {
    std::string name;  // centralized | fedavg | split | hybrid | hybrid_pers | hybrid_def
    collab::RoundConfig round;
};

struct EvalConfig {
    TrimMode trim = TrimMode::quantile;
    double alpha = 0.05;
    double trim_fraction = 0.10;
    std::size_t grid_points = 100;
    std::size_t random_reps = 200;
};

struct AuditSettings {
    bool enabled = true;
    std::size_t m = 0;
    double attacker_train_fraction = 0.5;
    std::vector<std::string> clients;  // empty = every client
    bool per_round = false;            // also audit the trunk after every earlier round
};

struct SweepConfig {
    std::string method = "hybrid";
    std::vector<double> sigmas{0.0, 0.05, 0.5};
    std::vector<double> clips{1.0, collab::kNoClip};
};

struct ExperimentConfig {
    DatasetConfig dataset;
    data::SplitFractions split;
    TrainingDefaults training;
    std::vector<MethodConfig> methods;
    collab::DefenseConfig defense;
    EvalConfig evaluation;
    AuditSettings audit;
    SweepConfig sweep;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string output_dir = "results";
    json source;  // the parsed file, echoed into the manifest
};

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> names{"centralized", "fedavg", "split",
                                                "hybrid",      "hybrid_pers", "hybrid_def"};
    return names;
}

inline std::string method_label(const std::string& name) {
    if (name == "centralized") return "Centralized";
    if (name == "fedavg") return "FedAvg";
    if (name == "split") return "Split";
    if (name == "hybrid") return "Hybrid";
    if (name == "hybrid_pers") return "Hybrid+Pers.";
    if (name == "hybrid_def") return "Hybrid+Def.";
    return name;
}

namespace detail {

// Typed access to one JSON object; remembers which keys were read so that
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const { return j_.contains(k); }

    const json* raw(const std::string& k) {
        seen_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& k, double def) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_number()) throw ConfigError(key(k), "expected a number");
        return v->get<double>();
    }

    template <class Int>
    Int integer(const std::string& k, Int def, long long min_value) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
        const auto x = v->get<long long>();
        if (x < min_value) throw ConfigError(key(k), "must be >= " + std::to_string(min_value));
        return static_cast<Int>(x);
    }

    bool boolean(const std::string& k, bool def) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(key(k), "expected true/false");
        return v->get<bool>();
    }

    std::string string(const std::string& k, const std::string& def) {
        const json* v = raw(k);
        if (!v) return def;
        if (!v->is_string()) throw ConfigError(key(k), "expected a string");
        return v->get<std::string>();
    }

    std::vector<std::string> strings(const std::string& k) {
        const json* v = raw(k);
        if (!v) return {};
        if (!v->is_array()) throw ConfigError(key(k), "expected a list of strings");
        std::vector<std::string> out;
        for (const auto& e : *v) {
            if (!e.is_string()) throw ConfigError(key(k), "expected a list of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::optional<Section> child(const std::string& k) {
        const json* v = raw(k);
        if (!v) return std::nullopt;
        return Section(*v, key(k));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Clip norms accept numbers or "inf".
inline double clip_value(const json& v, const std::string& key) {
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "none")) return collab::kNoClip;
    if (!v.is_number()) throw ConfigError(key, "expected a number or \"inf\"");
    return v.get<double>();
}

inline void read_training(Section& s, TrainingDefaults& t) {
    t.rounds = s.integer<int>("rounds", t.rounds, 1);
    t.local_epochs = s.integer<int>("local_epochs", t.local_epochs, 1);
    t.batch_size = s.integer<std::size_t>("batch_size", t.batch_size, 1);
    t.lr_client = s.number("lr_client", t.lr_client);
    t.lr_server = s.number("lr_server", t.lr_server);
    t.participation = s.number("participation", t.participation);
    if (!(t.lr_client > 0.0)) throw ConfigError(s.key("lr_client"), "must be > 0");
    if (!(t.lr_server > 0.0)) throw ConfigError(s.key("lr_server"), "must be > 0");
    if (!(t.participation > 0.0 && t.participation <= 1.0)) throw ConfigError(s.key("participation"), "must be in (0, 1]");
}

inline collab::RoundConfig round_config_for(const std::string& name, const TrainingDefaults& t,
                                            const collab::DefenseConfig& defense, const std::string& key) {
    collab::RoundConfig rc;
    rc.rounds = t.rounds;
    rc.local_epochs = t.local_epochs;
    rc.batch_size = t.batch_size;
    rc.lr_client = t.lr_client;
    rc.lr_server = t.lr_server;
    rc.participation = t.participation;
    if (name == "centralized") {
        rc.mode = collab::Mode::centralized;
    } else if (name == "fedavg") {
        rc.mode = collab::Mode::fedavg;
    } else if (name == "split") {
        rc.mode = collab::Mode::split;
    } else if (name == "hybrid") {
        rc.mode = collab::Mode::hybrid;
    } else if (name == "hybrid_pers") {
        rc.mode = collab::Mode::hybrid;
        rc.personalization = true;
    } else if (name == "hybrid_def") {
        rc.mode = collab::Mode::hybrid;
        rc.defense = defense;
    } else {
        throw ConfigError(key, "unknown method '" + name + "'");
    }
    return rc;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& root) {
    using detail::Section;
    ExperimentConfig cfg;
    cfg.source = root;
    Section top(root, "");

    if (auto ds = top.child("dataset")) {
        cfg.dataset.name = ds->string("name", cfg.dataset.name);
        const auto source = ds->string("source", "synthetic");
        if (source == "synthetic") {
            cfg.dataset.source = DataSource::synthetic;
        } else if (source == "csv") {
            cfg.dataset.source = DataSource::csv;
        } else {
            throw ConfigError(ds->key("source"), "must be \"synthetic\" or \"csv\"");
        }
        if (auto csv = ds->child("csv")) {
            cfg.dataset.csv_path = csv->string("path", "");
            cfg.dataset.csv_schema.treatment = csv->string("treatment", cfg.dataset.csv_schema.treatment);
            cfg.dataset.csv_schema.outcome = csv->string("outcome", cfg.dataset.csv_schema.outcome);
            cfg.dataset.csv_schema.client = csv->string("client", cfg.dataset.csv_schema.client);
            cfg.dataset.csv_schema.features = csv->strings("features");
            csv->finish();
        }
        if (cfg.dataset.source == DataSource::csv && cfg.dataset.csv_path.empty()) {
            throw ConfigError(ds->key("csv.path"), "required when source is \"csv\"");
        }
        if (auto syn = ds->child("synthetic")) {
            auto& s = cfg.dataset.synthetic;
            s.n_per_client = syn->integer<std::size_t>("n_per_client", s.n_per_client, 1);
            s.clients = syn->integer<std::size_t>("clients", s.clients, 1);
            s.features = syn->integer<std::size_t>("features", s.features, 1);
            s.client_shift_scale = syn->number("client_shift_scale", s.client_shift_scale);
            s.effect_scale = syn->number("effect_scale", s.effect_scale);
            s.propensity_strength = syn->number("propensity_strength", s.propensity_strength);
            s.missing_rate = syn->number("missing_rate", s.missing_rate);
            s.weights_seed = syn->integer<std::uint64_t>("weights_seed", s.weights_seed, 0);
            if (s.client_shift_scale < 0.0) throw ConfigError(syn->key("client_shift_scale"), "must be >= 0");
            if (s.missing_rate < 0.0 || s.missing_rate >= 1.0) throw ConfigError(syn->key("missing_rate"), "must be in [0, 1)");
            syn->finish();
        }
        ds->finish();
    }

    if (auto sp = top.child("split")) {
        cfg.split.train = sp->number("train", cfg.split.train);
        cfg.split.valid = sp->number("valid", cfg.split.valid);
        cfg.split.test = sp->number("test", cfg.split.test);
        try {
            cfg.split.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("split", e.what());
        }
        sp->finish();
    }

    if (auto tr = top.child("training")) {
        detail::read_training(*tr, cfg.training);
        tr->finish();
    }

    if (auto df = top.child("defense")) {
        if (const json* c = df->raw("clip_norm")) cfg.defense.clip_norm = detail::clip_value(*c, df->key("clip_norm"));
        cfg.defense.noise_sigma = df->number("noise_sigma", cfg.defense.noise_sigma);
        try {
            cfg.defense.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("defense", e.what());
        }
        df->finish();
    }

    std::vector<std::pair<std::string, TrainingDefaults>> method_specs;
    if (const json* ms = top.raw("methods")) {
        if (!ms->is_array() || ms->empty()) throw ConfigError("methods", "expected a non-empty list");
        for (std::size_t i = 0; i < ms->size(); ++i) {
            const json& m = (*ms)[i];
            const std::string key = "methods[" + std::to_string(i) + "]";
            if (m.is_string()) {
                method_specs.emplace_back(m.get<std::string>(), cfg.training);
            } else {
                Section s(m, key);
                const auto name = s.string("name", "");
                if (name.empty()) throw ConfigError(s.key("name"), "required");
                TrainingDefaults t = cfg.training;
                detail::read_training(s, t);
                s.finish();
                method_specs.emplace_back(name, t);
            }
        }
    } else {
        for (const auto& n : known_methods()) method_specs.emplace_back(n, cfg.training);
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < method_specs.size(); ++i) {
        const auto& [name, t] = method_specs[i];
        const std::string key = "methods[" + std::to_string(i) + "]";
        if (!names.insert(name).second) throw ConfigError(key, "duplicate method '" + name + "'");
        cfg.methods.push_back({name, detail::round_config_for(name, t, cfg.defense, key)});
    }

    if (auto ev = top.child("evaluation")) {
        const auto mode = ev->string("trim", "quantile");
        if (mode == "quantile") {
            cfg.evaluation.trim = TrimMode::quantile;
        } else if (mode == "alpha") {
            cfg.evaluation.trim = TrimMode::alpha;
        } else {
            throw ConfigError(ev->key("trim"), "must be \"quantile\" or \"alpha\"");
        }
        cfg.evaluation.alpha = ev->number("alpha", cfg.evaluation.alpha);
        cfg.evaluation.trim_fraction = ev->number("trim_fraction", cfg.evaluation.trim_fraction);
        cfg.evaluation.grid_points = ev->integer<std::size_t>("grid_points", cfg.evaluation.grid_points, 2);
        cfg.evaluation.random_reps = ev->integer<std::size_t>("random_reps", cfg.evaluation.random_reps, 1);
        if (!(cfg.evaluation.alpha >= 0.0 && cfg.evaluation.alpha < 0.5)) throw ConfigError(ev->key("alpha"), "must be in [0, 0.5)");
        if (!(cfg.evaluation.trim_fraction >= 0.0 && cfg.evaluation.trim_fraction < 1.0)) {
            throw ConfigError(ev->key("trim_fraction"), "must be in [0, 1)");
        }
        ev->finish();
    }

    if (auto au = top.child("audit")) {
        cfg.audit.enabled = au->boolean("enabled", cfg.audit.enabled);
        cfg.audit.m = au->integer<std::size_t>("m", cfg.audit.m, 0);
        cfg.audit.attacker_train_fraction = au->number("attacker_train_fraction", cfg.audit.attacker_train_fraction);
        cfg.audit.clients = au->strings("clients");
        cfg.audit.per_round = au->boolean("per_round", cfg.audit.per_round);
        if (cfg.audit.m != 0 && cfg.audit.m < 10) throw ConfigError(au->key("m"), "must be 0 (auto) or >= 10");
        if (!(cfg.audit.attacker_train_fraction > 0.0 && cfg.audit.attacker_train_fraction < 1.0)) {
            throw ConfigError(au->key("attacker_train_fraction"), "must be in (0, 1)");
        }
        au->finish();
    }

    if (auto sw = top.child("sweep")) {
        cfg.sweep.method = sw->string("method", cfg.sweep.method);
        if (const json* v = sw->raw("sigmas")) {
            if (!v->is_array() || v->empty()) throw ConfigError(sw->key("sigmas"), "expected a non-empty list");
            cfg.sweep.sigmas.clear();
            for (const auto& e : *v) {
                if (!e.is_number() || e.get<double>() < 0.0) throw ConfigError(sw->key("sigmas"), "entries must be numbers >= 0");
                cfg.sweep.sigmas.push_back(e.get<double>());
            }
        }
        if (const json* v = sw->raw("clips")) {
            if (!v->is_array() || v->empty()) throw ConfigError(sw->key("clips"), "expected a non-empty list");
            cfg.sweep.clips.clear();
            for (const auto& e : *v) {
                const double c = detail::clip_value(e, sw->key("clips"));
                if (!(c > 0.0)) throw ConfigError(sw->key("clips"), "entries must be > 0");
                cfg.sweep.clips.push_back(c);
            }
        }
        const auto rc = detail::round_config_for(cfg.sweep.method, cfg.training, cfg.defense, sw->key("method"));
        if (!collab::is_split_based(rc.mode)) throw ConfigError(sw->key("method"), "sweep needs a split-based method");
        sw->finish();
    }

    if (const json* s = top.raw("seeds")) {
        if (!s->is_array() || s->empty()) throw ConfigError("seeds", "expected a non-empty list of integers");
        cfg.seeds.clear();
        std::set<std::uint64_t> unique;
        for (const auto& e : *s) {
            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
                throw ConfigError("seeds", "entries must be non-negative integers");
            }
            const auto v = e.get<std::uint64_t>();
            if (!unique.insert(v).second) throw ConfigError("seeds", "duplicate seed " + std::to_string(v));
            cfg.seeds.push_back(v);
        }
    }
    cfg.output_dir = top.string("output_dir", cfg.output_dir);
    top.finish();

    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
        try {
            cfg.methods[i].round.validate();
        } catch (const ValidationError& e) {
            throw ConfigError("methods[" + std::to_string(i) + "]", e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
    json root;
    try {
        root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", e.what());
    }
    return parse_config(root);
}

// Checks that need the filesystem, kept apart from parsing so configs can be
// built and parsed in memory.
inline void check_inputs(const ExperimentConfig& cfg) {
    if (cfg.dataset.source == DataSource::csv && !std::filesystem::exists(cfg.dataset.csv_path)) {
        throw ConfigError("dataset.csv.path", "file '" + cfg.dataset.csv_path + "' does not exist");
    }
}

}  // namespace hfsl::experiment
