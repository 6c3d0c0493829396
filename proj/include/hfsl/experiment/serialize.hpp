#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfsl/collab/protocols.hpp"
#include "hfsl/data/csv.hpp"
#include "hfsl/eval/uplift_curve.hpp"
#include "hfsl/privacy/sweep.hpp"

namespace hfsl::experiment {

class IoError : public Error {
public:
    using Error::Error;
};

// Fixed-decimal rendering for report tables.
inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// Short rendering for terminal output.
inline std::string compact(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Round-trip rendering for point files.
inline std::string exact(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return data::detail::format_double(v);
}

inline double parse_exact(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, bool skip_header = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && skip_header) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        rows.push_back(data::detail::split_csv_line(line));
    }
    return rows;
}

// Curve points as rows of q, u(q), defined flag.
inline void emit_uplift_points(const eval::UpliftCurve& curve, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "q,u,defined\n";
    for (std::size_t i = 0; i < curve.q.size(); ++i) {
        out << exact(curve.q[i]) << ',' << exact(curve.u[i]) << ',' << (curve.defined[i] ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline eval::UpliftCurve read_uplift_points(const std::filesystem::path& path) {
    eval::UpliftCurve c;
    for (const auto& r : read_rows(path)) {
        if (r.size() != 3) throw IoError("malformed curve row in '" + path.string() + "'");
        c.q.push_back(parse_exact(r[0]));
        c.u.push_back(parse_exact(r[1]));
        c.defined.push_back(r[2] == "1");
    }
    if (c.q.empty()) throw IoError("empty curve file '" + path.string() + "'");
    c.end_uplift = c.u.back();
    c.auuc = eval::auuc_from_points(c.q, c.u, c.defined);
    return c;
}

// Detail rows per (sigma, clip, seed) followed by one mean row per point.
inline void emit_privacy_sweep(const privacy::SweepResult& sweep, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "row,sigma,clip,seed,auuc,mia_auc\n";
    for (const auto& p : sweep.points) {
        out << "seed," << exact(p.sigma) << ',' << exact(p.clip) << ',' << p.seed << ',' << exact(p.auuc) << ','
            << exact(p.mia_auc) << '\n';
    }
    for (const auto& m : sweep.means()) {
        out << "mean," << exact(m.sigma) << ',' << exact(m.clip) << ",," << exact(m.auuc) << ','
            << exact(m.mia_auc) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

struct SweepFile {
    std::vector<privacy::SweepPoint> points;
    std::vector<privacy::SweepMean> means;
};

inline SweepFile read_privacy_sweep(const std::filesystem::path& path) {
    SweepFile f;
    for (const auto& r : read_rows(path)) {
        if (r.size() != 6) throw IoError("malformed sweep row in '" + path.string() + "'");
        if (r[0] == "seed") {
            f.points.push_back({parse_exact(r[1]), parse_exact(r[2]), std::stoull(r[3]), parse_exact(r[4]),
                                parse_exact(r[5])});
        } else {
            f.means.push_back({parse_exact(r[1]), parse_exact(r[2]), parse_exact(r[4]), parse_exact(r[5]), 0});
        }
    }
    return f;
}

namespace detail {

template <nn::ParameterSet P>
nlohmann::json tensors_json(const P& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto t : p.tensors()) arr.push_back(std::vector<double>(t.begin(), t.end()));
    return arr;
}

template <nn::ParameterSet P>
void fill_tensors(P& p, const nlohmann::json& arr, const std::string& what) {
    auto ts = p.tensors();
    if (!arr.is_array() || arr.size() != ts.size()) throw IoError("model file: bad tensor list for " + what);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto v = arr[i].get<std::vector<double>>();
        if (v.size() != ts[i].size()) throw IoError("model file: tensor size mismatch in " + what);
        std::copy(v.begin(), v.end(), ts[i].begin());
    }
}

}  // namespace detail

// Shared model plus every client's adapter (null when the client has none).
inline nlohmann::json model_json(const collab::TrainResult& r) {
    nlohmann::json j;
    j["input_dim"] = r.model.input_dim();
    j["trunk"] = detail::tensors_json(r.model.trunk);
    j["heads"] = detail::tensors_json(r.model.heads);
    j["clients"] = nlohmann::json::array();
    for (std::size_t k = 0; k < r.client_ids.size(); ++k) {
        nlohmann::json c;
        c["client_id"] = r.client_ids[k];
        c["adapter"] = k < r.adapters.size() && r.adapters[k] ? detail::tensors_json(*r.adapters[k]) : nlohmann::json();
        j["clients"].push_back(c);
    }
    return j;
}

inline void save_model(const collab::TrainResult& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << model_json(r).dump(1) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Restores the parameters of a saved run; the ledger and history are not stored.
inline collab::TrainResult load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        collab::TrainResult r;
        Rng scratch(0);
        r.model.trunk = nn::TrunkParams(j.at("input_dim").get<std::size_t>());
        r.model.heads = nn::Heads::glorot(scratch);
        detail::fill_tensors(r.model.trunk, j.at("trunk"), "trunk");
        detail::fill_tensors(r.model.heads, j.at("heads"), "heads");
        for (const auto& c : j.at("clients")) {
            r.client_ids.push_back(c.at("client_id").get<std::string>());
            if (c.at("adapter").is_null()) {
                r.adapters.emplace_back();
            } else {
                auto a = collab::AdapterParams::init(scratch);
                detail::fill_tensors(a, c.at("adapter"), "adapter");
                r.adapters.emplace_back(std::move(a));
            }
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model file '" + path.string() + "': " + e.what());
    }
}

// FNV-1a 64 of a file's bytes, rendered as 16 hex digits.
inline std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace hfsl::experiment
