#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hfsl/data/table.hpp"

namespace hfsl::data {

// Which CSV columns play which role. An empty feature list means "every
// column that is not treatment, outcome or client".
struct CsvSchema {
    std::string treatment = "T";
    std::string outcome = "Y";
    std::string client = "client_id";
    std::vector<std::string> features;
};

namespace detail {

// Splits one line on commas; double quotes group, "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline DataTable read_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("csv: missing header line");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = detail::split_csv_line(line);
    for (auto& h : header) h = std::string(detail::trim(h));

    auto find_col = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("csv: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t t_col = find_col(schema.treatment);
    const std::size_t y_col = find_col(schema.outcome);
    const std::size_t c_col = find_col(schema.client);

    DataTable table;
    std::vector<std::size_t> f_cols;
    if (schema.features.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i != t_col && i != y_col && i != c_col) {
                f_cols.push_back(i);
                table.feature_names.push_back(header[i]);
            }
        }
    } else {
        for (const auto& f : schema.features) {
            f_cols.push_back(find_col(f));
            table.feature_names.push_back(f);
        }
    }
    if (f_cols.empty()) throw SchemaError("csv: no feature columns");

    auto binary = [](std::string_view s, std::size_t row, const char* what) {
        s = detail::trim(s);
        if (s == "0") return 0;
        if (s == "1") return 1;
        throw ValidationError("row " + std::to_string(row) + ": " + what + " value '" +
                              std::string(s) + "' is not 0/1");
    };

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < f_cols.size(); ++j) {
            const auto cell = detail::trim(cells[f_cols[j]]);
            double v = kMissing;
            if (!cell.empty() && !detail::parse_double(cell, v)) {
                throw ParseError(row, "column '" + table.feature_names[j] + "': cannot parse '" +
                                          std::string(cell) + "'");
            }
            table.features.push_back(v);
        }
        table.treatment.push_back(binary(cells[t_col], row, "treatment"));
        table.outcome.push_back(binary(cells[y_col], row, "outcome"));
        const auto client = detail::trim(cells[c_col]);
        if (client.empty()) throw ValidationError("row " + std::to_string(row) + ": empty client id");
        table.client_id.emplace_back(client);
        ++row;
    }
    table.validate();
    return table;
}

inline DataTable load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw SchemaError("csv: cannot open '" + path + "'");
    return read_csv(in, schema);
}

// Writes client, treatment, outcome, then features, using the schema's
// column names. Values round-trip exactly.
inline void write_csv(std::ostream& out, const DataTable& table, const CsvSchema& schema = {}) {
    out << detail::quote_if_needed(schema.client) << ',' << detail::quote_if_needed(schema.treatment)
        << ',' << detail::quote_if_needed(schema.outcome);
    for (const auto& f : table.feature_names) out << ',' << detail::quote_if_needed(f);
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << detail::quote_if_needed(table.client_id[r]) << ',' << table.treatment[r] << ','
            << table.outcome[r];
        for (std::size_t c = 0; c < table.cols(); ++c) {
            out << ',';
            const double v = table.feature(r, c);
            if (!is_missing(v)) out << detail::format_double(v);
        }
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const DataTable& table, const CsvSchema& schema = {}) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot write '" + path + "'");
    write_csv(out, table, schema);
}

}  // namespace hfsl::data
