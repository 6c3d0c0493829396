#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hfsl/data/split.hpp"
#include "hfsl/data/table.hpp"
#include "hfsl/nn/matrix.hpp"

namespace hfsl::data {

// Preprocessed rows with their treatment/outcome and global row indices.
struct Samples {
    nn::Matrix x;
    std::vector<int> t;
    std::vector<int> y;
    std::vector<std::size_t> rows;

    std::size_t size() const noexcept { return t.size(); }
    bool empty() const noexcept { return t.empty(); }

    Samples subset(std::span<const std::size_t> idx) const {
        Samples s;
        s.x = x.select_rows(idx);
        for (auto i : idx) {
            s.t.push_back(t[i]);
            s.y.push_back(y[i]);
            s.rows.push_back(rows[i]);
        }
        return s;
    }

    void append(const Samples& other) {
        x = nn::Matrix::vstack(x, other.x);
        t.insert(t.end(), other.t.begin(), other.t.end());
        y.insert(y.end(), other.y.begin(), other.y.end());
        rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    }
};

struct ClientDataset {
    std::string client_id;
    Samples train;
    Samples valid;
    Samples test;

    std::size_t size() const noexcept { return train.size() + valid.size() + test.size(); }
    // Clients whose training split came out empty are reported but not trained on.
    bool trainable() const noexcept { return !train.empty(); }
};

namespace detail {

inline Samples gather(const DataTable& table, const nn::Matrix& x, const std::vector<std::size_t>& rows) {
    Samples s;
    s.x = x.select_rows(rows);
    s.rows = rows;
    for (auto r : rows) {
        s.t.push_back(table.treatment[r]);
        s.y.push_back(table.outcome[r]);
    }
    return s;
}

}  // namespace detail

// One dataset per distinct client_id, ordered lexicographically, each
// keeping the global split membership of its rows. `x` holds the
// preprocessed features of every table row.
inline std::vector<ClientDataset> partition_clients(const DataTable& table, const nn::Matrix& x,
                                                   const SplitIndices& split) {
    if (x.rows() != table.rows()) throw DimensionError("partition_clients: feature rows != table rows");
    std::map<std::string, std::array<std::vector<std::size_t>, 3>> by_client;
    for (const auto& id : table.client_id) by_client[id];
    auto place = [&](const std::vector<std::size_t>& rows, std::size_t which) {
        for (auto r : rows) by_client[table.client_id.at(r)][which].push_back(r);
    };
    place(split.train, 0);
    place(split.valid, 1);
    place(split.test, 2);

    std::vector<ClientDataset> out;
    for (auto& [id, parts] : by_client) {
        for (auto& p : parts) std::sort(p.begin(), p.end());
        ClientDataset c;
        c.client_id = id;
        c.train = detail::gather(table, x, parts[0]);
        c.valid = detail::gather(table, x, parts[1]);
        c.test = detail::gather(table, x, parts[2]);
        out.push_back(std::move(c));
    }
    if (out.empty()) throw ValidationError("partition_clients: no clients");
    return out;
}

// Concatenates one split across clients, in client order.
inline Samples pool(const std::vector<ClientDataset>& clients, Samples ClientDataset::*part) {
    Samples out;
    for (const auto& c : clients) out.append(c.*part);
    return out;
}

}  // namespace hfsl::data
