#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hfsl/collab/adapter.hpp"
#include "hfsl/collab/defense.hpp"
#include "hfsl/collab/fedavg.hpp"
#include "hfsl/collab/ledger.hpp"
#include "hfsl/data/partition.hpp"
#include "hfsl/nn/adam.hpp"
#include "hfsl/uplift/model.hpp"

namespace hfsl::collab {

enum class Mode { centralized, fedavg, split, hybrid };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::centralized: return "centralized";
        case Mode::fedavg: return "fedavg";
        case Mode::split: return "split";
        case Mode::hybrid: return "hybrid";
    }
    return "?";
}

inline bool is_split_based(Mode m) { return m == Mode::split || m == Mode::hybrid; }

struct RoundConfig {
    Mode mode = Mode::hybrid;
    int rounds = 5;
    int local_epochs = 1;
    std::size_t batch_size = 256;
    double lr_client = 1e-3;
    double lr_server = 1e-3;
    std::optional<DefenseConfig> defense;
    bool personalization = false;
    // Fraction of trainable clients taking part in each round (federated modes).
    double participation = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (rounds < 1) throw ValidationError("rounds must be >= 1");
        if (local_epochs < 1) throw ValidationError("local_epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
        if (!(lr_client > 0.0) || !(lr_server > 0.0)) throw ValidationError("learning rates must be > 0");
        if (!(participation > 0.0 && participation <= 1.0)) throw ValidationError("participation must be in (0, 1]");
        if (defense) defense->validate();
        if (personalization && mode != Mode::hybrid) {
            throw ValidationError("personalization adapters are only defined for hybrid mode");
        }
        if (defense && !is_split_based(mode)) {
            throw ValidationError("activation defense requires a split-based mode");
        }
    }
};

struct RoundRecord {
    int round = 0;
    Mode mode = Mode::centralized;
    double mean_train_loss = 0.0;
    std::size_t steps = 0;
    std::uint64_t bytes = 0;
};

struct TrainResult {
    uplift::TwoHeadModel model;  // shared trunk + heads, no adapter
    std::vector<std::string> client_ids;
    std::vector<std::optional<AdapterParams>> adapters;  // aligned with client_ids
    CommLedger ledger;
    std::vector<RoundRecord> history;

    // The model client k uses at inference: the shared one plus its adapter.
    uplift::TwoHeadModel model_for_client(std::size_t k) const {
        uplift::TwoHeadModel m = model;
        if (k < adapters.size() && adapters[k]) m.adapter = adapters[k];
        return m;
    }
};

struct Batch {
    nn::Matrix x;
    std::vector<int> t;
    std::vector<int> y;
    std::size_t size() const noexcept { return t.size(); }
};

// Shuffled index chunks covering 0..n-1; the last chunk may be short.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    const auto order = rng.permutation(n);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < n; s += batch_size) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + batch_size)));
    }
    return out;
}

inline Batch gather_batch(const data::Samples& s, std::span<const std::size_t> idx) {
    Batch b;
    b.x = s.x.select_rows(idx);
    for (auto i : idx) {
        b.t.push_back(s.t[i]);
        b.y.push_back(s.y[i]);
    }
    return b;
}

inline uplift::TwoHeadModel initial_model(std::size_t input_dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, Stream::init));
    return uplift::TwoHeadModel::init(input_dim, rng);
}

inline Rng batch_rng(std::uint64_t seed, std::size_t client, int round) {
    return Rng(derive_seed(seed, Stream::batches, {client, static_cast<std::uint64_t>(round)}));
}

inline Rng noise_rng(std::uint64_t seed, std::size_t client, int round) {
    return Rng(derive_seed(seed, Stream::noise, {client, static_cast<std::uint64_t>(round)}));
}

// One full-model Adam step on a batch (centralized and FedAvg-local training).
inline double centralized_step(uplift::TwoHeadModel& model, nn::AdamState& trunk_opt, nn::AdamState& head_opt,
                               const Batch& batch) {
    const auto pass = nn::forward_trunk(model.trunk, batch.x);
    auto g = nn::backprop(model.trunk, model.heads, pass, batch.t, batch.y);
    nn::adam_step(model.heads, g.heads, head_opt);
    nn::adam_step(model.trunk, g.trunk, trunk_opt);
    return g.loss;
}

struct ClientState {
    std::string client_id;
    std::size_t index = 0;
    const data::Samples* train = nullptr;
    nn::TrunkParams trunk;
    std::optional<AdapterParams> adapter;
    nn::AdamState trunk_opt;
    std::optional<nn::AdamState> adapter_opt;
};

struct ServerState {
    nn::Heads heads;
    nn::AdamState head_opt;
    std::optional<nn::TrunkParams> global_trunk;  // never set in pure split mode
    CommLedger ledger;
};

// One split-learning exchange on a batch: the client sends (defended) cut
// activations plus (t, y); the server takes a head step and returns dL/dz;
// the client backpropagates through adapter and trunk.
inline double split_round(ClientState& client, ServerState& server, const Batch& batch,
                          const std::optional<DefenseConfig>& defense, Rng& noise, int round) {
    const auto pass = nn::forward_trunk(client.trunk, batch.x);
    std::optional<AdapterPass> adapter_pass;
    if (client.adapter) adapter_pass = adapter_forward(*client.adapter, pass.z);
    const nn::Matrix& z = adapter_pass ? adapter_pass->out : pass.z;

    std::optional<DefensePass> defense_pass;
    if (defense) defense_pass = defend(z, *defense, noise);
    const nn::Matrix& sent = defense_pass ? defense_pass->out : z;

    const auto b = static_cast<std::uint64_t>(batch.size());
    server.ledger.record(round, Direction::up, PayloadKind::activations, client.client_id, b * nn::kCutWidth);
    server.ledger.record(round, Direction::up, PayloadKind::labels, client.client_id, b * 2);

    auto hb = nn::head_backward(server.heads, sent, batch.t, batch.y);
    nn::adam_step(server.heads, hb.grads, server.head_opt);
    server.ledger.record(round, Direction::down, PayloadKind::activation_grads, client.client_id,
                         b * nn::kCutWidth);

    nn::Matrix grad = defense_pass ? defense_backward(*defense_pass, z, hb.grad_z) : std::move(hb.grad_z);
    if (adapter_pass) {
        auto ag = adapter_backward(*client.adapter, *adapter_pass, grad);
        nn::adam_step(*client.adapter, ag.params, *client.adapter_opt);
        grad = std::move(ag.grad_z);
    }
    const auto tg = nn::trunk_backward(client.trunk, pass, grad);
    nn::adam_step(client.trunk, tg, client.trunk_opt);
    return hb.loss;
}

namespace detail {

inline std::vector<std::size_t> trainable_clients(const std::vector<data::ClientDataset>& clients) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        if (clients[k].trainable()) out.push_back(k);
    }
    if (out.empty()) throw ValidationError("no client has training rows");
    return out;
}

inline std::vector<std::size_t> participants(const std::vector<std::size_t>& trainable, const RoundConfig& cfg,
                                             int round) {
    if (cfg.participation >= 1.0) return trainable;
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.participation * static_cast<double>(trainable.size()))));
    Rng rng(derive_seed(cfg.seed, Stream::participation, {static_cast<std::uint64_t>(round)}));
    auto order = rng.permutation(trainable.size());
    order.resize(m);
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> out;
    for (auto i : order) out.push_back(trainable[i]);
    return out;
}

inline std::size_t input_dim_of(const std::vector<data::ClientDataset>& clients) {
    for (const auto& c : clients) {
        if (c.trainable()) return c.train.x.cols();
    }
    throw ValidationError("no client has training rows");
}

inline TrainResult make_result(const std::vector<data::ClientDataset>& clients) {
    TrainResult r;
    for (const auto& c : clients) r.client_ids.push_back(c.client_id);
    r.adapters.resize(clients.size());
    return r;
}

struct LossMeter {
    double sum = 0.0;
    std::size_t steps = 0;
    void add(double l) {
        sum += l;
        ++steps;
    }
    double mean() const { return steps ? sum / static_cast<double>(steps) : 0.0; }
};

inline void close_round(TrainResult& r, Mode mode, int round, const LossMeter& loss, const CommLedger& ledger) {
    r.history.push_back({round, mode, loss.mean(), loss.steps, ledger.bytes_in_round(round)});
}

// E epochs of split_round over one client's training rows.
inline void split_local_epochs(ClientState& client, ServerState& server, const RoundConfig& cfg, int round,
                               LossMeter& loss) {
    Rng order = batch_rng(cfg.seed, client.index, round);
    Rng noise = noise_rng(cfg.seed, client.index, round);
    for (int e = 0; e < cfg.local_epochs; ++e) {
        for (const auto& idx : epoch_batches(client.train->size(), cfg.batch_size, order)) {
            loss.add(split_round(client, server, gather_batch(*client.train, idx), cfg.defense, noise, round));
        }
    }
}

}  // namespace detail

// Pooled-data training. Exchanges nothing, so the ledger stays empty.
inline TrainResult run_centralized(const std::vector<data::ClientDataset>& clients, const RoundConfig& cfg) {
    cfg.validate();
    const auto pooled = data::pool(clients, &data::ClientDataset::train);
    if (pooled.empty()) throw ValidationError("run_centralized: pooled training split is empty");
    TrainResult r = detail::make_result(clients);
    r.model = initial_model(pooled.x.cols(), cfg.seed);
    auto trunk_opt = nn::AdamState::for_params(r.model.trunk, {.learning_rate = cfg.lr_client});
    auto head_opt = nn::AdamState::for_params(r.model.heads, {.learning_rate = cfg.lr_server});
    for (int round = 0; round < cfg.rounds; ++round) {
        detail::LossMeter loss;
        Rng order = batch_rng(cfg.seed, 0, round);
        for (int e = 0; e < cfg.local_epochs; ++e) {
            for (const auto& idx : epoch_batches(pooled.size(), cfg.batch_size, order)) {
                loss.add(centralized_step(r.model, trunk_opt, head_opt, gather_batch(pooled, idx)));
            }
        }
        detail::close_round(r, Mode::centralized, round, loss, r.ledger);
    }
    return r;
}

// FedAvg over the full model (trunk and heads). Each client keeps its own
// Adam state across rounds.
inline TrainResult run_fedavg(const std::vector<data::ClientDataset>& clients, const RoundConfig& cfg) {
    cfg.validate();
    const auto trainable = detail::trainable_clients(clients);
    TrainResult r = detail::make_result(clients);
    r.model = initial_model(detail::input_dim_of(clients), cfg.seed);
    const std::uint64_t w_count = nn::parameter_count(r.model.trunk) + nn::parameter_count(r.model.heads);

    std::vector<nn::AdamState> trunk_opt, head_opt;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        trunk_opt.push_back(nn::AdamState::for_params(r.model.trunk, {.learning_rate = cfg.lr_client}));
        head_opt.push_back(nn::AdamState::for_params(r.model.heads, {.learning_rate = cfg.lr_client}));
    }

    for (int round = 0; round < cfg.rounds; ++round) {
        detail::LossMeter loss;
        std::vector<nn::TrunkParams> trunks;
        std::vector<nn::Heads> heads;
        std::vector<std::size_t> sizes;
        for (auto k : detail::participants(trainable, cfg, round)) {
            const auto& c = clients[k];
            r.ledger.record(round, Direction::down, PayloadKind::weights, c.client_id, w_count);
            uplift::TwoHeadModel local = r.model;
            Rng order = batch_rng(cfg.seed, k, round);
            for (int e = 0; e < cfg.local_epochs; ++e) {
                for (const auto& idx : epoch_batches(c.train.size(), cfg.batch_size, order)) {
                    loss.add(centralized_step(local, trunk_opt[k], head_opt[k], gather_batch(c.train, idx)));
                }
            }
            r.ledger.record(round, Direction::up, PayloadKind::weights, c.client_id, w_count);
            trunks.push_back(std::move(local.trunk));
            heads.push_back(std::move(local.heads));
            sizes.push_back(c.train.size());
        }
        r.model.trunk = fedavg_aggregate(trunks, sizes);
        r.model.heads = fedavg_aggregate(heads, sizes);
        detail::close_round(r, Mode::fedavg, round, loss, r.ledger);
    }
    return r;
}

// Sequential split learning: one trunk relayed through the server from
// client to client in fixed order, heads on the server.
inline TrainResult run_split(const std::vector<data::ClientDataset>& clients, const RoundConfig& cfg) {
    cfg.validate();
    const auto trainable = detail::trainable_clients(clients);
    TrainResult r = detail::make_result(clients);
    const auto init = initial_model(detail::input_dim_of(clients), cfg.seed);
    const std::uint64_t trunk_count = nn::parameter_count(init.trunk);

    ServerState server{init.heads, nn::AdamState::for_params(init.heads, {.learning_rate = cfg.lr_server}),
                       std::nullopt, {}};
    std::vector<ClientState> states;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        states.push_back({clients[k].client_id, k, &clients[k].train, {},
                          std::nullopt, nn::AdamState::for_params(init.trunk, {.learning_rate = cfg.lr_client}),
                          std::nullopt});
    }
    nn::TrunkParams relay = init.trunk;  // the trunk in transit between clients
    for (int round = 0; round < cfg.rounds; ++round) {
        detail::LossMeter loss;
        for (auto k : detail::participants(trainable, cfg, round)) {
            auto& c = states[k];
            server.ledger.record(round, Direction::down, PayloadKind::weights, c.client_id, trunk_count);
            c.trunk = std::move(relay);
            detail::split_local_epochs(c, server, cfg, round, loss);
            relay = std::move(c.trunk);
            server.ledger.record(round, Direction::up, PayloadKind::weights, c.client_id, trunk_count);
        }
        detail::close_round(r, Mode::split, round, loss, server.ledger);
    }
    r.model.trunk = std::move(relay);
    r.model.heads = std::move(server.heads);
    r.ledger = std::move(server.ledger);
    return r;
}

// Hybrid FL-SL: broadcast the shared trunk, split-train each client against
// the server heads (serialized in client order), FedAvg the returned trunks.
// Adapters stay on the clients and are never priced in the ledger.
inline TrainResult run_hybrid(const std::vector<data::ClientDataset>& clients, const RoundConfig& cfg) {
    cfg.validate();
    const auto trainable = detail::trainable_clients(clients);
    TrainResult r = detail::make_result(clients);
    const auto init = initial_model(detail::input_dim_of(clients), cfg.seed);
    const std::uint64_t trunk_count = nn::parameter_count(init.trunk);

    ServerState server{init.heads, nn::AdamState::for_params(init.heads, {.learning_rate = cfg.lr_server}),
                       init.trunk, {}};
    std::vector<ClientState> states;
    for (std::size_t k = 0; k < clients.size(); ++k) {
        ClientState c{clients[k].client_id, k, &clients[k].train, {}, std::nullopt,
                      nn::AdamState::for_params(init.trunk, {.learning_rate = cfg.lr_client}), std::nullopt};
        if (cfg.personalization) {
            Rng arng(derive_seed(cfg.seed, Stream::adapter_init, {k}));
            c.adapter = AdapterParams::init(arng);
            c.adapter_opt = nn::AdamState::for_params(*c.adapter, {.learning_rate = cfg.lr_client});
        }
        states.push_back(std::move(c));
    }

    for (int round = 0; round < cfg.rounds; ++round) {
        detail::LossMeter loss;
        std::vector<nn::TrunkParams> trunks;
        std::vector<std::size_t> sizes;
        for (auto k : detail::participants(trainable, cfg, round)) {
            auto& c = states[k];
            server.ledger.record(round, Direction::down, PayloadKind::weights, c.client_id, trunk_count);
            c.trunk = *server.global_trunk;
            detail::split_local_epochs(c, server, cfg, round, loss);
            server.ledger.record(round, Direction::up, PayloadKind::weights, c.client_id,
                                 nn::parameter_count(c.trunk));
            trunks.push_back(c.trunk);
            sizes.push_back(c.train->size());
        }
        server.global_trunk = fedavg_aggregate(trunks, sizes);
        detail::close_round(r, Mode::hybrid, round, loss, server.ledger);
    }
    r.model.trunk = std::move(*server.global_trunk);
    r.model.heads = std::move(server.heads);
    for (std::size_t k = 0; k < states.size(); ++k) r.adapters[k] = std::move(states[k].adapter);
    r.ledger = std::move(server.ledger);
    return r;
}

inline TrainResult train(const std::vector<data::ClientDataset>& clients, const RoundConfig& cfg) {
    switch (cfg.mode) {
        case Mode::centralized: return run_centralized(clients, cfg);
        case Mode::fedavg: return run_fedavg(clients, cfg);
        case Mode::split: return run_split(clients, cfg);
        case Mode::hybrid: return run_hybrid(clients, cfg);
    }
    throw ValidationError("unknown mode");
}

}  // namespace hfsl::collab
