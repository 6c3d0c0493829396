#pragma once

#include <vector>

#include "hfsl/data/partition.hpp"
#include "hfsl/data/preprocess.hpp"
#include "hfsl/data/split.hpp"
#include "hfsl/data/synthetic.hpp"

namespace fixture {

struct Clients {
    hfsl::data::SyntheticData data;
    hfsl::data::SplitIndices split;
    std::vector<hfsl::data::ClientDataset> clients;
};

// Synthetic data already split, standardized on train rows and partitioned.
inline Clients make_clients(std::size_t n_per_client, std::size_t k, std::size_t d, std::uint64_t seed,
                            double effect_scale = 1.5, double shift = 0.5, double propensity_strength = 1.0) {
    using namespace hfsl;
    Rng rng(seed);
    auto spec = data::SyntheticSpec::with_random_weights(n_per_client, k, d, shift, effect_scale,
                                                         propensity_strength, rng);
    Clients c;
    c.data = data::generate_synthetic(spec, rng);
    c.split = data::stratified_split(c.data.table, {}, rng);
    const auto stats = data::fit_preprocess(c.data.table, c.split.train);
    const auto x = data::apply_preprocess(stats, c.data.table, data::all_rows(c.data.table));
    c.clients = data::partition_clients(c.data.table, x, c.split);
    return c;
}

}  // namespace fixture
