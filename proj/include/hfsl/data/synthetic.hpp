#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "hfsl/core/rng.hpp"
#include "hfsl/data/table.hpp"
#include "hfsl/nn/loss.hpp"

namespace hfsl::data {

inline constexpr double kPropensityFloor = 0.02;
inline constexpr double kPropensityCeil = 0.98;

// Generator for non-IID clients with known treatment effects.
struct SyntheticSpec {
    std::size_t n_per_client = 1000;
    std::size_t clients = 3;
    std::size_t features = 8;
    double client_shift_scale = 0.5;  // scale of each client's feature mean shift
    std::vector<double> propensity_weights;
    std::vector<double> baseline_weights;
    std::vector<double> effect_weights;
    double effect_scale = 1.0;
    double missing_rate = 0.0;  // fraction of feature cells blanked after generation

    void validate() const {
        if (n_per_client == 0 || clients == 0 || features == 0) {
            throw ValidationError("synthetic: n_per_client, clients and features must be >= 1");
        }
        auto check = [&](const std::vector<double>& w, const char* name) {
            if (w.size() != features) {
                throw ValidationError(std::string("synthetic: ") + name + " must have one weight per feature");
            }
        };
        check(propensity_weights, "propensity_weights");
        check(baseline_weights, "baseline_weights");
        check(effect_weights, "effect_weights");
        if (client_shift_scale < 0.0) throw ValidationError("synthetic: client_shift_scale must be >= 0");
        if (missing_rate < 0.0 || missing_rate >= 1.0) throw ValidationError("synthetic: missing_rate in [0,1)");
    }

    // Weights ~ N(0, 1/d); propensity weights additionally scaled by
    // `propensity_strength` (0 gives a randomized trial).
    static SyntheticSpec with_random_weights(std::size_t n_per_client, std::size_t clients, std::size_t features,
                                             double client_shift_scale, double effect_scale,
                                             double propensity_strength, Rng& rng) {
        SyntheticSpec s;
        s.n_per_client = n_per_client;
        s.clients = clients;
        s.features = features;
        s.client_shift_scale = client_shift_scale;
        s.effect_scale = effect_scale;
        const double scale = 1.0 / std::sqrt(static_cast<double>(features));
        for (std::size_t j = 0; j < features; ++j) {
            s.baseline_weights.push_back(rng.normal() * scale);
            s.effect_weights.push_back(rng.normal() * scale);
            s.propensity_weights.push_back(rng.normal() * scale * propensity_strength);
        }
        return s;
    }
};

struct SyntheticData {
    DataTable table;
    std::vector<double> true_tau;         // mu1(x) - mu0(x)
    std::vector<double> true_propensity;  // e(x)
    std::vector<double> mu0;
    std::vector<double> mu1;
};

inline std::string synthetic_client_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%03zu", k);
    return buf;
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t d = spec.features;
    SyntheticData out;
    for (std::size_t j = 0; j < d; ++j) out.table.feature_names.push_back("x" + std::to_string(j));

    std::vector<double> x(d);
    for (std::size_t k = 0; k < spec.clients; ++k) {
        std::vector<double> shift(d);
        for (auto& s : shift) s = spec.client_shift_scale * rng.normal();
        const std::string name = synthetic_client_name(k);
        for (std::size_t i = 0; i < spec.n_per_client; ++i) {
            double ze = 0.0, zb = 0.0, zt = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                x[j] = shift[j] + rng.normal();
                ze += spec.propensity_weights[j] * x[j];
                zb += spec.baseline_weights[j] * x[j];
                zt += spec.effect_weights[j] * x[j];
            }
            const double e = kPropensityFloor + (kPropensityCeil - kPropensityFloor) * nn::sigmoid(ze);
            const double mu0 = nn::sigmoid(zb);
            const double mu1 = nn::sigmoid(zb + spec.effect_scale * zt);
            const int t = rng.bernoulli(e) ? 1 : 0;
            const int y = rng.bernoulli(t ? mu1 : mu0) ? 1 : 0;
            for (std::size_t j = 0; j < d; ++j) {
                const bool drop = spec.missing_rate > 0.0 && rng.bernoulli(spec.missing_rate);
                out.table.features.push_back(drop ? kMissing : x[j]);
            }
            out.table.treatment.push_back(t);
            out.table.outcome.push_back(y);
            out.table.client_id.push_back(name);
            out.true_tau.push_back(mu1 - mu0);
            out.true_propensity.push_back(e);
            out.mu0.push_back(mu0);
            out.mu1.push_back(mu1);
        }
    }
    return out;
}

}  // namespace hfsl::data
