#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hfsl/core/rng.hpp"
#include "hfsl/nn/matrix.hpp"

namespace hfsl::collab {

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

// Per-row L2 clipping to clip_norm followed by N(0, noise_sigma^2) noise.
// clip_norm = +inf disables clipping.
struct DefenseConfig {
    double clip_norm = 1.0;
    double noise_sigma = 0.05;

    void validate() const {
        if (!(clip_norm > 0.0)) throw ValidationError("defense: clip_norm must be > 0");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
            throw ValidationError("defense: noise_sigma must be a finite value >= 0");
        }
    }

    bool is_identity() const { return std::isinf(clip_norm) && noise_sigma == 0.0; }
};

struct DefensePass {
    nn::Matrix out;
    std::vector<double> row_norm;  // pre-clip L2 norm of each row
    std::vector<bool> clipped;
    double clip_norm = kNoClip;
};

// Rows within the clip norm are left untouched and sigma == 0 draws no
// noise, so the all-off setting transmits exactly the input bits.
inline DefensePass defend(const nn::Matrix& z, const DefenseConfig& d, Rng& rng) {
    d.validate();
    DefensePass p{z, std::vector<double>(z.rows()), std::vector<bool>(z.rows(), false), d.clip_norm};
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = p.out.row(r);
        double ss = 0.0;
        for (double v : row) ss += v * v;
        const double norm = std::sqrt(ss);
        p.row_norm[r] = norm;
        if (norm > d.clip_norm) {
            const double scale = d.clip_norm / norm;
            for (double& v : row) v *= scale;
            p.clipped[r] = true;
        }
    }
    if (d.noise_sigma > 0.0) {
        for (double& v : p.out.values()) v += d.noise_sigma * rng.normal();
    }
    return p;
}

inline nn::Matrix apply_defense(const nn::Matrix& z, const DefenseConfig& d, Rng& rng) {
    return defend(z, d, rng).out;
}

// dL/dz from dL/d(transmitted). Exact through the clip scaling; the additive
// noise is treated as a constant.
inline nn::Matrix defense_backward(const DefensePass& pass, const nn::Matrix& z, const nn::Matrix& grad_out) {
    nn::Matrix g = grad_out;
    for (std::size_t r = 0; r < z.rows(); ++r) {
        if (!pass.clipped[r]) continue;
        const double norm = pass.row_norm[r];
        auto zr = z.row(r);
        auto gr = g.row(r);
        double dot = 0.0;
        for (std::size_t j = 0; j < zr.size(); ++j) dot += zr[j] * gr[j];
        const double s = pass.clip_norm / norm;
        const double k = dot / (norm * norm);
        for (std::size_t j = 0; j < zr.size(); ++j) gr[j] = s * (gr[j] - zr[j] * k);
    }
    return g;
}

}  // namespace hfsl::collab
