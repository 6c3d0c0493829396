#include <cmath>

#include <gtest/gtest.h>

#include "hfsl/eval/metrics.hpp"
#include "hfsl/uplift/propensity.hpp"
#include "support/fixtures.hpp"

using namespace hfsl;
using namespace hfsl::uplift;

namespace {

nn::Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    nn::Matrix m(r, c);
    for (auto& v : m.values()) v = rng.normal();
    return m;
}

}  // namespace

TEST(PredictMu, IdenticalHeadsGiveZeroUplift) {
    Rng rng(1);
    auto m = TwoHeadModel::init(4, rng);
    m.heads.control = m.heads.treated;
    const auto mu = predict_mu(m, random_matrix(10, 4, rng));
    const auto tau = uplift_score(mu.treated, mu.control);
    for (double v : tau) EXPECT_EQ(v, 0.0);
}

TEST(PredictMu, ZeroTrunkGivesSigmoidOfBias) {
    Rng rng(2);
    TwoHeadModel m;
    m.trunk = nn::TrunkParams(3);
    m.heads = nn::Heads::glorot(rng);
    m.heads.treated.bias = 0.4;
    m.heads.control.bias = -1.1;
    const auto mu = predict_mu(m, random_matrix(5, 3, rng));
    for (double v : mu.treated) EXPECT_DOUBLE_EQ(v, nn::sigmoid(0.4));
    for (double v : mu.control) EXPECT_DOUBLE_EQ(v, nn::sigmoid(-1.1));
}

TEST(PredictMu, ComposesForwardPasses) {
    Rng rng(3);
    auto m = TwoHeadModel::init(5, rng);
    const auto x = random_matrix(7, 5, rng);
    const auto mu = predict_mu(m, x);
    const auto z = nn::forward_trunk(m.trunk, x).z;
    const auto l1 = nn::forward_head(m.heads.treated, z);
    const auto l0 = nn::forward_head(m.heads.control, z);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_NEAR(mu.treated[i], 1.0 / (1.0 + std::exp(-l1[i])), 1e-12);
        EXPECT_NEAR(mu.control[i], 1.0 / (1.0 + std::exp(-l0[i])), 1e-12);
        EXPECT_GE(mu.treated[i] - mu.control[i], -1.0);
        EXPECT_LE(mu.treated[i] - mu.control[i], 1.0);
    }
    EXPECT_THROW(predict_mu(m, random_matrix(2, 4, rng)), DimensionError);
}

TEST(PredictMu, AdapterAppliedBeforeHeads) {
    Rng rng(4);
    auto m = TwoHeadModel::init(3, rng);
    const auto x = random_matrix(4, 3, rng);
    const auto plain = predict_mu(m, x);
    m.adapter = collab::AdapterParams::init(rng);
    EXPECT_EQ(predict_mu(m, x).treated, plain.treated);  // zero outer layer: identity
    m.adapter->outer.bias[0] = 0.5;
    EXPECT_NE(predict_mu(m, x).treated, plain.treated);
}

TEST(FactualProb, RoutesByTreatment) {
    std::vector<double> mu1{0.7, 0.7}, mu0{0.4, 0.4};
    std::vector<int> t{1, 0};
    EXPECT_EQ(factual_prob(mu1, mu0, t), (std::vector<double>{0.7, 0.4}));
    std::vector<double> other0{0.9, 0.4};
    EXPECT_EQ(factual_prob(mu1, other0, t)[0], 0.7);
}

TEST(UpliftScore, ArithmeticAndAntisymmetry) {
    std::vector<double> a{0.9, 0.3}, b{0.2, 0.3};
    EXPECT_NEAR(uplift_score(a, b)[0], 0.7, 1e-15);
    EXPECT_EQ(uplift_score(a, b)[1], 0.0);
    const auto ab = uplift_score(a, b), ba = uplift_score(b, a);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(ab[i], -ba[i]);
}

TEST(DrPseudoEffect, HandValues) {
    std::vector<double> mu1{0.7, 0.7}, mu0{0.4, 0.4}, e{0.5, 0.5};
    std::vector<int> t{1, 0}, y{1, 0};
    const auto dr = dr_pseudo_effect(mu1, mu0, e, t, y);
    EXPECT_NEAR(dr[0], 0.9, 1e-12);
    EXPECT_NEAR(dr[1], 1.1, 1e-12);
}

TEST(DrPseudoEffect, ZeroResidualAndContract) {
    std::vector<double> mu1{1.0, 0.0}, mu0{0.0, 0.0}, e{0.3, 0.6};
    std::vector<int> t{1, 0}, y{1, 0};
    const auto dr = dr_pseudo_effect(mu1, mu0, e, t, y);
    EXPECT_EQ(dr[0], 1.0);
    EXPECT_EQ(dr[1], 0.0);
    std::vector<double> bad{1.0, 0.5};
    EXPECT_THROW(dr_pseudo_effect(mu1, mu0, bad, t, y), ContractError);
}

TEST(DrPseudoEffect, ConsistentWithTrueModels) {
    Rng rng(5);
    auto spec = data::SyntheticSpec::with_random_weights(10000, 1, 4, 0.0, 1.5, 1.0, rng);
    const auto d = data::generate_synthetic(spec, rng);
    const auto dr = dr_pseudo_effect(d.mu1, d.mu0, d.true_propensity, d.table.treatment, d.table.outcome);
    const auto ms = eval::mean_std(dr);
    double tau = 0;
    for (double v : d.true_tau) tau += v;
    tau /= static_cast<double>(d.true_tau.size());
    const double se = ms.std / std::sqrt(static_cast<double>(dr.size()));
    EXPECT_LE(std::abs(ms.mean - tau), 3 * se);
}

TEST(Propensity, RandomizedDataConcentratesAtTreatedFraction) {
    auto f = fixture::make_clients(3000, 1, 4, 6, 1.0, 0.0, 0.0);
    const auto& train = f.clients[0].train;
    const auto model = fit_propensity(train.x, train.t);
    double frac = 0;
    for (int t : train.t) frac += t;
    frac /= static_cast<double>(train.size());
    // Fitted coefficients only carry sampling noise, so predictions cluster
    // tightly; the tails still move a few points with extreme rows.
    double mad = 0.0, worst = 0.0;
    const auto e = model.predict(f.clients[0].test.x);
    for (double v : e) {
        mad += std::abs(v - frac);
        worst = std::max(worst, std::abs(v - frac));
    }
    EXPECT_LT(mad / static_cast<double>(e.size()), 0.03);
    EXPECT_LT(worst, 0.1);
}

TEST(Propensity, ConfoundedDataIsPredictable) {
    auto f = fixture::make_clients(4000, 1, 4, 7, 1.0, 0.0, 4.0);
    const auto& c = f.clients[0];
    const auto model = fit_propensity(c.train.x, c.train.t);
    EXPECT_GT(eval::auroc(model.predict(c.test.x), c.test.t), 0.75);
}

TEST(Propensity, ClampAndSingleArm) {
    nn::Matrix x(6, 1);
    std::vector<int> t{0, 0, 0, 1, 1, 1};
    for (int i = 0; i < 6; ++i) x(i, 0) = i < 3 ? -1.0 : 1.0;
    const auto model = fit_propensity(x, t);
    const auto p = model.predict(nn::Matrix::from_rows({{-1e6}, {1e6}}));
    EXPECT_EQ(p[0], kPropensityClamp);
    EXPECT_EQ(p[1], 1.0 - kPropensityClamp);
    std::vector<int> one_arm(6, 1);
    EXPECT_THROW(fit_propensity(x, one_arm), DegenerateTreatmentError);
}
