#include <cmath>

#include <gtest/gtest.h>

#include "hfsl/nn/adam.hpp"
#include "hfsl/nn/backprop.hpp"
#include "hfsl/nn/logistic.hpp"
#include "support/oracles.hpp"

using namespace hfsl;
using namespace hfsl::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (auto& v : m.values()) v = rng.normal();
    return m;
}

std::vector<int> random_bits(std::size_t n, Rng& rng) {
    std::vector<int> v(n);
    for (auto& b : v) b = rng.bernoulli(0.5) ? 1 : 0;
    return v;
}

}  // namespace

TEST(Matrix, RowsAndSelection) {
    auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
    EXPECT_EQ(m.rows(), 3u);
    EXPECT_EQ(m(2, 1), 6.0);
    std::vector<std::size_t> idx{2, 0};
    auto s = m.select_rows(idx);
    EXPECT_EQ(s, Matrix::from_rows({{5, 6}, {1, 2}}));
    EXPECT_EQ(Matrix::vstack(s, m).rows(), 5u);
    EXPECT_THROW(Matrix::vstack(s, Matrix(1, 3)), DimensionError);
}

TEST(Loss, SigmoidIsStableAtExtremes) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
    EXPECT_LT(sigmoid(800.0), 1.0);
    EXPECT_NEAR(bce_with_logit(1, 0.0), std::log(2.0), 1e-15);
    EXPECT_TRUE(std::isfinite(bce_with_logit(0, 800.0)));
}

TEST(Loss, ClampedProbabilityLossIsFinite) {
    std::vector<int> y{1, 0};
    std::vector<double> p{0.0, 1.0};
    const double l = bce_loss(y, p);
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_NEAR(l, -std::log(kProbClamp), 1e-9);
}

TEST(Forward, MatchesScalarOracle) {
    Rng rng(3);
    auto trunk = TrunkParams::glorot(5, rng);
    auto heads = Heads::glorot(rng);
    auto x = random_matrix(7, 5, rng);
    auto t = random_bits(7, rng), y = random_bits(7, rng);
    EXPECT_NEAR(factual_loss(trunk, heads, x, t, y), oracle::model_loss(trunk, heads, x, t, y), 1e-12);
}

TEST(Forward, RejectsWrongWidthAndEmptyBatch) {
    Rng rng(1);
    auto trunk = TrunkParams::glorot(4, rng);
    EXPECT_THROW(forward_trunk(trunk, Matrix(2, 3)), DimensionError);
    EXPECT_THROW(forward_trunk(trunk, Matrix(0, 4)), DimensionError);
}

TEST(Backprop, MatchesFiniteDifferences) {
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t d = 2 + rep % 4, b = 1 + rep;
        auto trunk = TrunkParams::glorot(d, rng);
        auto heads = Heads::glorot(rng);
        auto x = random_matrix(b, d, rng);
        auto t = random_bits(b, rng), y = random_bits(b, rng);
        const auto g = backprop(trunk, heads, forward_trunk(trunk, x), t, y);
        auto loss = [&](oracle::Pattern* p) { return oracle::model_loss(trunk, heads, x, t, y, p); };
        auto targets = trunk.tensors();
        for (auto s : heads.tensors()) targets.push_back(s);
        const auto fd = oracle::central_differences(targets, loss, 1e-5);
        std::vector<double> analytic = flatten(g.trunk);
        for (double v : flatten(g.heads)) analytic.push_back(v);
        ASSERT_EQ(analytic.size(), fd.numeric.size());
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            if (std::isnan(fd.numeric[i])) continue;
            EXPECT_LT(oracle::relative_error(analytic[i], fd.numeric[i]), 1e-4) << "coordinate " << i;
        }
        EXPECT_NEAR(g.loss, loss(nullptr), 1e-12);
    }
}

TEST(Backprop, StaleCacheIsRejected) {
    Rng rng(5);
    auto trunk = TrunkParams::glorot(3, rng);
    auto pass = forward_trunk(trunk, random_matrix(4, 3, rng));
    trunk.cut.bias[0] += 1e-3;
    EXPECT_THROW(trunk_backward(trunk, pass, Matrix(4, kCutWidth)), ContractError);
}

TEST(Backprop, NonBinaryLabelsRejected) {
    Rng rng(5);
    auto trunk = TrunkParams::glorot(3, rng);
    auto heads = Heads::glorot(rng);
    auto pass = forward_trunk(trunk, random_matrix(2, 3, rng));
    std::vector<int> t{0, 2}, y{0, 1};
    EXPECT_THROW(backprop(trunk, heads, pass, t, y), ValidationError);
}

TEST(Backprop, EachSampleOnlyTouchesItsOwnHead) {
    Rng rng(8);
    auto trunk = TrunkParams::glorot(3, rng);
    auto heads = Heads::glorot(rng);
    auto x = random_matrix(6, 3, rng);
    std::vector<int> t(6, 1), y{1, 0, 1, 0, 1, 1};
    const auto g = backprop(trunk, heads, forward_trunk(trunk, x), t, y);
    for (double v : flatten(g.heads.control)) EXPECT_EQ(v, 0.0);
}

TEST(Adam, FirstStepMatchesClosedForm) {
    HeadParams p;
    HeadParams g;
    for (std::size_t j = 0; j < kCutWidth; ++j) {
        p.weights[j] = 0.1 * static_cast<double>(j);
        g.weights[j] = 0.5 - 0.03 * static_cast<double>(j);
    }
    g.bias = -2.0;
    auto state = AdamState::for_params(p);
    const HeadParams before = p;
    adam_step(p, g, state);
    // After one step m_hat = g and v_hat = g^2.
    for (std::size_t j = 0; j < kCutWidth; ++j) {
        const double gj = g.weights[j];
        const double expected = before.weights[j] - 1e-3 * gj / (std::abs(gj) + 1e-8);
        EXPECT_NEAR(p.weights[j], expected, 1e-15);
    }
    EXPECT_NEAR(p.bias, 1e-3 * 2.0 / (2.0 + 1e-8), 1e-15);
}

TEST(Adam, SecondStepMatchesRecurrence) {
    HeadParams p, g1, g2;
    g1.bias = 1.0;
    g2.bias = -0.5;
    auto state = AdamState::for_params(p);
    adam_step(p, g1, state);
    adam_step(p, g2, state);
    const double m = 0.9 * 0.1 * 1.0 + 0.1 * -0.5;
    const double v = 0.999 * 0.001 * 1.0 + 0.001 * 0.25;
    const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
    const double first = -1e-3 * 1.0 / (1.0 + 1e-8);
    EXPECT_NEAR(p.bias, first - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
}

TEST(Adam, ShapeMismatchThrows) {
    Rng rng(2);
    auto a = TrunkParams::glorot(3, rng);
    auto b = TrunkParams::glorot(4, rng);
    auto state = AdamState::for_params(a);
    EXPECT_THROW(adam_step(a, b, state), DimensionError);
    auto other = AdamState::for_params(HeadParams{});
    auto g = zeros_like(a);
    EXPECT_THROW(adam_step(a, g, other), DimensionError);
}

TEST(Params, ChecksumAndFlatten) {
    Rng rng(4);
    auto a = TrunkParams::glorot(3, rng);
    auto b = a;
    EXPECT_EQ(checksum(a), checksum(b));
    EXPECT_TRUE(bit_identical(a, b));
    b.hidden.weights(0, 0) = std::nextafter(b.hidden.weights(0, 0), 1.0);
    EXPECT_NE(checksum(a), checksum(b));
    EXPECT_GT(max_abs_diff(a, b), 0.0);
    EXPECT_EQ(flatten(a).size(), parameter_count(a));
    EXPECT_EQ(parameter_count(a), 3u * 64 + 64 + 64 * 32 + 32);
}

TEST(Glorot, WithinLimits) {
    Rng rng(9);
    auto t = TrunkParams::glorot(10, rng);
    const double limit = std::sqrt(6.0 / (10 + 64));
    for (double v : t.hidden.weights.values()) EXPECT_LE(std::abs(v), limit);
    for (double v : t.hidden.bias) EXPECT_EQ(v, 0.0);
}

TEST(Logistic, GradientVanishesAtSolution) {
    Rng rng(21);
    const std::size_t n = 300, d = 3;
    auto x = random_matrix(n, d, rng);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.bernoulli(sigmoid(1.5 * x(i, 0) - x(i, 2))) ? 1 : 0;
    LogisticConfig cfg;
    const auto m = train_logistic(x, y, cfg);
    EXPECT_TRUE(m.converged);
    // Independent gradient of mean BCE + (l2/2)|w|^2.
    std::vector<double> gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = m.bias;
        for (std::size_t j = 0; j < d; ++j) z += m.weights[j] * x(i, j);
        const double r = 1.0 / (1.0 + std::exp(-z)) - y[i];
        for (std::size_t j = 0; j < d; ++j) gw[j] += r * x(i, j) / n;
        gb += r / n;
    }
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(gw[j] + cfg.l2 * m.weights[j], 0.0, 1e-5);
    EXPECT_NEAR(gb, 0.0, 1e-5);
    EXPECT_GT(m.weights[0], 0.5);
    EXPECT_LT(m.weights[2], -0.3);
}

TEST(Logistic, SingleClassThrows) {
    Matrix x(4, 2, 1.0);
    std::vector<int> y(4, 1);
    EXPECT_THROW(train_logistic(x, y), DegenerateLabelsError);
}

TEST(Forward, ZeroWeightsGiveZeroRepresentation) {
    TrunkParams trunk(3);
    Rng rng(2);
    const auto pass = forward_trunk(trunk, random_matrix(5, 3, rng));
    for (double v : pass.z.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, ReluZeroesNegativeHiddenUnits) {
    TrunkParams trunk(2);
    trunk.hidden.weights(0, 0) = 1.0;
    trunk.hidden.weights(1, 1) = 1.0;
    const auto pass = forward_trunk(trunk, Matrix::from_rows({{-1.0, 2.0}}));
    EXPECT_EQ(pass.hidden(0, 0), 0.0);
    EXPECT_EQ(pass.hidden(0, 1), 2.0);
}

TEST(Forward, HeadIsAffine) {
    HeadParams h;
    h.bias = 0.3;
    Rng rng(4);
    for (double v : forward_head(h, random_matrix(3, kCutWidth, rng))) EXPECT_EQ(v, 0.3);
    h.weights[5] = -1.25;
    Matrix onehot(1, kCutWidth);
    onehot(0, 5) = 1.0;
    EXPECT_DOUBLE_EQ(forward_head(h, onehot)[0], -1.25 + 0.3);
    EXPECT_THROW(forward_head(h, Matrix(1, 31)), DimensionError);
}

TEST(Loss, SigmoidSymmetryAndBounds) {
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-30.0, 30.0);
        EXPECT_NEAR(sigmoid(-x), 1.0 - sigmoid(x), 1e-15);
        EXPECT_GT(sigmoid(x), 0.0);
        EXPECT_LT(sigmoid(x), 1.0);
    }
    // 1 - 1e-200 rounds to 1 in doubles; the closest representable check is
    // that the value stays below 1 and within one ulp of it.
    EXPECT_LT(sigmoid(500.0), 1.0);
    EXPECT_EQ(sigmoid(500.0), std::nextafter(1.0, 0.0));
    EXPECT_GT(sigmoid(-500.0), 0.0);
    EXPECT_GT(sigmoid(-1000.0), 0.0);
}

TEST(Loss, HandValues) {
    std::vector<int> one{1}, zero{0};
    std::vector<double> half{0.5}, nearly{1.0 - kProbClamp};
    EXPECT_NEAR(bce_loss(one, half), 0.6931471805599453, 1e-15);
    EXPECT_NEAR(bce_loss(zero, half), 0.6931471805599453, 1e-15);
    EXPECT_NEAR(bce_loss(one, nearly), 0.0, 1e-6);
    EXPECT_GE(bce_loss(one, nearly), 0.0);
}

TEST(Backprop, ControlHeadDoesNotAffectAllTreatedLoss) {
    Rng rng(12);
    auto trunk = TrunkParams::glorot(3, rng);
    auto heads = Heads::glorot(rng);
    auto x = random_matrix(5, 3, rng);
    std::vector<int> t(5, 1), y{0, 1, 1, 0, 1};
    const double before = factual_loss(trunk, heads, x, t, y);
    heads.control.weights[0] += 3.0;
    heads.control.bias -= 1.0;
    EXPECT_EQ(factual_loss(trunk, heads, x, t, y), before);
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
    Rng rng(1);
    auto p = TrunkParams::glorot(2, rng);
    const auto before = p;
    auto state = AdamState::for_params(p);
    adam_step(p, zeros_like(p), state);
    EXPECT_TRUE(bit_identical(p, before));
    EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, Deterministic) {
    Rng r1(3), r2(3);
    auto a = TrunkParams::glorot(3, r1);
    auto b = TrunkParams::glorot(3, r2);
    auto g = TrunkParams::glorot(3, r1);
    auto sa = AdamState::for_params(a), sb = AdamState::for_params(b);
    for (int i = 0; i < 3; ++i) {
        adam_step(a, g, sa);
        adam_step(b, g, sb);
    }
    EXPECT_TRUE(bit_identical(a, b));
}

TEST(Logistic, BalancedFeatureFreeDataGivesZeroLogit) {
    Matrix x(10, 2);
    std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const auto m = train_logistic(x, y);
    EXPECT_NEAR(m.bias, 0.0, 1e-9);
}

TEST(Logistic, SeparableOneDimensional) {
    Matrix x(8, 1);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = i < 4 ? -1.0 - i : 1.0 + i;
        y[i] = i < 4 ? 0 : 1;
    }
    const auto m = train_logistic(x, y);
    EXPECT_GT(m.weights[0], 0.0);
    const auto p = m.predict_proba(x);
    for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(p[i] > 0.5, y[i] == 1);
        const double z = m.bias + m.weights[0] * x(i, 0);
        EXPECT_NEAR(p[i], 1.0 / (1.0 + std::exp(-z)), 1e-12);
    }
}
