#include "rtraj/attack.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "rtraj/losses.hpp"
#include "support/gradcheck.hpp"
#include "support/test_models.hpp"

using namespace rtraj;
using rtraj::testing::gradcheck;
using rtraj::testing::random_scene;
using rtraj::testing::tiny_config;

namespace {

std::uint64_t param_checksum(const GeneratorParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, t] : p.named_params()) {
        for (double v : t.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            h = (h ^ bits) * 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace

TEST(MatchingError, NonNegativeAndDifferentiable) {
    Rng rng(1);
    const ModelConfig cfg = tiny_config();
    GeneratorParams g_phi = GeneratorParams::init(cfg.reversed(), rng);
    Rng data_rng(2);
    const SceneSample s = random_scene(data_rng, 2, 3, 3);
    Rng noise(3);
    const Tensor z({2, cfg.noise_dim}, noise.normal_vec(2 * cfg.noise_dim));

    Tensor pred({3 * 2, 2}, noise.normal_vec(12));
    const double e = matching_error(s, pred, g_phi, z).item();
    EXPECT_GE(e, 0.0);

    const auto res = gradcheck([&] { return matching_error(s, pred, g_phi, z); }, {pred});
    EXPECT_LT(res.max_rel_err, 1e-4);
}

TEST(MatchingError, ZeroWhenReconstructionIsExact) {
    // Identity toy: G(Y~) == Y~, X == Y~ -> E = 0.
    const MatchFn identity_vs = [](const Tensor& leaf) {
        return l2_norm(sub(leaf, Tensor({1, 2}, {0.7, -0.3})));
    };
    Tensor at({1, 2}, {0.7, -0.3});
    at.set_requires_grad(true);
    EXPECT_DOUBLE_EQ(identity_vs(at).item(), 0.0);
}

TEST(AttackStep, OneDimensionalToyDescends) {
    // G = identity, X = 0: E(y) = |y|, grad = sign(y); with eps = -0.05 the
    // iterate moves 1 -> 0.95.
    const MatchFn match = [](const Tensor& leaf) { return l2_norm(leaf); };
    const AttackStep step = attack_step(match, {1}, {1.0}, -0.05);
    EXPECT_TRUE(step.grad_finite);
    EXPECT_DOUBLE_EQ(step.error, 1.0);
    ASSERT_EQ(step.next.size(), 1u);
    EXPECT_DOUBLE_EQ(step.next[0], 0.95);
}

TEST(AttackStep, ZeroGradientIsFixedPoint) {
    // The L2 subgradient at the origin is zero, so y = 0 stays put.
    const MatchFn match = [](const Tensor& leaf) { return l2_norm(leaf); };
    const AttackStep step = attack_step(match, {2}, {0.0, 0.0}, -0.05);
    EXPECT_DOUBLE_EQ(step.next[0], 0.0);
    EXPECT_DOUBLE_EQ(step.next[1], 0.0);
}

TEST(ExpAverage, SingleIterateIsIdentity) {
    const auto out = exp_average({{3.5, -1.0}}, 0.1);
    EXPECT_DOUBLE_EQ(out[0], 3.5);
    EXPECT_DOUBLE_EQ(out[1], -1.0);
}

TEST(ExpAverage, AlphaZeroIsPlainMean) {
    const auto out = exp_average({{1.0}, {2.0}, {6.0}}, 0.0);
    EXPECT_NEAR(out[0], 3.0, 1e-12);
}

TEST(ExpAverage, ScalarExampleValue) {
    const auto out = exp_average({{1.0}, {2.0}, {3.0}}, 0.1);
    const double expected = (std::exp(0.1) * 1 + std::exp(0.2) * 2 + std::exp(0.3) * 3) /
                            (std::exp(0.1) + std::exp(0.2) + std::exp(0.3));
    EXPECT_NEAR(out[0], expected, 1e-12);
    EXPECT_NEAR(out[0], 2.0665, 1e-4);
}

TEST(ExpAverage, StaysInCoordinatewiseHull) {
    Rng rng(5);
    for (int round = 0; round < 100; ++round) {
        std::vector<std::vector<double>> iterates;
        const std::size_t m = 1 + rng.below(6);
        for (std::size_t k = 0; k < m; ++k) iterates.push_back(rng.normal_vec(4));
        const double alpha = rng.uniform(-1.0, 1.0);
        const auto avg = exp_average(iterates, alpha);
        for (std::size_t i = 0; i < 4; ++i) {
            double lo = 1e18, hi = -1e18;
            for (const auto& it : iterates) {
                lo = std::min(lo, it[i]);
                hi = std::max(hi, it[i]);
            }
            EXPECT_GE(avg[i], lo - 1e-12);
            EXPECT_LE(avg[i], hi + 1e-12);
        }
    }
}

TEST(ExpAverage, EmptyRejected) {
    EXPECT_THROW(exp_average({}, 0.1), ValidationError);
}

TEST(RunAttack, BookkeepingHasIterationsPlusOneEntries) {
    const MatchFn match = [](const Tensor& leaf) { return l2_norm(leaf); };
    AttackConfig cfg;
    cfg.iterations = 7;
    cfg.epsilon = -0.05;
    const AttackState st = run_attack(match, {2}, {1.0, 1.0}, cfg);
    EXPECT_EQ(st.iterates.size(), 8u);
    EXPECT_EQ(st.errors.size(), 8u);
    EXPECT_FALSE(st.truncated);
    // Descending epsilon on a convex toy: E strictly decreases.
    for (std::size_t m = 1; m < st.errors.size(); ++m) {
        EXPECT_LT(st.errors[m], st.errors[m - 1]);
    }
}

TEST(RunAttack, NanGradientTruncatesAndAverages) {
    int calls = 0;
    const MatchFn match = [&calls](const Tensor& leaf) {
        ++calls;
        const double factor = calls == 3 ? std::nan("") : 1.0;
        return scale(l2_norm(leaf), factor);
    };
    AttackConfig cfg;
    cfg.iterations = 10;
    cfg.epsilon = -0.05;
    const AttackState st = run_attack(match, {1}, {1.0}, cfg);
    EXPECT_TRUE(st.truncated);
    EXPECT_EQ(st.iterates.size(), 3u);  // y0, y1, y2; NaN hit while computing y3
    EXPECT_EQ(st.errors.size(), 3u);
    const auto manual = exp_average({st.iterates[1], st.iterates[2]}, cfg.alpha);
    EXPECT_DOUBLE_EQ(st.refined[0], manual[0]);
}

TEST(MatchedPredict, ZeroStepRecoversRawPrediction) {
    Rng rng(6);
    const ModelConfig cfg = tiny_config();
    GeneratorParams f = GeneratorParams::init(cfg, rng);
    GeneratorParams g = GeneratorParams::init(cfg.reversed(), rng);
    Rng data_rng(7);
    const SceneSample s = random_scene(data_rng, 2, 3, 3);

    AttackConfig ac;
    ac.iterations = 1;
    ac.epsilon = 0.0;
    Rng noise(8);
    const MatchedPrediction mp = matched_predict(s, f, g, ac, noise);
    ASSERT_EQ(mp.state.iterates.size(), 2u);
    // eps = 0: y1 == y0, and the average of the single iterate is y0 itself.
    EXPECT_EQ(mp.state.refined, mp.state.iterates.front());
}

TEST(MatchedPredict, NetworkWeightsUntouched) {
    Rng rng(9);
    const ModelConfig cfg = tiny_config();
    GeneratorParams f = GeneratorParams::init(cfg, rng);
    GeneratorParams g = GeneratorParams::init(cfg.reversed(), rng);
    Rng data_rng(10);
    const SceneSample s = random_scene(data_rng, 3, 3, 3);

    const auto f_sum = param_checksum(f);
    const auto g_sum = param_checksum(g);
    AttackConfig ac;  // defaults: 20 iterations, eps -0.05, alpha 0.1
    Rng noise(11);
    const MatchedPrediction mp = matched_predict(s, f, g, ac, noise);
    EXPECT_EQ(param_checksum(f), f_sum);
    EXPECT_EQ(param_checksum(g), g_sum);
    EXPECT_EQ(mp.state.iterates.size(), ac.iterations + 1);
    EXPECT_EQ(mp.state.errors.size(), ac.iterations + 1);
    EXPECT_EQ(mp.refined.size(), s.agents());
    EXPECT_EQ(mp.refined[0].size(), cfg.out_steps);
    for (const auto& track : mp.refined) {
        for (const auto& pt : track) EXPECT_TRUE(pt.finite());
    }
}

TEST(AttackConfig, Validation) {
    AttackConfig cfg;
    cfg.iterations = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.alpha = std::nan("");
    EXPECT_THROW(cfg.validate(), ValidationError);
}
