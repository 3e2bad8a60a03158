#include "rtraj/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rtraj/random.hpp"
#include "support/oracles.hpp"

using namespace rtraj;

namespace {

Tracks shifted(const Tracks& t, Vec2 offset) {
    Tracks out = t;
    for (auto& track : out) {
        for (auto& p : track) p = p + offset;
    }
    return out;
}

Tracks random_tracks(Rng& rng, std::size_t agents, std::size_t steps, double span = 5.0) {
    Tracks out(agents);
    for (auto& track : out) {
        for (std::size_t t = 0; t < steps; ++t) {
            track.push_back({rng.uniform(-span, span), rng.uniform(-span, span)});
        }
    }
    return out;
}

}  // namespace

TEST(Ade, PerfectPredictionIsZero) {
    Rng rng(1);
    const Tracks t = random_tracks(rng, 3, 12);
    EXPECT_DOUBLE_EQ(ade(t, t), 0.0);
    EXPECT_DOUBLE_EQ(fde(t, t), 0.0);
}

TEST(Ade, ConstantOffsetGivesOffsetNorm) {
    Rng rng(2);
    const Tracks gt = random_tracks(rng, 2, 12);
    const Tracks pred = shifted(gt, {3.0, 4.0});
    EXPECT_NEAR(ade(pred, gt), 5.0, 1e-12);
    EXPECT_NEAR(fde(pred, gt), 5.0, 1e-12);
}

TEST(Ade, PerStepAveraging) {
    // 1 agent, 2 steps, distances 1 and 2 -> ADE 1.5.
    const Tracks gt{{{0, 0}, {0, 0}}};
    const Tracks pred{{{1, 0}, {0, 2}}};
    EXPECT_DOUBLE_EQ(ade(pred, gt), 1.5);
}

TEST(Fde, FinalStepOnly) {
    const Tracks gt{{{0, 0}, {0, 0}, {0, 0}}};
    const Tracks pred{{{0, 0}, {0, 0}, {0, 2}}};
    EXPECT_DOUBLE_EQ(fde(pred, gt), 2.0);
    EXPECT_DOUBLE_EQ(ade(pred, gt), 2.0 / 3.0);
}

TEST(Fde, AveragesOverAgents) {
    const Tracks gt{{{0, 0}}, {{0, 0}}};
    const Tracks pred{{{1, 0}}, {{3, 0}}};
    EXPECT_DOUBLE_EQ(fde(pred, gt), 2.0);
}

TEST(Fde, EqualsAdeForSingleStep) {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Tracks gt = random_tracks(rng, 1 + rng.below(4), 1);
        const Tracks pred = random_tracks(rng, gt.size(), 1);
        EXPECT_DOUBLE_EQ(ade(pred, gt), fde(pred, gt));
    }
}

TEST(Metrics, ShapeMismatchRejected) {
    const Tracks a{{{0, 0}}};
    const Tracks b{{{0, 0}}, {{0, 0}}};
    EXPECT_THROW(ade(a, b), ShapeError);
    EXPECT_THROW(fde(a, b), ShapeError);
}

TEST(BestOfK, KOneMatchesPlainMetrics) {
    Rng rng(4);
    const Tracks gt = random_tracks(rng, 2, 12);
    const Tracks pred = random_tracks(rng, 2, 12);
    const BestOfK r = best_of_k({pred}, gt);
    EXPECT_DOUBLE_EQ(r.ade, ade(pred, gt));
    EXPECT_DOUBLE_EQ(r.fde, fde(pred, gt));
}

TEST(BestOfK, PerfectSampleWins) {
    Rng rng(5);
    const Tracks gt = random_tracks(rng, 2, 12);
    const Tracks bad = shifted(gt, {2.0, 0.0});
    const BestOfK r = best_of_k({bad, gt, bad}, gt);
    EXPECT_DOUBLE_EQ(r.ade, 0.0);
    EXPECT_EQ(r.best_index, 1u);
}

TEST(BestOfK, NonIncreasingInK) {
    Rng rng(6);
    const Tracks gt = random_tracks(rng, 2, 12);
    std::vector<Tracks> preds;
    double prev = 1e18;
    for (int k = 0; k < 10; ++k) {
        preds.push_back(random_tracks(rng, 2, 12));
        const double cur = best_of_k(preds, gt).ade;
        EXPECT_LE(cur, prev + 1e-15);
        prev = cur;
    }
}

TEST(BestOfK, FdeFollowsAdeWinner) {
    // Sample 0 wins on ADE but has the worse FDE; the report must use the
    // ADE winner's FDE.
    const Tracks gt{{{0, 0}, {0, 0}}};
    const Tracks a{{{0.1, 0}, {0, 1.0}}};   // ADE 0.55, FDE 1.0
    const Tracks b{{{2.0, 0}, {0, 0.5}}};   // ADE 1.25, FDE 0.5
    const BestOfK r = best_of_k({a, b}, gt);
    EXPECT_EQ(r.best_index, 0u);
    EXPECT_DOUBLE_EQ(r.fde, 1.0);
}

TEST(BestOfK, EmptyRejected) {
    EXPECT_THROW(best_of_k({}, Tracks{{{0, 0}}}), ValidationError);
}

TEST(Collision, PairBelowThresholdCountsBothAgents) {
    const Tracks t{{{0, 0}}, {{0.05, 0}}};
    EXPECT_DOUBLE_EQ(collision_pct(t), 100.0);
}

TEST(Collision, ExactThresholdIsNotACollision) {
    const Tracks t{{{0, 0}}, {{0.1, 0}}};
    EXPECT_DOUBLE_EQ(collision_pct(t), 0.0);
    const Tracks just_under{{{0, 0}}, {{0.0999999, 0}}};
    EXPECT_DOUBLE_EQ(collision_pct(just_under), 100.0);
}

TEST(Collision, SingleAgentHasNoPairs) {
    const Tracks t{{{0, 0}, {1, 1}}};
    EXPECT_DOUBLE_EQ(collision_pct(t), 0.0);
}

TEST(Collision, SymmetricInAgentOrder) {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        Tracks t = random_tracks(rng, 4, 6, 0.3);
        const double base = collision_pct(t);
        std::swap(t[0], t[3]);
        std::swap(t[1], t[2]);
        EXPECT_DOUBLE_EQ(collision_pct(t), base);
    }
}

TEST(Collision, MixedFrames) {
    // Frame 0: both agents collide (100%); frame 1: apart (0%) -> 50%.
    const Tracks t{{{0, 0}, {0, 0}}, {{0.05, 0}, {5, 5}}};
    EXPECT_DOUBLE_EQ(collision_pct(t), 50.0);
}

TEST(Metrics, TranslationAndRotationInvariance) {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const Tracks gt = random_tracks(rng, 3, 12);
        const Tracks pred = random_tracks(rng, 3, 12);
        const double base_ade = ade(pred, gt);
        const double base_fde = fde(pred, gt);

        const Vec2 off{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        EXPECT_NEAR(ade(shifted(pred, off), shifted(gt, off)), base_ade, 1e-9);
        EXPECT_NEAR(fde(shifted(pred, off), shifted(gt, off)), base_fde, 1e-9);

        const double th = rng.uniform(0, 2 * M_PI);
        auto rot = [th](const Tracks& t) {
            Tracks out = t;
            for (auto& track : out) {
                for (auto& p : track) {
                    p = {p.x * std::cos(th) - p.y * std::sin(th),
                         p.x * std::sin(th) + p.y * std::cos(th)};
                }
            }
            return out;
        };
        EXPECT_NEAR(ade(rot(pred), rot(gt)), base_ade, 1e-9);
        EXPECT_NEAR(fde(rot(pred), rot(gt)), base_fde, 1e-9);
    }
}

TEST(Metrics, MatchesBruteForceOracleOnRandomCases) {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t agents = 1 + rng.below(5);
        const std::size_t steps = 1 + rng.below(12);
        const Tracks gt = random_tracks(rng, agents, steps);
        const Tracks pred = random_tracks(rng, agents, steps);
        EXPECT_NEAR(ade(pred, gt), rtraj::testing::naive_ade(pred, gt), 1e-12);
        EXPECT_NEAR(fde(pred, gt), rtraj::testing::naive_fde(pred, gt), 1e-12);
        const Tracks close = random_tracks(rng, agents, steps, 0.15);
        EXPECT_NEAR(collision_pct(close, 0.1), rtraj::testing::naive_collision_pct(close, 0.1), 1e-12);
    }
}

TEST(EvalReport, CsvAndTextSerialization) {
    EvalReport rep;
    rep.ade = 0.5;
    rep.fde = 1.25;
    rep.collision_pct = 3.5;
    rep.k = 20;
    rep.scenes = 2;
    rep.per_scene = {{0, 0.4, 1.0, 0.0}, {1, 0.6, 1.5, 7.0}};

    const auto csv = (std::filesystem::temp_directory_path() / "rtraj_report.csv").string();
    rep.write_csv(csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "scene,ade,fde,collision_pct");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);  // two scenes + the "all" row
    std::remove(csv.c_str());

    EXPECT_NE(rep.to_text().find("ade: 0.5"), std::string::npos);
    EXPECT_NE(rep.to_text().find("k: 20"), std::string::npos);
}
