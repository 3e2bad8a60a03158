#pragma once

#include <cstdint>

#include "rtraj/data.hpp"

namespace rtraj {

/// Synthetic scene generator: agents feel an attraction toward a personal
/// goal plus exponential pairwise repulsion, integrated with substeps and
/// sampled every kTimestep into (t_obs + t_pred)-step windows. Deterministic
/// given the seed.
struct SocialForceConfig {
    std::size_t n_scenes = 500;
    std::size_t agents_per_scene = 4;
    std::uint64_t seed = 1;
    double arena_size = 12.0;  // spawn circle diameter, meters

    double goal_gain = 1.0;          // relaxation toward the desired velocity
    double repulsion_strength = 2.0;
    double repulsion_range = 0.5;    // meters
    double max_speed = 2.0;          // hard per-step speed cap, m/s
    double desired_speed_min = 0.9;
    double desired_speed_max = 1.4;

    std::size_t t_obs = kObservedSteps;
    std::size_t t_pred = kPredictedSteps;
    std::size_t substeps = 8;   // integration substeps per sampled step
    std::size_t context_dim = 0;  // >0 emits a synthetic per-scene feature vector
};

/// Validates the config (agents in [1, kMaxAgents], positive gains/ranges)
/// and synthesizes n_scenes one-window samples.
Dataset generate_social_force(const SocialForceConfig& cfg);

}  // namespace rtraj
