#include "rtraj/social_force.hpp"

#include <cmath>

#include "rtraj/random.hpp"

namespace rtraj {

namespace {

struct Agent {
    Vec2 pos;
    Vec2 vel;
    Vec2 desired_vel;  // fixed: desired speed toward a distant goal
};

void validate(const SocialForceConfig& cfg) {
    if (cfg.n_scenes == 0) throw ValidationError("social force: n_scenes must be >= 1");
    if (cfg.agents_per_scene == 0 || cfg.agents_per_scene > kMaxAgents) {
        throw ValidationError("social force: agents_per_scene must be in [1, " +
                              std::to_string(kMaxAgents) + "], got " +
                              std::to_string(cfg.agents_per_scene));
    }
    if (cfg.arena_size <= 0.0) throw ValidationError("social force: arena_size must be > 0");
    if (cfg.repulsion_range <= 0.0)
        throw ValidationError("social force: repulsion_range must be > 0");
    if (cfg.max_speed <= 0.0) throw ValidationError("social force: max_speed must be > 0");
    if (cfg.desired_speed_min <= 0.0 || cfg.desired_speed_max < cfg.desired_speed_min) {
        throw ValidationError("social force: desired speed range invalid");
    }
    if (cfg.substeps == 0) throw ValidationError("social force: substeps must be >= 1");
    if (cfg.t_obs == 0 || cfg.t_pred == 0)
        throw ValidationError("social force: window lengths must be >= 1");
}

SceneSample simulate_scene(const SocialForceConfig& cfg, Rng& rng) {
    const std::size_t n = cfg.agents_per_scene;
    const std::size_t steps = cfg.t_obs + cfg.t_pred;
    const double radius = cfg.arena_size / 2.0;
    const double duration = static_cast<double>(steps) * kTimestep;

    // Spawn on the arena circle with goals across the center, so paths cross
    // near the middle. Goals sit far beyond the arena so nobody arrives and
    // decelerates within the window.
    std::vector<Agent> agents(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        const double speed = rng.uniform(cfg.desired_speed_min, cfg.desired_speed_max);
        Vec2 spawn{radius * std::cos(angle), radius * std::sin(angle)};
        // Aim at a jittered point opposite the spawn.
        const double jitter = rng.uniform(-0.35, 0.35);
        const double target_angle = angle + M_PI + jitter;
        Vec2 across{radius * std::cos(target_angle), radius * std::sin(target_angle)};
        Vec2 dir = across - spawn;
        const double d = dir.norm();
        dir = d > 0.0 ? dir * (1.0 / d) : Vec2{1.0, 0.0};
        const double goal_dist = cfg.arena_size + duration * cfg.max_speed;
        Vec2 goal = spawn + dir * goal_dist;
        Vec2 to_goal = goal - spawn;
        Vec2 goal_dir = to_goal * (1.0 / to_goal.norm());

        agents[i].pos = spawn;
        agents[i].desired_vel = goal_dir * speed;
        agents[i].vel = agents[i].desired_vel;
    }

    const double dt_sub = kTimestep / static_cast<double>(cfg.substeps);
    std::vector<std::vector<Vec2>> tracks(n);
    for (std::size_t i = 0; i < n; ++i) tracks[i].push_back(agents[i].pos);

    std::vector<Vec2> forces(n);
    for (std::size_t step = 1; step < steps; ++step) {
        for (std::size_t sub = 0; sub < cfg.substeps; ++sub) {
            for (std::size_t i = 0; i < n; ++i) {
                Vec2 f = (agents[i].desired_vel - agents[i].vel) * cfg.goal_gain;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    Vec2 away = agents[i].pos - agents[j].pos;
                    const double d = away.norm();
                    if (d < 1e-9) continue;  // coincident agents push nowhere
                    const double mag =
                        cfg.repulsion_strength * std::exp(-d / cfg.repulsion_range);
                    f = f + away * (mag / d);
                }
                forces[i] = f;
            }
            for (std::size_t i = 0; i < n; ++i) {
                agents[i].vel = agents[i].vel + forces[i] * dt_sub;
                const double speed = agents[i].vel.norm();
                if (speed > cfg.max_speed) {
                    agents[i].vel = agents[i].vel * (cfg.max_speed / speed);
                }
                agents[i].pos = agents[i].pos + agents[i].vel * dt_sub;
            }
        }
        for (std::size_t i = 0; i < n; ++i) tracks[i].push_back(agents[i].pos);
    }

    SceneSample s;
    for (std::size_t i = 0; i < n; ++i) {
        s.agent_ids.push_back(static_cast<int>(i));
        s.observed.emplace_back(tracks[i].begin(), tracks[i].begin() + cfg.t_obs);
        s.future.emplace_back(tracks[i].begin() + cfg.t_obs, tracks[i].end());
    }
    if (cfg.context_dim > 0) s.context = rng.normal_vec(cfg.context_dim);
    return s;
}

}  // namespace

Dataset generate_social_force(const SocialForceConfig& cfg) {
    validate(cfg);
    Dataset ds;
    ds.t_obs = cfg.t_obs;
    ds.t_pred = cfg.t_pred;
    ds.context_dim = cfg.context_dim;
    ds.samples.reserve(cfg.n_scenes);
    for (std::size_t i = 0; i < cfg.n_scenes; ++i) {
        Rng rng = derive_rng(cfg.seed, "social-force/scene", i);
        ds.samples.push_back(simulate_scene(cfg, rng));
    }
    return ds;
}

}  // namespace rtraj
