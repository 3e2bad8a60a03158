#pragma once

#include <string>
#include <vector>

#include "rtraj/data.hpp"

namespace rtraj {

/// Plain positions, [agent][t].
using Tracks = std::vector<std::vector<Vec2>>;

/// Mean Euclidean distance over all agents and predicted steps.
double ade(const Tracks& pred, const Tracks& gt);

/// Euclidean distance at the final predicted step, averaged over agents.
double fde(const Tracks& pred, const Tracks& gt);

/// Best-of-K scoring: the ADE-minimizing sample wins and also provides the
/// reported FDE (one coherent winner, not independent minima).
struct BestOfK {
    double ade = 0.0;
    double fde = 0.0;
    std::size_t best_index = 0;
};
BestOfK best_of_k(const std::vector<Tracks>& preds, const Tracks& gt);

/// Per-frame share of agents standing closer than `threshold` (strictly) to
/// some other agent, averaged over frames, in percent.
double collision_pct(const Tracks& tracks, double threshold = 0.1);

struct SceneRow {
    std::size_t scene = 0;
    double ade = 0.0;
    double fde = 0.0;
    double collision = 0.0;
};

struct EvalReport {
    double ade = 0.0;            // pooled over all agents and steps
    double fde = 0.0;
    double collision_pct = 0.0;  // averaged over all predicted frames
    std::size_t k = 1;
    std::size_t scenes = 0;
    std::vector<SceneRow> per_scene;

    std::string to_text() const;
    void write_csv(const std::string& path) const;
    void write_text(const std::string& path) const;
};

}  // namespace rtraj
