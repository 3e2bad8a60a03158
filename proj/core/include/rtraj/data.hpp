#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtraj/errors.hpp"

namespace rtraj {

/// Sampling interval of all trajectories, in seconds (8 observed steps span
/// 3.2 s).
inline constexpr double kTimestep = 0.4;
inline constexpr std::size_t kObservedSteps = 8;
inline constexpr std::size_t kPredictedSteps = 12;
/// Hard cap on agents per scene; absent slots are treated as zero vectors.
inline constexpr std::size_t kMaxAgents = 32;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double c) const { return {x * c, y * c}; }
    double norm() const { return std::hypot(x, y); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// One agent's position sequence at fixed kTimestep spacing.
struct Trajectory {
    int agent_id = 0;
    std::vector<Vec2> points;
};

/// One row of an ETH/UCY-format text file.
struct FrameRecord {
    long frame = 0;
    int agent = 0;
    Vec2 pos;
};

/// A training/evaluation window: every listed agent is present in all
/// t_obs + t_pred frames. Tracks are stored agent-major.
struct SceneSample {
    std::vector<int> agent_ids;
    std::vector<std::vector<Vec2>> observed;  // [agent][t], t_obs steps
    std::vector<std::vector<Vec2>> future;    // [agent][t], t_pred steps
    std::vector<double> context;              // optional per-scene feature vector

    std::size_t agents() const { return agent_ids.size(); }
    std::size_t t_obs() const { return observed.empty() ? 0 : observed[0].size(); }
    std::size_t t_pred() const { return future.empty() ? 0 : future[0].size(); }
};

/// Time-reversed counterpart of a SceneSample: the reversed future becomes
/// the observation, the reversed observation becomes the target.
struct BackwardSample {
    std::vector<int> agent_ids;
    std::vector<std::vector<Vec2>> observed;  // reversed future, t_pred steps
    std::vector<std::vector<Vec2>> target;    // reversed observed, t_obs steps
    std::vector<double> context;
};

/// Parses an ETH/UCY-format text file: one record per line,
/// "frame_id agent_id x y", whitespace-separated, coordinates in meters.
/// Returned records are sorted by frame then agent id. Malformed lines and
/// decreasing frame ids raise ValidationError with the line number.
std::vector<FrameRecord> load_eth_ucy(const std::string& path);

/// Slides a (t_obs + t_pred)-frame window over the distinct frames of the
/// record stream. An agent joins a window only when present in every frame
/// of it; windows with no qualifying agent are dropped. If more than
/// kMaxAgents qualify, the lowest agent ids win.
std::vector<SceneSample> extract_windows(const std::vector<FrameRecord>& records,
                                         std::size_t t_obs = kObservedSteps,
                                         std::size_t t_pred = kPredictedSteps,
                                         std::size_t stride = 1);

BackwardSample time_reverse(const SceneSample& s);
SceneSample time_reverse(const BackwardSample& b);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

enum class NormMode { Absolute, RelativeDisplacement };

/// Captured by normalize() so denormalize() can reproduce the input exactly.
struct NormalizationSpec {
    NormMode mode = NormMode::Absolute;
    std::vector<Vec2> origins;  // one per agent (RelativeDisplacement only)
};

/// Point-sequence primitive: origin plus successive deltas.
struct EncodedTrack {
    Vec2 origin;
    std::vector<Vec2> deltas;  // size = points - 1
};

EncodedTrack displacement_encode(std::span<const Vec2> points);
std::vector<Vec2> displacement_decode(const EncodedTrack& t);

/// Absolute mode is the identity. RelativeDisplacement stores, per agent,
/// per-step deltas in the point slots (slot 0 of the observed track holds
/// {0,0}) with the starting position recorded in the spec.
SceneSample normalize(const SceneSample& s, NormalizationSpec& spec);
SceneSample denormalize(const SceneSample& s, const NormalizationSpec& spec);

// ---------------------------------------------------------------------------
// Sample store
// ---------------------------------------------------------------------------

/// In-memory dataset plus its fixed window geometry.
struct Dataset {
    std::size_t t_obs = kObservedSteps;
    std::size_t t_pred = kPredictedSteps;
    std::size_t context_dim = 0;
    std::vector<SceneSample> samples;
};

/// Binary sample store, version 1. Layout (all little-endian):
///   bytes 0..7   magic "RTRJDATA"
///   u32          format version (1)
///   u32          t_obs
///   u32          t_pred
///   u32          context_dim
///   u64          sample count
///   per sample:  u32 agent count N; N x i32 agent ids;
///                N x (t_obs + t_pred) x 2 f64 positions (agent-major,
///                observed then future); context_dim x f64.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Loads either the binary store or, for ".txt" paths, an ETH/UCY text file
/// run through extract_windows with default geometry.
Dataset load_any(const std::string& path);

}  // namespace rtraj
