#pragma once

#include <functional>

#include "rtraj/models.hpp"

namespace rtraj {

struct AttackConfig {
    double epsilon = -0.05;      // signed step magnitude; descent needs epsilon < 0
    std::size_t iterations = 20; // M
    double alpha = 0.1;          // exponential-average weight exponent

    void validate() const {
        if (iterations == 0) throw ValidationError("attack: iterations must be >= 1");
        if (!std::isfinite(alpha)) throw ValidationError("attack: alpha must be finite");
        if (!std::isfinite(epsilon)) throw ValidationError("attack: epsilon must be finite");
    }
};

/// Builds the matching-error graph E from a displacement-encoded prediction
/// leaf (shape (out_steps*N, 2), step-major). The concrete network adapter is
/// matching_error(); tests substitute toy maps.
using MatchFn = std::function<Tensor(const Tensor& pred_disp)>;

/// E = |X - G(Y~)|: decodes the candidate displacements from the last
/// observed position, feeds the reversal through the backward network with a
/// fixed noise draw, and returns the L2 mismatch against the reversed
/// observation. Differentiable w.r.t. pred_disp.
Tensor matching_error(const SceneSample& s, const Tensor& pred_disp,
                      const GeneratorParams& g_phi, const Tensor& g_noise);

/// One gradient step on the prediction (network weights untouched):
/// next = prev + epsilon * dE/dY~. Also reports E(prev) and whether the
/// gradient was finite.
struct AttackStep {
    std::vector<double> next;
    double error = 0.0;
    bool grad_finite = true;
};
AttackStep attack_step(const MatchFn& match, const Shape& shape,
                       const std::vector<double>& prev, double epsilon);

/// Exponentially weighted average sum(e^{alpha m} y_m) / sum(e^{alpha m})
/// over m = 1..M (the raw prediction y_0 is excluded).
std::vector<double> exp_average(const std::vector<std::vector<double>>& iterates, double alpha);

/// Iterate record of one attack: y_0 is the raw prediction; in the normal
/// path there are exactly iterations+1 iterates and matching errors. If the
/// gradient turns NaN at iteration m the attack truncates at m-1 and averages
/// the iterates collected so far (falling back to y_0 when none exist).
struct AttackState {
    std::vector<std::vector<double>> iterates;
    std::vector<double> errors;
    std::vector<double> refined;
    bool truncated = false;
};

AttackState run_attack(const MatchFn& match, const Shape& shape, std::vector<double> y0,
                       const AttackConfig& cfg);

/// Full matched-prediction procedure: y_0 = F(X), `iterations` gradient steps
/// against the backward matching error, exponential averaging. Both networks'
/// parameters are frozen for the duration (and left bit-identical).
struct MatchedPrediction {
    std::vector<std::vector<Vec2>> refined;  // [agent][t] absolute positions
    AttackState state;
};
MatchedPrediction matched_predict(const SceneSample& s, const GeneratorParams& f_theta,
                                  const GeneratorParams& g_phi, const AttackConfig& cfg,
                                  Rng& noise_rng);

}  // namespace rtraj
