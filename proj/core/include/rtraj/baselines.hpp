#pragma once

#include "rtraj/evaluation.hpp"

namespace rtraj {

/// Linear comparator: per agent, a least-squares line fit (x and y against
/// time) over the observed steps, extrapolated over the prediction horizon.
Tracks linear_extrapolate(const SceneSample& s, std::size_t t_pred = kPredictedSteps);

EvalReport evaluate_linear(const Dataset& test, double collision_threshold = 0.1);

}  // namespace rtraj
