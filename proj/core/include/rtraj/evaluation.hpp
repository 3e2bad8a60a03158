#pragma once

#include "rtraj/attack.hpp"
#include "rtraj/metrics.hpp"
#include "rtraj/training.hpp"

namespace rtraj {

struct EvalOptions {
    std::size_t k = 20;  // stochastic predictions per scene, best-of-K scored
    std::uint64_t seed = 1;
    double collision_threshold = 0.1;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Best-of-K evaluation of a generator over a test set. Per-scene noise
/// streams are derived from (seed, scene index), so results are independent
/// of the thread schedule. ADE/FDE are pooled over all agents and steps;
/// collision percentages average over all predicted frames.
EvalReport evaluate(const GeneratorParams& gen, const Dataset& test, const EvalOptions& opt);

/// Matched-prediction evaluation: every one of the K samples per scene is
/// refined through the attack, and pre/post reports are both best-of-K.
/// e_curves / ade_curves hold, per scene, the first sample's matching error
/// and ADE at every iterate (iterations + 1 entries).
struct AttackEvalResult {
    EvalReport pre;
    EvalReport post;
    std::vector<std::vector<double>> e_curves;
    std::vector<std::vector<double>> ade_curves;
};
AttackEvalResult attack_evaluate(const ReciprocalPair& pair, const Dataset& test,
                                 const EvalOptions& opt, const AttackConfig& attack);

/// Simple index-based parallel loop used by the evaluators; runs inline when
/// threads <= 1 or n is small.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace rtraj
