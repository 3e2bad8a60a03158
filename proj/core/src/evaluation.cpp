#include "rtraj/evaluation.hpp"

#include <thread>

namespace rtraj {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1 || n < 4) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

namespace {

// Deterministic reduction: per-scene results land in preallocated slots.
struct SceneResult {
    double ade_sum = 0.0;      // summed per-agent-step distances
    double fde_sum = 0.0;      // summed per-agent final distances
    double frames_sum = 0.0;   // summed per-frame collision fractions
    std::size_t agent_steps = 0;
    std::size_t agents = 0;
    std::size_t frames = 0;
    SceneRow row;
};

EvalReport reduce(std::vector<SceneResult> results, std::size_t k) {
    EvalReport rep;
    rep.k = k;
    rep.scenes = results.size();
    double ade_sum = 0, fde_sum = 0, frames_sum = 0;
    std::size_t agent_steps = 0, agents = 0, frames = 0;
    for (auto& r : results) {
        ade_sum += r.ade_sum;
        fde_sum += r.fde_sum;
        frames_sum += r.frames_sum;
        agent_steps += r.agent_steps;
        agents += r.agents;
        frames += r.frames;
        rep.per_scene.push_back(r.row);
    }
    if (agent_steps > 0) rep.ade = ade_sum / static_cast<double>(agent_steps);
    if (agents > 0) rep.fde = fde_sum / static_cast<double>(agents);
    if (frames > 0) rep.collision_pct = 100.0 * frames_sum / static_cast<double>(frames);
    return rep;
}

SceneResult score_scene(std::size_t idx, const Tracks& pred, const Tracks& gt,
                        double best_ade, double best_fde, double collision_threshold) {
    SceneResult r;
    const std::size_t n = gt.size();
    const std::size_t steps = gt[0].size();
    r.agents = n;
    r.agent_steps = n * steps;
    r.frames = steps;
    r.ade_sum = best_ade * static_cast<double>(n * steps);
    r.fde_sum = best_fde * static_cast<double>(n);
    const double pct = collision_pct(pred, collision_threshold);
    r.frames_sum = pct / 100.0 * static_cast<double>(steps);
    r.row = {idx, best_ade, best_fde, pct};
    return r;
}

}  // namespace

EvalReport evaluate(const GeneratorParams& gen, const Dataset& test, const EvalOptions& opt) {
    if (opt.k == 0) throw ValidationError("evaluate: k must be >= 1");
    if (test.samples.empty()) throw ValidationError("evaluate: empty test set");

    std::vector<SceneResult> results(test.samples.size());
    parallel_for(test.samples.size(), opt.threads, [&](std::size_t i) {
        const SceneSample& s = test.samples[i];
        Rng rng = derive_rng(opt.seed, "eval/noise", i);
        std::vector<Tracks> preds;
        preds.reserve(opt.k);
        for (std::size_t k = 0; k < opt.k; ++k) {
            preds.push_back(predict_positions(gen, s, rng));
        }
        const BestOfK best = best_of_k(preds, s.future);
        results[i] = score_scene(i, preds[best.best_index], s.future, best.ade, best.fde,
                                 opt.collision_threshold);
    });
    return reduce(std::move(results), opt.k);
}

AttackEvalResult attack_evaluate(const ReciprocalPair& pair, const Dataset& test,
                                 const EvalOptions& opt, const AttackConfig& attack) {
    if (opt.k == 0) throw ValidationError("attack_evaluate: k must be >= 1");
    if (test.samples.empty()) throw ValidationError("attack_evaluate: empty test set");
    attack.validate();

    const std::size_t n_scenes = test.samples.size();
    std::vector<SceneResult> pre(n_scenes), post(n_scenes);
    AttackEvalResult out;
    out.e_curves.resize(n_scenes);
    out.ade_curves.resize(n_scenes);

    // Freeze both networks before fanning out: the per-call freezes inside
    // matched_predict then only ever write false over false, which keeps the
    // shared flags race-free across worker threads.
    ParamFreeze freeze_f(pair.forward.gen.named_params());
    ParamFreeze freeze_g(pair.backward.gen.named_params());

    parallel_for(n_scenes, opt.threads, [&](std::size_t i) {
        const SceneSample& s = test.samples[i];
        const StepSeq obs_pos = positions_to_steps(s.observed);
        Rng rng = derive_rng(opt.seed, "attack/noise", i);

        auto decode_flat = [&](const std::vector<double>& flat) {
            NoGradGuard ng;
            const Tensor t(Shape{pair.model_cfg.out_steps * s.agents(), 2}, flat);
            return steps_to_tracks(
                decode_positions(obs_pos.back(), split_seq(t, pair.model_cfg.out_steps)));
        };

        std::vector<Tracks> raws, refineds;
        raws.reserve(opt.k);
        refineds.reserve(opt.k);
        for (std::size_t k = 0; k < opt.k; ++k) {
            MatchedPrediction mp =
                matched_predict(s, pair.forward.gen, pair.backward.gen, attack, rng);
            raws.push_back(decode_flat(mp.state.iterates.front()));
            refineds.push_back(std::move(mp.refined));
            if (k == 0) {
                out.e_curves[i] = mp.state.errors;
                for (const auto& it : mp.state.iterates) {
                    out.ade_curves[i].push_back(ade(decode_flat(it), s.future));
                }
            }
        }
        const BestOfK best_pre = best_of_k(raws, s.future);
        const BestOfK best_post = best_of_k(refineds, s.future);
        pre[i] = score_scene(i, raws[best_pre.best_index], s.future, best_pre.ade, best_pre.fde,
                             opt.collision_threshold);
        post[i] = score_scene(i, refineds[best_post.best_index], s.future, best_post.ade,
                              best_post.fde, opt.collision_threshold);
    });
    out.pre = reduce(std::move(pre), opt.k);
    out.post = reduce(std::move(post), opt.k);
    return out;
}

}  // namespace rtraj
