#include "rtraj/attack.hpp"

#include <cmath>

#include "rtraj/losses.hpp"

namespace rtraj {

Tensor matching_error(const SceneSample& s, const Tensor& pred_disp,
                      const GeneratorParams& g_phi, const Tensor& g_noise) {
    const std::size_t n = s.agents();
    const std::size_t t_out = pred_disp.rows() / n;
    const StepSeq obs_pos = positions_to_steps(s.observed);
    const auto ctx = sample_context(s, g_phi.cfg.context_dim);

    const StepSeq pred_steps = split_seq(pred_disp, t_out);
    const StepSeq pred_pos = decode_positions(obs_pos.back(), pred_steps);
    const StepSeq rev_pred = reverse_seq(pred_pos);
    const StepSeq recon_disp = generator_forward(g_phi, to_displacements(rev_pred),
                                                 rev_pred.back(), ctx ? &*ctx : nullptr, g_noise);
    const StepSeq recon_pos = decode_positions(rev_pred.back(), recon_disp);
    return l2_traj(reverse_seq(obs_pos), recon_pos);
}

AttackStep attack_step(const MatchFn& match, const Shape& shape,
                       const std::vector<double>& prev, double epsilon) {
    Tensor leaf(shape, prev);
    leaf.set_requires_grad(true);
    const Tensor e = match(leaf);
    e.backward();

    AttackStep out;
    out.error = e.item();
    out.next = prev;
    const auto g = leaf.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) {
            out.grad_finite = false;
            return out;
        }
        out.next[i] += epsilon * g[i];
    }
    return out;
}

std::vector<double> exp_average(const std::vector<std::vector<double>>& iterates, double alpha) {
    if (iterates.empty()) throw ValidationError("exp_average: no iterates");
    const std::size_t m_total = iterates.size();
    // Weights e^{alpha m} rescaled by the largest exponent; the ratio is
    // unchanged and large alpha*M cannot overflow.
    double max_exp = alpha * 1.0;
    for (std::size_t m = 1; m <= m_total; ++m) {
        max_exp = std::max(max_exp, alpha * static_cast<double>(m));
    }
    std::vector<double> out(iterates[0].size(), 0.0);
    double weight_sum = 0.0;
    for (std::size_t m = 1; m <= m_total; ++m) {
        const double w = std::exp(alpha * static_cast<double>(m) - max_exp);
        weight_sum += w;
        const auto& it = iterates[m - 1];
        if (it.size() != out.size()) throw ShapeError("exp_average: ragged iterates");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * it[i];
    }
    for (auto& v : out) v /= weight_sum;
    return out;
}

AttackState run_attack(const MatchFn& match, const Shape& shape, std::vector<double> y0,
                       const AttackConfig& cfg) {
    cfg.validate();
    AttackState state;
    state.iterates.push_back(std::move(y0));
    for (std::size_t m = 1; m <= cfg.iterations; ++m) {
        AttackStep step = attack_step(match, shape, state.iterates.back(), cfg.epsilon);
        if (!step.grad_finite) {
            state.truncated = true;
            break;
        }
        state.errors.push_back(step.error);  // E at the previous iterate
        state.iterates.push_back(std::move(step.next));
    }
    // Error at the final iterate (forward pass only).
    {
        Tensor leaf(shape, state.iterates.back());
        state.errors.push_back(match(leaf).item());
    }
    if (state.iterates.size() > 1) {
        const std::vector<std::vector<double>> steps(state.iterates.begin() + 1,
                                                     state.iterates.end());
        state.refined = exp_average(steps, cfg.alpha);
    } else {
        state.refined = state.iterates.front();
    }
    return state;
}

MatchedPrediction matched_predict(const SceneSample& s, const GeneratorParams& f_theta,
                                  const GeneratorParams& g_phi, const AttackConfig& cfg,
                                  Rng& noise_rng) {
    cfg.validate();
    ParamFreeze freeze_f(f_theta.named_params());
    ParamFreeze freeze_g(g_phi.named_params());

    const std::size_t n = s.agents();
    const StepSeq obs_pos = positions_to_steps(s.observed);
    const auto ctx = sample_context(s, f_theta.cfg.context_dim);
    const Tensor z_f({n, f_theta.cfg.noise_dim},
                     noise_rng.normal_vec(n * f_theta.cfg.noise_dim));
    // The backward noise draw is fixed across iterations; the attack perturbs
    // the prediction itself.
    const Tensor z_g({n, g_phi.cfg.noise_dim}, noise_rng.normal_vec(n * g_phi.cfg.noise_dim));

    std::vector<double> y0;
    {
        NoGradGuard ng;
        const StepSeq pred = generator_forward(f_theta, to_displacements(obs_pos),
                                               obs_pos.back(), ctx ? &*ctx : nullptr, z_f);
        const Tensor flat = flatten_seq(pred);
        y0.assign(flat.values().begin(), flat.values().end());
    }
    const Shape leaf_shape{f_theta.cfg.out_steps * n, 2};
    MatchFn match = [&](const Tensor& leaf) { return matching_error(s, leaf, g_phi, z_g); };

    MatchedPrediction out;
    out.state = run_attack(match, leaf_shape, std::move(y0), cfg);
    {
        NoGradGuard ng;
        const Tensor refined(leaf_shape, out.state.refined);
        const StepSeq pos =
            decode_positions(obs_pos.back(), split_seq(refined, f_theta.cfg.out_steps));
        out.refined = steps_to_tracks(pos);
    }
    return out;
}

}  // namespace rtraj
