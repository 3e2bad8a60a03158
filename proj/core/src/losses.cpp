#include "rtraj/losses.hpp"

namespace rtraj {

ParamFreeze::ParamFreeze(std::vector<std::pair<std::string, Tensor>> params) {
    saved_.reserve(params.size());
    for (auto& [name, t] : params) {
        (void)name;
        saved_.emplace_back(t, t.requires_grad());
        Tensor copy = t;
        copy.set_requires_grad(false);
    }
}

ParamFreeze::~ParamFreeze() {
    for (auto& [t, was] : saved_) {
        Tensor copy = t;
        copy.set_requires_grad(was);
    }
}

Tensor l2_traj(const StepSeq& a, const StepSeq& b) {
    if (a.size() != b.size()) {
        throw ShapeError("l2_traj: sequence lengths differ: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw ShapeError("l2_traj: empty sequences");
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].shape() != b[t].shape()) {
            throw ShapeError("l2_traj: step " + std::to_string(t) + " shapes differ: " +
                             shape_str(a[t].shape()) + " vs " + shape_str(b[t].shape()));
        }
    }
    return l2_norm(sub(flatten_seq(a), flatten_seq(b)));
}

Tensor reciprocal_combine(double lambda, const Tensor& primary, const Tensor& reciprocal) {
    return add(scale(primary, lambda), scale(reciprocal, 1.0 - lambda));
}

namespace {

Tensor draw_noise(std::size_t n, std::size_t dim, Rng& rng) {
    return Tensor({n, dim}, rng.normal_vec(n * dim));
}

}  // namespace

Tensor j_forward(const SceneSample& s, const GeneratorParams& f_theta,
                 const GeneratorParams& g_phi, const LossConfig& cfg, Rng& noise_rng) {
    cfg.validate();
    ParamFreeze freeze(g_phi.named_params());
    const std::size_t n = s.agents();

    const StepSeq obs_pos = positions_to_steps(s.observed);
    const StepSeq fut_pos = positions_to_steps(s.future);
    const auto ctx = sample_context(s, f_theta.cfg.context_dim);

    const StepSeq pred_disp =
        generator_forward(f_theta, to_displacements(obs_pos), obs_pos.back(),
                          ctx ? &*ctx : nullptr, draw_noise(n, f_theta.cfg.noise_dim, noise_rng));
    const StepSeq pred_pos = decode_positions(obs_pos.back(), pred_disp);

    const Tensor l_plus = l2_traj(fut_pos, pred_pos);
    if (cfg.lambda == 1.0) return scale(l_plus, 1.0);

    // Reciprocal term: map the prediction back through the frozen backward
    // network (which runs in reversed time) and compare with the observation.
    const StepSeq rev_pred = reverse_seq(pred_pos);
    const StepSeq recon_rev_disp =
        generator_forward(g_phi, to_displacements(rev_pred), rev_pred.back(),
                          ctx ? &*ctx : nullptr, draw_noise(n, g_phi.cfg.noise_dim, noise_rng));
    const StepSeq recon_rev_pos = decode_positions(rev_pred.back(), recon_rev_disp);
    const Tensor l_minus = l2_traj(reverse_seq(obs_pos), recon_rev_pos);

    return reciprocal_combine(cfg.lambda, l_plus, l_minus);
}

Tensor j_backward(const SceneSample& s, const GeneratorParams& f_theta,
                  const GeneratorParams& g_phi, const LossConfig& cfg, Rng& noise_rng) {
    cfg.validate();
    ParamFreeze freeze(f_theta.named_params());
    const std::size_t n = s.agents();

    const StepSeq obs_pos = positions_to_steps(s.observed);
    const StepSeq fut_pos = positions_to_steps(s.future);
    const auto ctx = sample_context(s, g_phi.cfg.context_dim);

    // Backward network: observe the reversed future, predict the reversed past.
    const StepSeq rev_fut = reverse_seq(fut_pos);
    const StepSeq past_rev_disp =
        generator_forward(g_phi, to_displacements(rev_fut), rev_fut.back(),
                          ctx ? &*ctx : nullptr, draw_noise(n, g_phi.cfg.noise_dim, noise_rng));
    const StepSeq past_rev_pos = decode_positions(rev_fut.back(), past_rev_disp);

    const Tensor l_minus = l2_traj(reverse_seq(obs_pos), past_rev_pos);
    if (cfg.lambda == 1.0) return scale(l_minus, 1.0);

    // Reciprocal term: run the frozen forward network on the reconstruction.
    const StepSeq recon_obs = reverse_seq(past_rev_pos);
    const StepSeq fut_disp =
        generator_forward(f_theta, to_displacements(recon_obs), recon_obs.back(),
                          ctx ? &*ctx : nullptr, draw_noise(n, f_theta.cfg.noise_dim, noise_rng));
    const StepSeq fut_pred = decode_positions(recon_obs.back(), fut_disp);
    const Tensor l_plus = l2_traj(fut_pos, fut_pred);

    return reciprocal_combine(cfg.lambda, l_minus, l_plus);
}

namespace {

constexpr double kLogClamp = 1e-12;

Tensor neg_log(const Tensor& t) { return scale(log(clamp_min(t, kLogClamp)), -1.0); }

Tensor one_minus(const Tensor& t) { return add_const(scale(t, -1.0), 1.0); }

}  // namespace

Tensor bce_d_loss(const Tensor& d_real, const Tensor& d_fake) {
    return add(mean(neg_log(d_real)), mean(neg_log(one_minus(d_fake))));
}

Tensor nonsaturating_g_loss(const Tensor& d_fake) { return mean(neg_log(d_fake)); }

GanLosses gan_losses(const DiscriminatorParams& d, const StepSeq& real_traj,
                     const StepSeq& fake_traj) {
    StepSeq fake_detached;
    fake_detached.reserve(fake_traj.size());
    for (const auto& t : fake_traj) fake_detached.push_back(t.detach());

    GanLosses out;
    out.d_loss = bce_d_loss(discriminator_forward(d, real_traj),
                            discriminator_forward(d, fake_detached));
    out.g_loss = nonsaturating_g_loss(discriminator_forward(d, fake_traj));
    return out;
}

Tensor total_loss(const Tensor& g_loss, const Tensor& j, double gan_weight) {
    return add(scale(g_loss, gan_weight), j);
}

}  // namespace rtraj
