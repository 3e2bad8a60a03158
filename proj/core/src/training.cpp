#include "rtraj/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtraj {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValidationError("lambda must be in [0,1], got " + std::to_string(lambda));
    }
    if (gan_weight < 0.0) throw ValidationError("gan_weight must be >= 0");
    if (grad_clip <= 0.0) throw ValidationError("grad_clip must be > 0");
    if (divergence_threshold <= 0.0) throw ValidationError("divergence_threshold must be > 0");
}

ReciprocalPair ReciprocalPair::init(const ModelConfig& model_cfg, const TrainConfig& train_cfg) {
    train_cfg.validate();
    ReciprocalPair pair;
    pair.model_cfg = model_cfg;
    pair.train_cfg = train_cfg;

    Rng rng_f = derive_rng(train_cfg.seed, "init/fwd");
    pair.forward.gen = GeneratorParams::init(model_cfg, rng_f);
    pair.forward.disc = DiscriminatorParams::init(model_cfg, rng_f);

    const ModelConfig bwd_cfg = model_cfg.reversed();
    Rng rng_b = derive_rng(train_cfg.seed, "init/bwd");
    pair.backward.gen = GeneratorParams::init(bwd_cfg, rng_b);
    pair.backward.disc = DiscriminatorParams::init(bwd_cfg, rng_b);

    pair.opt_fwd_gen = Adam(pair.forward.gen.named_params(), train_cfg.adam);
    pair.opt_fwd_disc = Adam(pair.forward.disc.named_params(), train_cfg.adam);
    pair.opt_bwd_gen = Adam(pair.backward.gen.named_params(), train_cfg.adam);
    pair.opt_bwd_disc = Adam(pair.backward.disc.named_params(), train_cfg.adam);
    return pair;
}

std::vector<std::pair<std::string, Tensor>> ReciprocalPair::all_named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    auto append = [&out](const std::string& prefix, auto params) {
        for (auto& [name, t] : params) out.emplace_back(prefix + name, t);
    };
    append("fwd.gen.", forward.gen.named_params());
    append("fwd.disc.", forward.disc.named_params());
    append("bwd.gen.", backward.gen.named_params());
    append("bwd.disc.", backward.disc.named_params());
    return out;
}

namespace {

// Observation and target tracks in the side's own time direction.
void side_tracks(const SceneSample& s, NetSide side, std::vector<std::vector<Vec2>>& obs,
                 std::vector<std::vector<Vec2>>& target) {
    if (side == NetSide::Forward) {
        obs = s.observed;
        target = s.future;
    } else {
        BackwardSample b = time_reverse(s);
        obs = std::move(b.observed);
        target = std::move(b.target);
    }
}

StepSeq concat_seqs(const StepSeq& a, const StepSeq& b) {
    StepSeq out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

Tensor draw_noise(std::size_t n, std::size_t dim, Rng& rng) {
    return Tensor({n, dim}, rng.normal_vec(n * dim));
}

struct BatchContext {
    const char* phase;
    std::size_t epoch;
    std::size_t batch;
    double lambda;
    Rng* noise;
    Rng* comp_noise;  // may be null when lambda == 1
};

// One optimization step of one network on one batch: discriminator update
// (skipped entirely at gan_weight == 0), then generator update with the
// partner frozen inside the reciprocal term. Gradients accumulate per scene,
// scaled by 1/batch so the step optimizes the batch mean.
LossRecord net_batch_step(ReciprocalPair& pair, NetSide side, const Dataset& data,
                          std::span<const std::size_t> batch, const BatchContext& ctx) {
    PredictionNetwork& self = pair.net(side);
    PredictionNetwork& partner = pair.net(side == NetSide::Forward ? NetSide::Backward
                                                                   : NetSide::Forward);
    Adam& opt_gen = side == NetSide::Forward ? pair.opt_fwd_gen : pair.opt_bwd_gen;
    Adam& opt_disc = side == NetSide::Forward ? pair.opt_fwd_disc : pair.opt_bwd_disc;
    const TrainConfig& cfg = pair.train_cfg;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const bool use_gan = cfg.gan_weight > 0.0;

    LossRecord rec;
    rec.phase = ctx.phase;
    rec.epoch = ctx.epoch;
    rec.batch = ctx.batch;
    rec.net = side == NetSide::Forward ? 'f' : 'b';

    // Discriminator phase. The fake is produced without recording, so the
    // loss graph covers only the discriminator.
    if (use_gan) {
        opt_disc.zero_grad();
        for (std::size_t idx : batch) {
            const SceneSample& s = data.samples[idx];
            std::vector<std::vector<Vec2>> obs_tracks, target_tracks;
            side_tracks(s, side, obs_tracks, target_tracks);
            const StepSeq obs_pos = positions_to_steps(obs_tracks);
            const StepSeq target_pos = positions_to_steps(target_tracks);
            const auto ctx_vec = sample_context(s, self.gen.cfg.context_dim);
            const Tensor z = draw_noise(s.agents(), self.gen.cfg.noise_dim, *ctx.noise);

            StepSeq fake_pos;
            {
                NoGradGuard ng;
                const StepSeq fake_disp = generator_forward(
                    self.gen, to_displacements(obs_pos), obs_pos.back(),
                    ctx_vec ? &*ctx_vec : nullptr, z);
                fake_pos = decode_positions(obs_pos.back(), fake_disp);
            }
            const Tensor d_loss =
                bce_d_loss(discriminator_forward(self.disc, concat_seqs(obs_pos, target_pos)),
                           discriminator_forward(self.disc, concat_seqs(obs_pos, fake_pos)));
            rec.d_loss += d_loss.item() * inv_batch;
            scale(d_loss, inv_batch).backward();
        }
        opt_disc.clip_global_norm(cfg.grad_clip);
        opt_disc.step();
    }

    // Generator phase.
    opt_gen.zero_grad();
    {
        ParamFreeze freeze_disc(self.disc.named_params());
        ParamFreeze freeze_partner(partner.gen.named_params());
        for (std::size_t idx : batch) {
            const SceneSample& s = data.samples[idx];
            std::vector<std::vector<Vec2>> obs_tracks, target_tracks;
            side_tracks(s, side, obs_tracks, target_tracks);
            const StepSeq obs_pos = positions_to_steps(obs_tracks);
            const StepSeq target_pos = positions_to_steps(target_tracks);
            const auto ctx_vec = sample_context(s, self.gen.cfg.context_dim);
            const Tensor z = draw_noise(s.agents(), self.gen.cfg.noise_dim, *ctx.noise);

            const StepSeq fake_disp =
                generator_forward(self.gen, to_displacements(obs_pos), obs_pos.back(),
                                  ctx_vec ? &*ctx_vec : nullptr, z);
            const StepSeq fake_pos = decode_positions(obs_pos.back(), fake_disp);

            const Tensor primary = l2_traj(target_pos, fake_pos);
            Tensor j;
            if (ctx.lambda < 1.0) {
                // Reciprocal term: the partner runs in the opposite time
                // direction, so it consumes the reversed prediction and its
                // output is compared against the reversed observation.
                const StepSeq partner_in = reverse_seq(fake_pos);
                const Tensor zc =
                    draw_noise(s.agents(), partner.gen.cfg.noise_dim, *ctx.comp_noise);
                const StepSeq recon_disp =
                    generator_forward(partner.gen, to_displacements(partner_in),
                                      partner_in.back(), ctx_vec ? &*ctx_vec : nullptr, zc);
                const StepSeq recon_pos = decode_positions(partner_in.back(), recon_disp);
                const Tensor comp = l2_traj(reverse_seq(obs_pos), recon_pos);
                j = reciprocal_combine(ctx.lambda, primary, comp);
            } else {
                j = scale(primary, 1.0);
            }
            rec.j_loss += j.item() * inv_batch;

            Tensor step_loss = j;
            if (use_gan) {
                const Tensor g_loss = nonsaturating_g_loss(
                    discriminator_forward(self.disc, concat_seqs(obs_pos, fake_pos)));
                rec.g_loss += g_loss.item() * inv_batch;
                step_loss = total_loss(g_loss, j, cfg.gan_weight);
            }
            rec.total += step_loss.item() * inv_batch;
            scale(step_loss, inv_batch).backward();
        }
        opt_gen.clip_global_norm(cfg.grad_clip);
        opt_gen.step();
    }

    if (!std::isfinite(rec.total) || rec.total > cfg.divergence_threshold) {
        throw NumericError("training diverged: phase=" + std::string(ctx.phase) +
                           " epoch=" + std::to_string(ctx.epoch) + " net=" +
                           std::string(1, rec.net) + " batch loss=" + std::to_string(rec.total));
    }
    return rec;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     const std::string& label, std::size_t epoch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = derive_rng(seed, label, epoch);
    rng.shuffle(idx);
    return idx;
}

template <typename StepFn>
void for_each_batch(const std::vector<std::size_t>& order, std::size_t batch_size, StepFn fn) {
    std::size_t batch_idx = 0;
    for (std::size_t off = 0; off < order.size(); off += batch_size, ++batch_idx) {
        const std::size_t len = std::min(batch_size, order.size() - off);
        fn(batch_idx, std::span<const std::size_t>(order.data() + off, len));
    }
}

}  // namespace

void pretrain(ReciprocalPair& pair, NetSide side, const Dataset& data,
              std::size_t target_epochs) {
    if (data.samples.empty()) throw ValidationError("pretrain: empty dataset");
    pair.train_cfg.validate();
    const bool fwd = side == NetSide::Forward;
    std::size_t& done = fwd ? pair.progress.pretrain_forward : pair.progress.pretrain_backward;
    const std::string tag = fwd ? "pretrain/fwd" : "pretrain/bwd";

    for (std::size_t e = done; e < target_epochs; ++e) {
        const auto order =
            epoch_order(data.samples.size(), pair.train_cfg.seed, tag + "/order", e);
        Rng noise = derive_rng(pair.train_cfg.seed, tag + "/noise", e);
        for_each_batch(order, pair.train_cfg.batch_size,
                       [&](std::size_t b, std::span<const std::size_t> batch) {
                           BatchContext ctx{"pretrain", e, b, 1.0, &noise, nullptr};
                           pair.history.push_back(net_batch_step(pair, side, data, batch, ctx));
                       });
        done = e + 1;
    }
}

void reciprocal_train(ReciprocalPair& pair, const Dataset& data, std::size_t target_epochs) {
    if (data.samples.empty()) throw ValidationError("reciprocal_train: empty dataset");
    pair.train_cfg.validate();
    const double lambda = pair.train_cfg.lambda;

    for (std::size_t e = pair.progress.joint; e < target_epochs; ++e) {
        const auto order =
            epoch_order(data.samples.size(), pair.train_cfg.seed, "joint/order", e);
        Rng noise_f = derive_rng(pair.train_cfg.seed, "joint/fwd/noise", e);
        Rng comp_f = derive_rng(pair.train_cfg.seed, "joint/fwd/comp", e);
        Rng noise_b = derive_rng(pair.train_cfg.seed, "joint/bwd/noise", e);
        Rng comp_b = derive_rng(pair.train_cfg.seed, "joint/bwd/comp", e);

        auto theta_step = [&](std::size_t b, std::span<const std::size_t> batch) {
            BatchContext ctx{"joint", e, b, lambda, &noise_f, &comp_f};
            pair.history.push_back(net_batch_step(pair, NetSide::Forward, data, batch, ctx));
        };
        auto phi_step = [&](std::size_t b, std::span<const std::size_t> batch) {
            BatchContext ctx{"joint", e, b, lambda, &noise_b, &comp_b};
            pair.history.push_back(net_batch_step(pair, NetSide::Backward, data, batch, ctx));
        };

        if (pair.train_cfg.alternation == Alternation::PerBatch) {
            for_each_batch(order, pair.train_cfg.batch_size,
                           [&](std::size_t b, std::span<const std::size_t> batch) {
                               theta_step(b, batch);
                               phi_step(b, batch);
                           });
        } else {
            for_each_batch(order, pair.train_cfg.batch_size, theta_step);
            for_each_batch(order, pair.train_cfg.batch_size, phi_step);
        }
        pair.progress.joint = e + 1;
    }
}

void train_pair(ReciprocalPair& pair, const Dataset& data) {
    pretrain(pair, NetSide::Forward, data, pair.train_cfg.pretrain_epochs);
    pretrain(pair, NetSide::Backward, data, pair.train_cfg.pretrain_epochs);
    reciprocal_train(pair, data, pair.train_cfg.epochs);
}

double reconstruction_error(const ReciprocalPair& pair, const Dataset& data,
                            std::uint64_t noise_seed) {
    if (data.samples.empty()) throw ValidationError("reconstruction_error: empty dataset");
    NoGradGuard ng;
    double total = 0.0;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const SceneSample& s = data.samples[i];
        const StepSeq obs_pos = positions_to_steps(s.observed);
        const auto ctx = sample_context(s, pair.model_cfg.context_dim);
        Rng rf = derive_rng(noise_seed, "recon/fwd", i);
        Rng rb = derive_rng(noise_seed, "recon/bwd", i);

        const StepSeq pred_disp = generator_forward(
            pair.forward.gen, to_displacements(obs_pos), obs_pos.back(),
            ctx ? &*ctx : nullptr, draw_noise(s.agents(), pair.model_cfg.noise_dim, rf));
        const StepSeq pred_pos = decode_positions(obs_pos.back(), pred_disp);

        const StepSeq rev_pred = reverse_seq(pred_pos);
        const StepSeq recon_disp = generator_forward(
            pair.backward.gen, to_displacements(rev_pred), rev_pred.back(),
            ctx ? &*ctx : nullptr, draw_noise(s.agents(), pair.model_cfg.noise_dim, rb));
        const StepSeq recon_pos = decode_positions(rev_pred.back(), recon_disp);

        total += l2_traj(reverse_seq(obs_pos), recon_pos).item();
    }
    return total / static_cast<double>(data.samples.size());
}

}  // namespace rtraj
