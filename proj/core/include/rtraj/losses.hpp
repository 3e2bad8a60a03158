#pragma once

#include "rtraj/models.hpp"

namespace rtraj {

struct LossConfig {
    double lambda = 0.5;      // weight between prediction and reciprocal terms
    double gan_weight = 1.0;  // multiplier on the adversarial generator term

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw ValidationError("lambda must be in [0,1], got " + std::to_string(lambda));
        }
    }
};

/// Temporarily turns off gradient accumulation for a parameter set; restores
/// the previous flags on destruction. Used to freeze the partner network
/// while its graph still participates in a composed forward pass.
class ParamFreeze {
  public:
    explicit ParamFreeze(std::vector<std::pair<std::string, Tensor>> params);
    ~ParamFreeze();
    ParamFreeze(const ParamFreeze&) = delete;
    ParamFreeze& operator=(const ParamFreeze&) = delete;

  private:
    std::vector<std::pair<Tensor, bool>> saved_;
};

/// L2 norm of the flattened coordinate difference between two equally shaped
/// step sequences.
Tensor l2_traj(const StepSeq& a, const StepSeq& b);

/// lambda * primary + (1 - lambda) * reciprocal.
Tensor reciprocal_combine(double lambda, const Tensor& primary, const Tensor& reciprocal);

/// Forward objective J+: lambda * |Y - F(X)| + (1-lambda) * |X - G(F(X))|.
/// G's parameters are frozen for the duration of the call; at lambda == 1 the
/// composed pass (and its noise draw) is skipped entirely.
Tensor j_forward(const SceneSample& s, const GeneratorParams& f_theta,
                 const GeneratorParams& g_phi, const LossConfig& cfg, Rng& noise_rng);

/// Backward objective J-: lambda * |X - G(Y)| + (1-lambda) * |Y - F(G(Y))|,
/// with F frozen. G consumes the time-reversed future and predicts the
/// reversed past.
Tensor j_backward(const SceneSample& s, const GeneratorParams& f_theta,
                  const GeneratorParams& g_phi, const LossConfig& cfg, Rng& noise_rng);

// ---------------------------------------------------------------------------
// Adversarial losses
// ---------------------------------------------------------------------------

/// Score-level binary cross entropy for the discriminator; inputs are
/// per-agent scores, clamped at 1e-12 before the log.
Tensor bce_d_loss(const Tensor& d_real, const Tensor& d_fake);

/// Non-saturating generator loss -log D(fake).
Tensor nonsaturating_g_loss(const Tensor& d_fake);

struct GanLosses {
    Tensor d_loss;
    Tensor g_loss;
};

/// Both adversarial losses for one discriminator. The fake trajectory is
/// detached for the d_loss path, so d_loss.backward() reaches only the
/// discriminator; g_loss keeps the generator graph alive.
GanLosses gan_losses(const DiscriminatorParams& d, const StepSeq& real_traj,
                     const StepSeq& fake_traj);

/// Overall generator objective: gan_weight * g_loss + j.
Tensor total_loss(const Tensor& g_loss, const Tensor& j, double gan_weight);

}  // namespace rtraj
