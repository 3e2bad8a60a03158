#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtraj/data.hpp"
#include "rtraj/losses.hpp"
#include "rtraj/models.hpp"
#include "rtraj/optim.hpp"

namespace rtraj {

enum class NetSide { Forward, Backward };
enum class Alternation { PerBatch, PerEpoch };

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 200;          // joint epochs; desk runs use far fewer
    std::size_t pretrain_epochs = 20;  // per network, before the joint loop
    double lambda = 0.5;
    double gan_weight = 1.0;
    Alternation alternation = Alternation::PerBatch;
    std::uint64_t seed = 1;
    AdamConfig adam;
    double grad_clip = 10.0;
    double divergence_threshold = 1e6;

    void validate() const;
};

struct LossRecord {
    std::string phase;  // "pretrain" or "joint"
    std::size_t epoch = 0;
    std::size_t batch = 0;
    char net = 'f';     // 'f' or 'b'
    double d_loss = 0.0;
    double g_loss = 0.0;
    double j_loss = 0.0;
    double total = 0.0;
};

struct PredictionNetwork {
    GeneratorParams gen;
    DiscriminatorParams disc;
};

struct TrainProgress {
    std::size_t pretrain_forward = 0;
    std::size_t pretrain_backward = 0;
    std::size_t joint = 0;
};

/// The coupled forward/backward networks with their optimizer state. The
/// backward network has the same structure with (in_steps, out_steps)
/// swapped. RNG substreams are re-derived per epoch from (seed, phase, net),
/// so training is deterministic and checkpoint/resume at epoch boundaries
/// reproduces an uninterrupted run exactly.
struct ReciprocalPair {
    ModelConfig model_cfg;  // forward-direction geometry
    TrainConfig train_cfg;
    PredictionNetwork forward;
    PredictionNetwork backward;
    Adam opt_fwd_gen, opt_fwd_disc, opt_bwd_gen, opt_bwd_disc;
    TrainProgress progress;
    std::vector<LossRecord> history;

    static ReciprocalPair init(const ModelConfig& model_cfg, const TrainConfig& train_cfg);

    PredictionNetwork& net(NetSide side) {
        return side == NetSide::Forward ? forward : backward;
    }
    const PredictionNetwork& net(NetSide side) const {
        return side == NetSide::Forward ? forward : backward;
    }
    /// All parameters with "fwd."/"bwd." prefixes, in checkpoint order.
    std::vector<std::pair<std::string, Tensor>> all_named_params() const;
};

/// Trains one side with the lambda = 1 objective on its own time direction
/// (the backward side consumes time-reversed samples) until that side's
/// pretrain progress counter reaches target_epochs. One history record per
/// batch.
void pretrain(ReciprocalPair& pair, NetSide side, const Dataset& data,
              std::size_t target_epochs);

/// Joint loop: depending on cfg.alternation, either a theta step then a phi
/// step on every batch, or full theta and phi sweeps per epoch. Each step
/// updates the active network's discriminator and generator in the usual
/// alternating GAN fashion; the partner's parameters are frozen inside the
/// reciprocal term. Aborts with NumericError when a batch loss exceeds
/// cfg.divergence_threshold.
void reciprocal_train(ReciprocalPair& pair, const Dataset& data, std::size_t target_epochs);

/// Pretrain both sides, then run the joint loop, honoring progress counters
/// already stored in the pair (checkpoint resume).
void train_pair(ReciprocalPair& pair, const Dataset& data);

/// Mean reconstruction error |X - G(F(X))| over a dataset (no gradients).
double reconstruction_error(const ReciprocalPair& pair, const Dataset& data,
                            std::uint64_t noise_seed);

// ---------------------------------------------------------------------------
// Checkpointing (see checkpoint.cpp for the binary layout)
// ---------------------------------------------------------------------------

/// Atomic write (temp file + rename). Versioned header with an architecture
/// hash, named f64 parameter blocks, optimizer state, config as JSON text.
void save_checkpoint(const ReciprocalPair& pair, const std::string& path);
ReciprocalPair load_checkpoint(const std::string& path);

}  // namespace rtraj
