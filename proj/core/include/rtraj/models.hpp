#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtraj/data.hpp"
#include "rtraj/random.hpp"
#include "rtraj/tensor.hpp"

namespace rtraj {

/// Architecture of one prediction network. The forward and backward networks
/// share the structure and differ only in (in_steps, out_steps).
struct ModelConfig {
    std::size_t in_steps = kObservedSteps;
    std::size_t out_steps = kPredictedSteps;
    std::size_t embed_dim = 16;        // trajectory embedding MLP
    std::size_t hidden_dim = 32;       // generator encoder/decoder LSTM
    std::size_t disc_hidden_dim = 48;  // discriminator LSTM
    std::size_t pool_dim = 16;         // social pooling embedding
    std::size_t noise_dim = 8;
    std::size_t context_dim = 0;       // 0 disables the scene-context pathway
    bool social_pooling = true;

    ModelConfig reversed() const {
        ModelConfig r = *this;
        std::swap(r.in_steps, r.out_steps);
        return r;
    }
    std::size_t merge_in_dim() const {
        return hidden_dim + pool_dim + context_dim + noise_dim;
    }
    std::string describe() const;
};

/// Single linear layer, x (N x in) -> x*w + b (N x out).
struct LinearParams {
    Tensor w;  // in x out
    Tensor b;  // out

    static LinearParams init(std::size_t in, std::size_t out, Rng& rng);
    Tensor apply(const Tensor& x) const { return add(matmul(x, w), b); }
};

/// LSTM cell. Gate matrices are shaped hidden x (hidden + input) and applied
/// to the concatenation [x, h]; biases have length hidden. The forget bias is
/// initialized to +1.
struct LstmCellParams {
    Tensor w_input, w_forget, w_output, w_candidate;
    Tensor b_input, b_forget, b_output, b_candidate;

    static LstmCellParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
    std::size_t hidden_dim() const { return w_input.rows(); }
    std::size_t input_dim() const { return w_input.cols() - w_input.rows(); }
};

struct LstmState {
    Tensor h;
    Tensor c;
    static LstmState zeros(std::size_t n_agents, std::size_t hidden_dim);
};

/// One LSTM update on a batch of agent rows: x (N x input_dim),
/// state (N x H) -> new state.
LstmState lstm_step(const LstmCellParams& p, const Tensor& x, const LstmState& state);

/// Caches transposed gate weights for sequence loops.
class LstmRunner {
  public:
    explicit LstmRunner(const LstmCellParams& p);
    LstmState step(const Tensor& x, const LstmState& state) const;

  private:
    const LstmCellParams& p_;
    Tensor wt_input_, wt_forget_, wt_output_, wt_candidate_;
};

/// Permutation-invariant neighbor aggregation for one target agent: embeds
/// concat(pos_j - pos_target, h_j) for every other agent, folds the
/// (kMaxAgents - N) absent slots in as the embedding of the zero vector, and
/// takes the elementwise max. Returns a (pool_dim) vector.
Tensor social_pool(const LinearParams& pool_mlp, const Tensor& hidden /* N x H */,
                   const Tensor& positions /* N x 2 */, std::size_t target);

struct GeneratorParams {
    ModelConfig cfg;
    LinearParams embed;     // 2 -> embed_dim, shared by encoder and decoder inputs
    LstmCellParams encoder;
    LinearParams pool_mlp;  // (2 + hidden) -> pool_dim
    LinearParams merge;     // merge_in_dim -> hidden, decoder initial hidden state
    LstmCellParams decoder;
    LinearParams out_proj;  // hidden -> 2 displacement

    static GeneratorParams init(const ModelConfig& cfg, Rng& rng);
    std::vector<std::pair<std::string, Tensor>> named_params() const;
};

struct DiscriminatorParams {
    ModelConfig cfg;
    LinearParams embed;  // 2 -> embed_dim
    LstmCellParams lstm;
    LinearParams head;   // disc_hidden -> 1

    static DiscriminatorParams init(const ModelConfig& cfg, Rng& rng);
    std::vector<std::pair<std::string, Tensor>> named_params() const;
};

// ---------------------------------------------------------------------------
// Sequence plumbing
// ---------------------------------------------------------------------------
// Networks consume per-step displacements and emit displacements; absolute
// positions are rebuilt by cumulative sums from an anchor (the last observed
// position). A sequence is a vector of (N x 2) tensors, one per step.

using StepSeq = std::vector<Tensor>;

/// Constant tensors from sample tracks: step t holds all agents' positions.
StepSeq positions_to_steps(const std::vector<std::vector<Vec2>>& tracks);

/// d_0 = 0, d_t = p_t - p_{t-1}.
StepSeq to_displacements(const StepSeq& positions);

/// p_t = anchor + d_1 + ... + d_t (every step is a real displacement here,
/// including the first, which is taken relative to the anchor).
StepSeq decode_positions(const Tensor& anchor, const StepSeq& displacements);

StepSeq reverse_seq(StepSeq seq);

/// Flattens a sequence into ((T*N) x 2), step-major.
Tensor flatten_seq(const StepSeq& seq);
/// Splits a ((T*N) x 2) tensor back into T steps of N agents.
StepSeq split_seq(const Tensor& flat, std::size_t steps);

/// Plain-value view of a prediction for metrics ([agent][t]).
std::vector<std::vector<Vec2>> steps_to_tracks(const StepSeq& steps);

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

/// Noise-conditioned prediction. Encodes the observed displacement sequence,
/// pools neighbors at the last observed positions, merges [F_h, F_s, context,
/// z] into the decoder initial hidden state, and autoregressively emits
/// cfg.out_steps displacement rows anchored at `last_positions`.
///
/// `observed_disp` must hold cfg.in_steps tensors of shape (N x 2) with the
/// d_0 = 0 convention; `noise` is (N x noise_dim); `context`, when the model
/// has a context pathway, is a (context_dim) vector (nullptr means zeros).
/// Raises NumericError if the output contains NaN.
StepSeq generator_forward(const GeneratorParams& p, const StepSeq& observed_disp,
                          const Tensor& last_positions, const Tensor* context,
                          const Tensor& noise);

/// Classifies a full observed+predicted trajectory (absolute positions,
/// in_steps + out_steps entries) into per-agent scores in (0,1), shape (N x 1).
Tensor discriminator_forward(const DiscriminatorParams& p, const StepSeq& full_positions);

// Sample-level conveniences -------------------------------------------------

/// Context tensor for a sample: the sample's vector when present, zeros when
/// absent; ValidationError on a dimension mismatch. Returns nullopt when the
/// model has no context pathway.
std::optional<Tensor> sample_context(const SceneSample& s, std::size_t context_dim);

/// Runs the generator on a sample's observed tracks with freshly drawn noise.
/// Returns predicted displacement steps (graph tensors).
StepSeq predict_displacements(const GeneratorParams& p, const SceneSample& s, Rng& noise_rng);

/// Full prediction to plain positions ([agent][t]) for evaluation.
std::vector<std::vector<Vec2>> predict_positions(const GeneratorParams& p, const SceneSample& s,
                                                 Rng& noise_rng);

}  // namespace rtraj
