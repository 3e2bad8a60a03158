#include "rtraj/models.hpp"

#include <cmath>
#include <sstream>

namespace rtraj {

std::string ModelConfig::describe() const {
    std::ostringstream os;
    os << "in=" << in_steps << " out=" << out_steps << " embed=" << embed_dim
       << " hidden=" << hidden_dim << " disc_hidden=" << disc_hidden_dim
       << " pool=" << pool_dim << " noise=" << noise_dim << " context=" << context_dim
       << " social_pooling=" << (social_pooling ? 1 : 0);
    return os.str();
}

namespace {

std::vector<double> uniform_init(std::size_t n, double bound, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return v;
}

}  // namespace

LinearParams LinearParams::init(std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    LinearParams p;
    p.w = Tensor({in, out}, uniform_init(in * out, bound, rng));
    p.b = Tensor({out}, uniform_init(out, bound, rng));
    p.w.set_requires_grad(true);
    p.b.set_requires_grad(true);
    return p;
}

LstmCellParams LstmCellParams::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    const std::size_t z = hidden_dim + input_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(z));
    auto gate_w = [&] {
        Tensor t({hidden_dim, z}, uniform_init(hidden_dim * z, bound, rng));
        t.set_requires_grad(true);
        return t;
    };
    auto gate_b = [&](double offset) {
        auto vals = uniform_init(hidden_dim, bound, rng);
        for (auto& v : vals) v += offset;
        Tensor t({hidden_dim}, std::move(vals));
        t.set_requires_grad(true);
        return t;
    };
    LstmCellParams p;
    p.w_input = gate_w();
    p.w_forget = gate_w();
    p.w_output = gate_w();
    p.w_candidate = gate_w();
    p.b_input = gate_b(0.0);
    p.b_forget = gate_b(1.0);  // open forget gate at init
    p.b_output = gate_b(0.0);
    p.b_candidate = gate_b(0.0);
    return p;
}

LstmState LstmState::zeros(std::size_t n_agents, std::size_t hidden_dim) {
    return {Tensor::zeros({n_agents, hidden_dim}), Tensor::zeros({n_agents, hidden_dim})};
}

namespace {

LstmState lstm_gates(const LstmCellParams& p, const Tensor& wt_i, const Tensor& wt_f,
                     const Tensor& wt_o, const Tensor& wt_c, const Tensor& x,
                     const LstmState& state) {
    if (x.rank() != 2 || x.cols() != p.input_dim()) {
        throw ShapeError("lstm_step: input " + shape_str(x.shape()) + " does not match cell (" +
                         std::to_string(p.input_dim()) + " inputs)");
    }
    if (state.h.shape() != Shape{x.rows(), p.hidden_dim()}) {
        throw ShapeError("lstm_step: state " + shape_str(state.h.shape()) +
                         " does not match input " + shape_str(x.shape()) + " and hidden size " +
                         std::to_string(p.hidden_dim()));
    }
    const Tensor z = concat({x, state.h}, 1);
    const Tensor i = sigmoid(add(matmul(z, wt_i), p.b_input));
    const Tensor f = sigmoid(add(matmul(z, wt_f), p.b_forget));
    const Tensor o = sigmoid(add(matmul(z, wt_o), p.b_output));
    const Tensor g = tanh(add(matmul(z, wt_c), p.b_candidate));
    const Tensor c = add(mul(f, state.c), mul(i, g));
    return {mul(o, tanh(c)), c};
}

}  // namespace

LstmState lstm_step(const LstmCellParams& p, const Tensor& x, const LstmState& state) {
    return lstm_gates(p, transpose(p.w_input), transpose(p.w_forget), transpose(p.w_output),
                      transpose(p.w_candidate), x, state);
}

LstmRunner::LstmRunner(const LstmCellParams& p)
    : p_(p),
      wt_input_(transpose(p.w_input)),
      wt_forget_(transpose(p.w_forget)),
      wt_output_(transpose(p.w_output)),
      wt_candidate_(transpose(p.w_candidate)) {}

LstmState LstmRunner::step(const Tensor& x, const LstmState& state) const {
    return lstm_gates(p_, wt_input_, wt_forget_, wt_output_, wt_candidate_, x, state);
}

Tensor social_pool(const LinearParams& pool_mlp, const Tensor& hidden, const Tensor& positions,
                   std::size_t target) {
    const std::size_t n = hidden.rows();
    if (target >= n) {
        throw ShapeError("social_pool: target " + std::to_string(target) + " out of range for " +
                         std::to_string(n) + " agents");
    }
    const std::size_t in_dim = 2 + hidden.cols();

    std::vector<Tensor> embeddings;
    if (n > 1) {
        std::vector<std::size_t> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != target) others.push_back(j);
        const Tensor target_pos = reshape(gather_rows(positions, {target}), {2});
        const Tensor rel = sub(gather_rows(positions, others), target_pos);
        const Tensor nb_hidden = gather_rows(hidden, others);
        embeddings.push_back(relu(pool_mlp.apply(concat({rel, nb_hidden}, 1))));
    }
    if (n < kMaxAgents) {
        // All absent slots are zero vectors; their identical embeddings
        // collapse into a single row under the max.
        embeddings.push_back(relu(pool_mlp.apply(Tensor::zeros({1, in_dim}))));
    }
    return max_over_axis(concat(embeddings, 0), 0);
}

GeneratorParams GeneratorParams::init(const ModelConfig& cfg, Rng& rng) {
    GeneratorParams p;
    p.cfg = cfg;
    p.embed = LinearParams::init(2, cfg.embed_dim, rng);
    p.encoder = LstmCellParams::init(cfg.embed_dim, cfg.hidden_dim, rng);
    p.pool_mlp = LinearParams::init(2 + cfg.hidden_dim, cfg.pool_dim, rng);
    p.merge = LinearParams::init(cfg.merge_in_dim(), cfg.hidden_dim, rng);
    p.decoder = LstmCellParams::init(cfg.embed_dim, cfg.hidden_dim, rng);
    p.out_proj = LinearParams::init(cfg.hidden_dim, 2, rng);
    return p;
}

namespace {

void collect_lstm(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                  const LstmCellParams& p) {
    out.emplace_back(prefix + ".w_input", p.w_input);
    out.emplace_back(prefix + ".w_forget", p.w_forget);
    out.emplace_back(prefix + ".w_output", p.w_output);
    out.emplace_back(prefix + ".w_candidate", p.w_candidate);
    out.emplace_back(prefix + ".b_input", p.b_input);
    out.emplace_back(prefix + ".b_forget", p.b_forget);
    out.emplace_back(prefix + ".b_output", p.b_output);
    out.emplace_back(prefix + ".b_candidate", p.b_candidate);
}

void collect_linear(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                    const LinearParams& p) {
    out.emplace_back(prefix + ".w", p.w);
    out.emplace_back(prefix + ".b", p.b);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> GeneratorParams::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    collect_linear(out, "embed", embed);
    collect_lstm(out, "encoder", encoder);
    collect_linear(out, "pool_mlp", pool_mlp);
    collect_linear(out, "merge", merge);
    collect_lstm(out, "decoder", decoder);
    collect_linear(out, "out_proj", out_proj);
    return out;
}

DiscriminatorParams DiscriminatorParams::init(const ModelConfig& cfg, Rng& rng) {
    DiscriminatorParams p;
    p.cfg = cfg;
    p.embed = LinearParams::init(2, cfg.embed_dim, rng);
    p.lstm = LstmCellParams::init(cfg.embed_dim, cfg.disc_hidden_dim, rng);
    p.head = LinearParams::init(cfg.disc_hidden_dim, 1, rng);
    return p;
}

std::vector<std::pair<std::string, Tensor>> DiscriminatorParams::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    collect_linear(out, "embed", embed);
    collect_lstm(out, "lstm", lstm);
    collect_linear(out, "head", head);
    return out;
}

// ---------------------------------------------------------------------------
// Sequence plumbing
// ---------------------------------------------------------------------------

StepSeq positions_to_steps(const std::vector<std::vector<Vec2>>& tracks) {
    if (tracks.empty()) return {};
    const std::size_t n = tracks.size();
    const std::size_t t_len = tracks[0].size();
    StepSeq steps;
    steps.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        std::vector<double> vals(n * 2);
        for (std::size_t a = 0; a < n; ++a) {
            vals[a * 2] = tracks[a][t].x;
            vals[a * 2 + 1] = tracks[a][t].y;
        }
        steps.emplace_back(Shape{n, 2}, std::move(vals));
    }
    return steps;
}

StepSeq to_displacements(const StepSeq& positions) {
    StepSeq out;
    out.reserve(positions.size());
    for (std::size_t t = 0; t < positions.size(); ++t) {
        if (t == 0) {
            out.push_back(Tensor::zeros(positions[0].shape()));
        } else {
            out.push_back(sub(positions[t], positions[t - 1]));
        }
    }
    return out;
}

StepSeq decode_positions(const Tensor& anchor, const StepSeq& displacements) {
    StepSeq out;
    out.reserve(displacements.size());
    Tensor pos = anchor;
    for (const auto& d : displacements) {
        pos = add(pos, d);
        out.push_back(pos);
    }
    return out;
}

StepSeq reverse_seq(StepSeq seq) {
    std::reverse(seq.begin(), seq.end());
    return seq;
}

Tensor flatten_seq(const StepSeq& seq) { return concat(seq, 0); }

StepSeq split_seq(const Tensor& flat, std::size_t steps) {
    const std::size_t n = flat.rows() / steps;
    StepSeq out;
    out.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::size_t> idx(n);
        for (std::size_t a = 0; a < n; ++a) idx[a] = t * n + a;
        out.push_back(gather_rows(flat, idx));
    }
    return out;
}

std::vector<std::vector<Vec2>> steps_to_tracks(const StepSeq& steps) {
    if (steps.empty()) return {};
    const std::size_t n = steps[0].rows();
    std::vector<std::vector<Vec2>> tracks(n, std::vector<Vec2>(steps.size()));
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const auto v = steps[t].values();
        for (std::size_t a = 0; a < n; ++a) tracks[a][t] = {v[a * 2], v[a * 2 + 1]};
    }
    return tracks;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

StepSeq generator_forward(const GeneratorParams& p, const StepSeq& observed_disp,
                          const Tensor& last_positions, const Tensor* context,
                          const Tensor& noise) {
    const auto& cfg = p.cfg;
    if (observed_disp.size() != cfg.in_steps) {
        throw ShapeError("generator_forward: got " + std::to_string(observed_disp.size()) +
                         " observed steps, model wants " + std::to_string(cfg.in_steps));
    }
    const std::size_t n = observed_disp[0].rows();
    if (noise.shape() != Shape{n, cfg.noise_dim}) {
        throw ShapeError("generator_forward: noise " + shape_str(noise.shape()) +
                         ", expected " + shape_str({n, cfg.noise_dim}));
    }

    // Encoder over embedded displacements.
    LstmRunner encoder(p.encoder);
    LstmState enc = LstmState::zeros(n, cfg.hidden_dim);
    for (const auto& d : observed_disp) {
        enc = encoder.step(p.embed.apply(d), enc);
    }

    // Social feature at the last observed positions.
    Tensor social;
    if (cfg.social_pooling) {
        std::vector<Tensor> rows;
        rows.reserve(n);
        for (std::size_t a = 0; a < n; ++a)
            rows.push_back(reshape(social_pool(p.pool_mlp, enc.h, last_positions, a),
                                   {1, cfg.pool_dim}));
        social = concat(rows, 0);
    } else {
        social = Tensor::zeros({n, cfg.pool_dim});
    }

    // Merge layer: decoder starts from a projection of [F_h, F_s, context, z].
    std::vector<Tensor> merged_parts{enc.h, social};
    if (cfg.context_dim > 0) {
        Tensor ctx = context ? *context : Tensor::zeros({cfg.context_dim});
        if (ctx.shape() != Shape{cfg.context_dim}) {
            throw ShapeError("generator_forward: context " + shape_str(ctx.shape()) +
                             ", expected " + shape_str({cfg.context_dim}));
        }
        merged_parts.push_back(
            gather_rows(reshape(ctx, {1, cfg.context_dim}), std::vector<std::size_t>(n, 0)));
    }
    merged_parts.push_back(noise);
    LstmState dec{p.merge.apply(concat(merged_parts, 1)), Tensor::zeros({n, cfg.hidden_dim})};

    // Autoregressive decoder: starts from the last observed displacement,
    // then feeds back its own outputs.
    LstmRunner decoder(p.decoder);
    StepSeq out;
    out.reserve(cfg.out_steps);
    Tensor prev_disp = observed_disp.back();
    for (std::size_t t = 0; t < cfg.out_steps; ++t) {
        dec = decoder.step(p.embed.apply(prev_disp), dec);
        Tensor d = p.out_proj.apply(dec.h);
        out.push_back(d);
        prev_disp = d;
    }

    for (const auto& d : out) {
        for (double v : d.values()) {
            if (std::isnan(v)) throw NumericError("generator_forward: NaN in output");
        }
    }
    return out;
}

Tensor discriminator_forward(const DiscriminatorParams& p, const StepSeq& full_positions) {
    const std::size_t want = p.cfg.in_steps + p.cfg.out_steps;
    if (full_positions.size() != want) {
        throw ShapeError("discriminator_forward: got " + std::to_string(full_positions.size()) +
                         " steps, expected " + std::to_string(want));
    }
    const std::size_t n = full_positions[0].rows();
    LstmRunner lstm(p.lstm);
    LstmState st = LstmState::zeros(n, p.cfg.disc_hidden_dim);
    for (const auto& d : to_displacements(full_positions)) {
        st = lstm.step(p.embed.apply(d), st);
    }
    return sigmoid(p.head.apply(st.h));
}

std::optional<Tensor> sample_context(const SceneSample& s, std::size_t context_dim) {
    if (context_dim == 0) return std::nullopt;
    if (s.context.empty()) return Tensor::zeros({context_dim});
    if (s.context.size() != context_dim) {
        throw ValidationError("sample context has dim " + std::to_string(s.context.size()) +
                              ", model wants " + std::to_string(context_dim));
    }
    return Tensor({context_dim}, s.context);
}

StepSeq predict_displacements(const GeneratorParams& p, const SceneSample& s, Rng& noise_rng) {
    const StepSeq obs = positions_to_steps(s.observed);
    const std::size_t n = s.agents();
    const Tensor noise({n, p.cfg.noise_dim}, noise_rng.normal_vec(n * p.cfg.noise_dim));
    const auto ctx = sample_context(s, p.cfg.context_dim);
    return generator_forward(p, to_displacements(obs), obs.back(), ctx ? &*ctx : nullptr, noise);
}

std::vector<std::vector<Vec2>> predict_positions(const GeneratorParams& p, const SceneSample& s,
                                                 Rng& noise_rng) {
    NoGradGuard no_grad;
    const StepSeq obs = positions_to_steps(s.observed);
    const StepSeq disp = predict_displacements(p, s, noise_rng);
    return steps_to_tracks(decode_positions(obs.back(), disp));
}

}  // namespace rtraj
