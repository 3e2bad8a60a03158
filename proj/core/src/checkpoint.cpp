#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"
#include "rtraj/training.hpp"

// Checkpoint format, version 1 (little-endian):
//   bytes 0..7  magic "RTRJCKPT"
//   u32         format version (1)
//   u64         architecture hash (FNV-1a of ModelConfig::describe())
//   u64         config JSON length, then that many bytes of JSON
//               (model config, train config, progress counters)
//   u32         parameter block count
//   per block:  u32 name length, name bytes, u32 rank, rank x u64 dims,
//               numel x f64 raw values
//   u32         optimizer count (4)
//   per opt:    u32 name length, name bytes, u64 step count,
//               u32 slot count, per slot: u64 length, f64 m values,
//               u64 length, f64 v values

namespace rtraj {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'R', 'T', 'R', 'J', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError(std::string("checkpoint: truncated file while reading ") + what);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const char* what) {
    const auto len = read_pod<std::uint32_t>(in, what);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw IoError(std::string("checkpoint: truncated file while reading ") + what);
    return s;
}

void write_doubles(std::ostream& out, std::span<const double> v) {
    write_pod<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& in, const char* what) {
    const auto len = read_pod<std::uint64_t>(in, what);
    std::vector<double> v(len);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    if (!in) throw IoError(std::string("checkpoint: truncated file while reading ") + what);
    return v;
}

json model_to_json(const ModelConfig& m) {
    return json{{"in_steps", m.in_steps},         {"out_steps", m.out_steps},
                {"embed_dim", m.embed_dim},       {"hidden_dim", m.hidden_dim},
                {"disc_hidden_dim", m.disc_hidden_dim}, {"pool_dim", m.pool_dim},
                {"noise_dim", m.noise_dim},       {"context_dim", m.context_dim},
                {"social_pooling", m.social_pooling}};
}

ModelConfig model_from_json(const json& j) {
    ModelConfig m;
    m.in_steps = j.at("in_steps");
    m.out_steps = j.at("out_steps");
    m.embed_dim = j.at("embed_dim");
    m.hidden_dim = j.at("hidden_dim");
    m.disc_hidden_dim = j.at("disc_hidden_dim");
    m.pool_dim = j.at("pool_dim");
    m.noise_dim = j.at("noise_dim");
    m.context_dim = j.at("context_dim");
    m.social_pooling = j.at("social_pooling");
    return m;
}

json train_to_json(const TrainConfig& t) {
    return json{{"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"pretrain_epochs", t.pretrain_epochs},
                {"lambda", t.lambda},
                {"gan_weight", t.gan_weight},
                {"alternation", t.alternation == Alternation::PerBatch ? "per-batch" : "per-epoch"},
                {"seed", t.seed},
                {"lr", t.adam.lr},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"adam_eps", t.adam.eps},
                {"grad_clip", t.grad_clip},
                {"divergence_threshold", t.divergence_threshold}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    t.batch_size = j.at("batch_size");
    t.epochs = j.at("epochs");
    t.pretrain_epochs = j.at("pretrain_epochs");
    t.lambda = j.at("lambda");
    t.gan_weight = j.at("gan_weight");
    t.alternation = j.at("alternation") == "per-epoch" ? Alternation::PerEpoch
                                                       : Alternation::PerBatch;
    t.seed = j.at("seed");
    t.adam.lr = j.at("lr");
    t.adam.beta1 = j.at("beta1");
    t.adam.beta2 = j.at("beta2");
    t.adam.eps = j.at("adam_eps");
    t.grad_clip = j.at("grad_clip");
    t.divergence_threshold = j.at("divergence_threshold");
    return t;
}

void write_optimizer(std::ostream& out, const std::string& name, const Adam& opt) {
    write_string(out, name);
    const auto snap = opt.snapshot();
    write_pod<std::uint64_t>(out, snap.step);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(snap.m.size()));
    for (std::size_t k = 0; k < snap.m.size(); ++k) {
        write_doubles(out, snap.m[k]);
        write_doubles(out, snap.v[k]);
    }
}

void read_optimizer(std::istream& in, const std::string& expect_name, Adam& opt) {
    const std::string name = read_string(in, "optimizer name");
    if (name != expect_name) {
        throw IoError("checkpoint: expected optimizer '" + expect_name + "', found '" + name +
                      "'");
    }
    Adam::Snapshot snap;
    snap.step = read_pod<std::uint64_t>(in, "optimizer step");
    const auto slots = read_pod<std::uint32_t>(in, "optimizer slot count");
    snap.m.resize(slots);
    snap.v.resize(slots);
    for (std::uint32_t k = 0; k < slots; ++k) {
        snap.m[k] = read_doubles(in, "optimizer m");
        snap.v[k] = read_doubles(in, "optimizer v");
    }
    opt.restore(snap);
}

}  // namespace

void save_checkpoint(const ReciprocalPair& pair, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(kMagic, sizeof(kMagic));
        write_pod<std::uint32_t>(out, kVersion);
        write_pod<std::uint64_t>(out, hash_label(pair.model_cfg.describe()));

        json cfg{{"model", model_to_json(pair.model_cfg)},
                 {"train", train_to_json(pair.train_cfg)},
                 {"progress",
                  {{"pretrain_forward", pair.progress.pretrain_forward},
                   {"pretrain_backward", pair.progress.pretrain_backward},
                   {"joint", pair.progress.joint}}}};
        const std::string cfg_text = cfg.dump();
        write_pod<std::uint64_t>(out, cfg_text.size());
        out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

        const auto params = pair.all_named_params();
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
        for (const auto& [name, t] : params) {
            write_string(out, name);
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
            for (auto d : t.shape()) write_pod<std::uint64_t>(out, d);
            out.write(reinterpret_cast<const char*>(t.values().data()),
                      static_cast<std::streamsize>(t.size() * sizeof(double)));
        }

        write_pod<std::uint32_t>(out, 4);
        write_optimizer(out, "fwd.gen", pair.opt_fwd_gen);
        write_optimizer(out, "fwd.disc", pair.opt_fwd_disc);
        write_optimizer(out, "bwd.gen", pair.opt_bwd_gen);
        write_optimizer(out, "bwd.disc", pair.opt_bwd_disc);
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

ReciprocalPair load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version) +
                      " (reader supports " + std::to_string(kVersion) + ", no migration)");
    }
    const auto arch_hash = read_pod<std::uint64_t>(in, "architecture hash");

    const auto cfg_len = read_pod<std::uint64_t>(in, "config length");
    std::string cfg_text(cfg_len, '\0');
    in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw IoError("checkpoint: truncated config block");

    json cfg;
    try {
        cfg = json::parse(cfg_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: corrupt config block: ") + e.what());
    }
    const ModelConfig model_cfg = model_from_json(cfg.at("model"));
    const TrainConfig train_cfg = train_from_json(cfg.at("train"));
    if (hash_label(model_cfg.describe()) != arch_hash) {
        throw IoError("checkpoint: architecture hash does not match declared config");
    }

    ReciprocalPair pair = ReciprocalPair::init(model_cfg, train_cfg);
    pair.progress.pretrain_forward = cfg.at("progress").at("pretrain_forward");
    pair.progress.pretrain_backward = cfg.at("progress").at("pretrain_backward");
    pair.progress.joint = cfg.at("progress").at("joint");

    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : pair.all_named_params()) by_name.emplace(name, t);

    const auto n_blocks = read_pod<std::uint32_t>(in, "block count");
    if (n_blocks != by_name.size()) {
        throw IoError("checkpoint: has " + std::to_string(n_blocks) + " parameter blocks, " +
                      "architecture declares " + std::to_string(by_name.size()));
    }
    for (std::uint32_t i = 0; i < n_blocks; ++i) {
        const std::string name = read_string(in, "parameter name");
        const auto rank = read_pod<std::uint32_t>(in, "parameter rank");
        Shape shape(rank);
        for (auto& d : shape) d = read_pod<std::uint64_t>(in, "parameter dim");
        auto it = by_name.find(name);
        if (it == by_name.end()) throw IoError("checkpoint: unknown parameter '" + name + "'");
        if (it->second.shape() != shape) {
            throw IoError("checkpoint: parameter '" + name + "' has shape " + shape_str(shape) +
                          ", architecture declares " + shape_str(it->second.shape()));
        }
        auto dst = it->second.values_mut();
        in.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.size() * sizeof(double)));
        if (!in) throw IoError("checkpoint: truncated parameter '" + name + "'");
    }

    const auto n_opts = read_pod<std::uint32_t>(in, "optimizer count");
    if (n_opts != 4) throw IoError("checkpoint: expected 4 optimizers");
    read_optimizer(in, "fwd.gen", pair.opt_fwd_gen);
    read_optimizer(in, "fwd.disc", pair.opt_fwd_disc);
    read_optimizer(in, "bwd.gen", pair.opt_bwd_gen);
    read_optimizer(in, "bwd.disc", pair.opt_bwd_disc);
    return pair;
}

}  // namespace rtraj
