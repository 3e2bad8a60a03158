// rtraj: synthetic data generation, reciprocal training, evaluation, and
// matched-prediction refinement for 2-D agent trajectories.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime or numeric error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtraj/baselines.hpp"
#include "rtraj/evaluation.hpp"
#include "rtraj/social_force.hpp"
#include "rtraj/training.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtraj;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Output root: --out-dir flag beats RTRAJ_OUT_ROOT beats ./rtraj-out.
std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RTRAJ_OUT_ROOT")) return env;
    return "rtraj-out";
}

fs::path ensure_out_dir(const std::string& flag_value) {
    const fs::path dir = resolve_out_dir(flag_value);
    fs::create_directories(dir);
    return dir;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config file " + path + ": " + e.what());
    }
}

// Values from --config apply only where the flag was not given explicitly.
template <typename T>
void cfg_override(const CLI::App& app, const json& cfg, const std::string& flag,
                  const std::string& key, T& var) {
    if (cfg.is_null() || !cfg.contains(key)) return;
    if (app.count(flag) > 0) return;
    var = cfg.at(key).get<T>();
}

void write_resolved_config(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Dataset load_merged(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ValidationError("no dataset given");
    Dataset merged = load_any(paths[0]);
    for (std::size_t i = 1; i < paths.size(); ++i) {
        Dataset next = load_any(paths[i]);
        if (next.t_obs != merged.t_obs || next.t_pred != merged.t_pred ||
            next.context_dim != merged.context_dim) {
            throw ValidationError("dataset " + paths[i] +
                                  " has a different window geometry or context dim");
        }
        merged.samples.insert(merged.samples.end(),
                              std::make_move_iterator(next.samples.begin()),
                              std::make_move_iterator(next.samples.end()));
    }
    return merged;
}

void write_loss_history(const fs::path& path, const std::vector<LossRecord>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "phase,epoch,batch,net,d_loss,g_loss,j_loss,total\n";
    for (const auto& r : history) {
        out << r.phase << ',' << r.epoch << ',' << r.batch << ',' << r.net << ','
            << fmt(r.d_loss) << ',' << fmt(r.g_loss) << ',' << fmt(r.j_loss) << ','
            << fmt(r.total) << '\n';
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOpts {
    std::string out_dir;
    std::string config_file;
    std::string name = "synthetic";
    SocialForceConfig sf;
};

void run_generate(const CLI::App& app, GenerateOpts& o) {
    if (!o.config_file.empty()) {
        const json cfg = load_config_file(o.config_file);
        cfg_override(app, cfg, "--scenes", "scenes", o.sf.n_scenes);
        cfg_override(app, cfg, "--agents", "agents", o.sf.agents_per_scene);
        cfg_override(app, cfg, "--seed", "seed", o.sf.seed);
        cfg_override(app, cfg, "--arena", "arena", o.sf.arena_size);
        cfg_override(app, cfg, "--goal-gain", "goal_gain", o.sf.goal_gain);
        cfg_override(app, cfg, "--repulsion", "repulsion", o.sf.repulsion_strength);
        cfg_override(app, cfg, "--repulsion-range", "repulsion_range", o.sf.repulsion_range);
        cfg_override(app, cfg, "--max-speed", "max_speed", o.sf.max_speed);
        cfg_override(app, cfg, "--context-dim", "context_dim", o.sf.context_dim);
        cfg_override(app, cfg, "--name", "name", o.name);
    }
    const fs::path out = ensure_out_dir(o.out_dir);
    const Dataset ds = generate_social_force(o.sf);
    const fs::path ds_path = out / (o.name + ".ds");
    save_dataset(ds, ds_path.string());

    const json resolved{{"scenes", o.sf.n_scenes},
                        {"agents", o.sf.agents_per_scene},
                        {"seed", o.sf.seed},
                        {"arena", o.sf.arena_size},
                        {"goal_gain", o.sf.goal_gain},
                        {"repulsion", o.sf.repulsion_strength},
                        {"repulsion_range", o.sf.repulsion_range},
                        {"max_speed", o.sf.max_speed},
                        {"context_dim", o.sf.context_dim},
                        {"name", o.name},
                        {"samples", ds.samples.size()},
                        {"dataset", ds_path.string()}};
    write_resolved_config(out / (o.name + ".manifest.json"), resolved);
    std::cout << "wrote " << ds_path.string() << " (" << ds.samples.size() << " scenes)\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string out_dir;
    std::string config_file;
    std::vector<std::string> data;
    std::string mode = "reciprocal";  // reciprocal | baseline | lstm
    std::string resume;
    std::string ckpt_name = "checkpoint.ckpt";
    TrainConfig train;
    std::string alternation = "per-batch";
    ModelConfig model;
};

TrainConfig resolve_train_config(const TrainOpts& o, bool lambda_given) {
    TrainConfig t = o.train;
    t.alternation =
        o.alternation == "per-epoch" ? Alternation::PerEpoch : Alternation::PerBatch;
    if (o.mode == "baseline" || o.mode == "lstm") {
        if (lambda_given && t.lambda != 1.0) {
            throw ValidationError("--lambda conflicts with --mode " + o.mode +
                                  " (the non-reciprocal modes fix lambda = 1)");
        }
        t.lambda = 1.0;
    }
    if (o.mode == "lstm") t.gan_weight = 0.0;
    t.validate();
    return t;
}

void run_train(const CLI::App& app, TrainOpts& o) {
    if (!o.config_file.empty()) {
        const json cfg = load_config_file(o.config_file);
        cfg_override(app, cfg, "--data", "data", o.data);
        cfg_override(app, cfg, "--mode", "mode", o.mode);
        cfg_override(app, cfg, "--lambda", "lambda", o.train.lambda);
        cfg_override(app, cfg, "--gan-weight", "gan_weight", o.train.gan_weight);
        cfg_override(app, cfg, "--epochs", "epochs", o.train.epochs);
        cfg_override(app, cfg, "--pretrain-epochs", "pretrain_epochs", o.train.pretrain_epochs);
        cfg_override(app, cfg, "--batch-size", "batch_size", o.train.batch_size);
        cfg_override(app, cfg, "--seed", "seed", o.train.seed);
        cfg_override(app, cfg, "--lr", "lr", o.train.adam.lr);
        cfg_override(app, cfg, "--alternation", "alternation", o.alternation);
        cfg_override(app, cfg, "--ckpt", "ckpt", o.ckpt_name);
        cfg_override(app, cfg, "--hidden", "hidden_dim", o.model.hidden_dim);
        cfg_override(app, cfg, "--disc-hidden", "disc_hidden_dim", o.model.disc_hidden_dim);
        cfg_override(app, cfg, "--embed", "embed_dim", o.model.embed_dim);
        cfg_override(app, cfg, "--pool", "pool_dim", o.model.pool_dim);
        cfg_override(app, cfg, "--noise", "noise_dim", o.model.noise_dim);
    }
    const fs::path out = ensure_out_dir(o.out_dir);
    const Dataset data = load_merged(o.data);

    ReciprocalPair pair = [&] {
        if (!o.resume.empty()) {
            const bool model_flags = app.count("--hidden") || app.count("--disc-hidden") ||
                                     app.count("--embed") || app.count("--pool") ||
                                     app.count("--noise") || app.count("--mode") ||
                                     app.count("--lambda");
            if (model_flags) {
                throw ValidationError(
                    "--resume restores the checkpoint's model and objective; drop the "
                    "conflicting flags (only --epochs/--pretrain-epochs may override)");
            }
            ReciprocalPair p = load_checkpoint(o.resume);
            if (app.count("--epochs")) p.train_cfg.epochs = o.train.epochs;
            if (app.count("--pretrain-epochs"))
                p.train_cfg.pretrain_epochs = o.train.pretrain_epochs;
            return p;
        }
        const TrainConfig t = resolve_train_config(o, app.count("--lambda") > 0);
        ModelConfig m = o.model;
        m.in_steps = data.t_obs;
        m.out_steps = data.t_pred;
        m.context_dim = data.context_dim;
        m.social_pooling = o.mode != "lstm";
        return ReciprocalPair::init(m, t);
    }();

    if (pair.model_cfg.in_steps != data.t_obs || pair.model_cfg.out_steps != data.t_pred ||
        pair.model_cfg.context_dim != data.context_dim) {
        throw ValidationError("dataset geometry does not match the model configuration");
    }

    train_pair(pair, data);

    const fs::path ckpt_path = out / o.ckpt_name;
    save_checkpoint(pair, ckpt_path.string());
    write_loss_history(out / "loss_history.csv", pair.history);

    const json resolved{{"data", o.data},
                        {"mode", o.mode},
                        {"lambda", pair.train_cfg.lambda},
                        {"gan_weight", pair.train_cfg.gan_weight},
                        {"epochs", pair.train_cfg.epochs},
                        {"pretrain_epochs", pair.train_cfg.pretrain_epochs},
                        {"batch_size", pair.train_cfg.batch_size},
                        {"seed", pair.train_cfg.seed},
                        {"lr", pair.train_cfg.adam.lr},
                        {"alternation", pair.train_cfg.alternation == Alternation::PerBatch
                                            ? "per-batch"
                                            : "per-epoch"},
                        {"hidden_dim", pair.model_cfg.hidden_dim},
                        {"disc_hidden_dim", pair.model_cfg.disc_hidden_dim},
                        {"embed_dim", pair.model_cfg.embed_dim},
                        {"pool_dim", pair.model_cfg.pool_dim},
                        {"noise_dim", pair.model_cfg.noise_dim},
                        {"context_dim", pair.model_cfg.context_dim},
                        {"social_pooling", pair.model_cfg.social_pooling},
                        {"ckpt", ckpt_path.string()}};
    write_resolved_config(out / "train_config.json", resolved);
    std::cout << "wrote " << ckpt_path.string() << "\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string out_dir;
    std::string config_file;
    std::string ckpt;
    std::vector<std::string> data;
    std::vector<std::string> loo;
    std::size_t k = 20;
    std::uint64_t seed = 1;
    double collision_threshold = 0.1;
    std::size_t plots = 0;
    std::size_t threads = 0;
    bool linear_baseline = false;
    // training settings for --loo folds
    TrainOpts fold_train;
};

void emit_plots(const fs::path& dir, const GeneratorParams& gen, const Dataset& data,
                std::size_t count, std::size_t k, std::uint64_t seed) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < std::min(count, data.samples.size()); ++i) {
        const SceneSample& s = data.samples[i];
        Rng rng = derive_rng(seed, "eval/noise", i);
        std::vector<Tracks> preds;
        for (std::size_t j = 0; j < k; ++j) preds.push_back(predict_positions(gen, s, rng));
        const BestOfK best = best_of_k(preds, s.future);
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04zu.svg", i);
        tools::write_scene_svg((dir / name).string(), s, preds[best.best_index]);
    }
}

void run_eval(const CLI::App& app, EvalOpts& o) {
    if (!o.config_file.empty()) {
        const json cfg = load_config_file(o.config_file);
        cfg_override(app, cfg, "--ckpt", "ckpt", o.ckpt);
        cfg_override(app, cfg, "--data", "data", o.data);
        cfg_override(app, cfg, "--k", "k", o.k);
        cfg_override(app, cfg, "--seed", "seed", o.seed);
        cfg_override(app, cfg, "--collision-threshold", "collision_threshold",
                     o.collision_threshold);
        cfg_override(app, cfg, "--plots", "plots", o.plots);
        cfg_override(app, cfg, "--linear", "linear", o.linear_baseline);
    }
    const fs::path out = ensure_out_dir(o.out_dir);

    if (!o.loo.empty()) {
        // Leave-one-out: train on all folds but one, evaluate on the rest.
        if (o.loo.size() < 2) throw ValidationError("--loo needs at least two datasets");
        std::ofstream table(out / "loo_report.csv");
        if (!table) throw IoError("cannot write loo_report.csv");
        table << "fold,dataset,ade,fde,collision_pct\n";
        double ade_sum = 0, fde_sum = 0, col_sum = 0;
        for (std::size_t fold = 0; fold < o.loo.size(); ++fold) {
            std::vector<std::string> train_paths;
            for (std::size_t i = 0; i < o.loo.size(); ++i) {
                if (i != fold) train_paths.push_back(o.loo[i]);
            }
            const Dataset train_data = load_merged(train_paths);
            const Dataset test_data = load_any(o.loo[fold]);

            TrainConfig t = resolve_train_config(o.fold_train, false);
            t.seed = o.fold_train.train.seed + fold;
            ModelConfig m = o.fold_train.model;
            m.in_steps = train_data.t_obs;
            m.out_steps = train_data.t_pred;
            m.context_dim = train_data.context_dim;
            m.social_pooling = o.fold_train.mode != "lstm";
            ReciprocalPair pair = ReciprocalPair::init(m, t);
            train_pair(pair, train_data);

            EvalOptions eo{o.k, o.seed, o.collision_threshold, o.threads};
            const EvalReport rep = evaluate(pair.forward.gen, test_data, eo);
            table << fold << ',' << o.loo[fold] << ',' << fmt(rep.ade) << ',' << fmt(rep.fde)
                  << ',' << fmt(rep.collision_pct) << '\n';
            ade_sum += rep.ade;
            fde_sum += rep.fde;
            col_sum += rep.collision_pct;
        }
        const double n = static_cast<double>(o.loo.size());
        table << "avg,," << fmt(ade_sum / n) << ',' << fmt(fde_sum / n) << ','
              << fmt(col_sum / n) << '\n';
        std::cout << "wrote " << (out / "loo_report.csv").string() << "\n";
        return;
    }

    const Dataset data = load_merged(o.data);
    EvalReport rep;
    ReciprocalPair pair;
    if (o.linear_baseline) {
        rep = evaluate_linear(data, o.collision_threshold);
    } else {
        if (o.ckpt.empty()) throw ValidationError("--ckpt is required (or --linear)");
        pair = load_checkpoint(o.ckpt);
        if (pair.model_cfg.in_steps != data.t_obs || pair.model_cfg.out_steps != data.t_pred) {
            throw ValidationError("dataset geometry does not match the checkpoint");
        }
        EvalOptions eo{o.k, o.seed, o.collision_threshold, o.threads};
        rep = evaluate(pair.forward.gen, data, eo);
    }
    rep.write_csv((out / "report.csv").string());
    rep.write_text((out / "report.txt").string());
    if (o.plots > 0 && !o.linear_baseline) {
        emit_plots(out / "plots", pair.forward.gen, data, o.plots, o.k, o.seed);
    }

    const json resolved{{"ckpt", o.ckpt},
                        {"data", o.data},
                        {"k", o.k},
                        {"seed", o.seed},
                        {"collision_threshold", o.collision_threshold},
                        {"plots", o.plots},
                        {"linear", o.linear_baseline}};
    write_resolved_config(out / "eval_config.json", resolved);
    std::cout << rep.to_text();
}

// ---------------------------------------------------------------------------
// attack-eval
// ---------------------------------------------------------------------------

struct AttackEvalOpts {
    std::string out_dir;
    std::string config_file;
    std::string ckpt;
    std::vector<std::string> data;
    std::size_t k = 1;
    std::uint64_t seed = 1;
    double collision_threshold = 0.1;
    std::size_t threads = 0;
    AttackConfig attack;
};

void run_attack_eval(const CLI::App& app, AttackEvalOpts& o) {
    if (!o.config_file.empty()) {
        const json cfg = load_config_file(o.config_file);
        cfg_override(app, cfg, "--ckpt", "ckpt", o.ckpt);
        cfg_override(app, cfg, "--data", "data", o.data);
        cfg_override(app, cfg, "--k", "k", o.k);
        cfg_override(app, cfg, "--seed", "seed", o.seed);
        cfg_override(app, cfg, "--iterations", "iterations", o.attack.iterations);
        cfg_override(app, cfg, "--epsilon", "epsilon", o.attack.epsilon);
        cfg_override(app, cfg, "--alpha", "alpha", o.attack.alpha);
        cfg_override(app, cfg, "--collision-threshold", "collision_threshold",
                     o.collision_threshold);
    }
    const fs::path out = ensure_out_dir(o.out_dir);
    if (o.ckpt.empty()) throw ValidationError("--ckpt is required");
    const Dataset data = load_merged(o.data);
    const ReciprocalPair pair = load_checkpoint(o.ckpt);
    if (pair.model_cfg.in_steps != data.t_obs || pair.model_cfg.out_steps != data.t_pred) {
        throw ValidationError("dataset geometry does not match the checkpoint");
    }

    EvalOptions eo{o.k, o.seed, o.collision_threshold, o.threads};
    const AttackEvalResult res = attack_evaluate(pair, data, eo, o.attack);

    res.pre.write_csv((out / "pre_report.csv").string());
    res.post.write_csv((out / "post_report.csv").string());
    {
        std::ofstream txt(out / "attack_report.txt");
        txt << "pre-attack\n" << res.pre.to_text() << "\npost-attack\n" << res.post.to_text();
    }
    {
        std::ofstream curves(out / "e_curves.csv");
        if (!curves) throw IoError("cannot write e_curves.csv");
        curves << "scene,iteration,e,ade\n";
        for (std::size_t i = 0; i < res.e_curves.size(); ++i) {
            for (std::size_t m = 0; m < res.e_curves[i].size(); ++m) {
                curves << i << ',' << m << ',' << fmt(res.e_curves[i][m]) << ','
                       << fmt(res.ade_curves[i][m]) << '\n';
            }
        }
    }

    const json resolved{{"ckpt", o.ckpt},          {"data", o.data},
                        {"k", o.k},                {"seed", o.seed},
                        {"iterations", o.attack.iterations}, {"epsilon", o.attack.epsilon},
                        {"alpha", o.attack.alpha}, {"collision_threshold", o.collision_threshold}};
    write_resolved_config(out / "attack_eval_config.json", resolved);
    std::cout << "pre-attack\n" << res.pre.to_text() << "\npost-attack\n" << res.post.to_text();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reciprocal trajectory prediction"};
    app.require_subcommand(1);

    GenerateOpts gen_o;
    CLI::App* gen = app.add_subcommand("generate", "synthesize a social-force dataset");
    gen->add_option("--scenes", gen_o.sf.n_scenes, "number of scenes");
    gen->add_option("--agents", gen_o.sf.agents_per_scene, "agents per scene (max 32)");
    gen->add_option("--seed", gen_o.sf.seed, "rng seed");
    gen->add_option("--arena", gen_o.sf.arena_size, "spawn circle diameter, meters");
    gen->add_option("--goal-gain", gen_o.sf.goal_gain, "goal attraction gain");
    gen->add_option("--repulsion", gen_o.sf.repulsion_strength, "pairwise repulsion strength");
    gen->add_option("--repulsion-range", gen_o.sf.repulsion_range, "repulsion range, meters");
    gen->add_option("--max-speed", gen_o.sf.max_speed, "speed cap, m/s");
    gen->add_option("--context-dim", gen_o.sf.context_dim, "synthetic context feature dim");
    gen->add_option("--name", gen_o.name, "dataset base name");
    gen->add_option("--out-dir,-o", gen_o.out_dir, "output directory");
    gen->add_option("--config", gen_o.config_file, "JSON config with defaults");

    TrainOpts train_o;
    CLI::App* train = app.add_subcommand("train", "train a reciprocal pair");
    train->add_option("--data", train_o.data, "dataset file(s) (.ds or ETH/UCY .txt)");
    train->add_option("--mode", train_o.mode, "reciprocal | baseline | lstm")
        ->check(CLI::IsMember({"reciprocal", "baseline", "lstm"}));
    train->add_option("--lambda", train_o.train.lambda, "prediction/reciprocal weight");
    train->add_option("--gan-weight", train_o.train.gan_weight, "adversarial loss weight");
    train->add_option("--epochs", train_o.train.epochs, "joint epochs");
    train->add_option("--pretrain-epochs", train_o.train.pretrain_epochs,
                      "independent pretraining epochs per network");
    train->add_option("--batch-size", train_o.train.batch_size, "batch size");
    train->add_option("--seed", train_o.train.seed, "rng seed");
    train->add_option("--lr", train_o.train.adam.lr, "Adam learning rate");
    train->add_option("--alternation", train_o.alternation, "per-batch | per-epoch")
        ->check(CLI::IsMember({"per-batch", "per-epoch"}));
    train->add_option("--hidden", train_o.model.hidden_dim, "generator LSTM hidden size");
    train->add_option("--disc-hidden", train_o.model.disc_hidden_dim,
                      "discriminator LSTM hidden size");
    train->add_option("--embed", train_o.model.embed_dim, "trajectory embedding dim");
    train->add_option("--pool", train_o.model.pool_dim, "social pooling dim");
    train->add_option("--noise", train_o.model.noise_dim, "noise vector dim");
    train->add_option("--resume", train_o.resume, "checkpoint to resume from");
    train->add_option("--ckpt", train_o.ckpt_name, "checkpoint filename");
    train->add_option("--out-dir,-o", train_o.out_dir, "output directory");
    train->add_option("--config", train_o.config_file, "JSON config with defaults");

    EvalOpts eval_o;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint (ADE/FDE/collisions)");
    ev->add_option("--ckpt", eval_o.ckpt, "checkpoint file");
    ev->add_option("--data", eval_o.data, "test dataset file(s)");
    ev->add_option("--k", eval_o.k, "best-of-K samples per scene");
    ev->add_option("--seed", eval_o.seed, "noise seed");
    ev->add_option("--collision-threshold", eval_o.collision_threshold,
                   "near-collision distance, meters");
    ev->add_option("--plots", eval_o.plots, "emit SVG plots for the first N scenes");
    ev->add_option("--threads", eval_o.threads, "worker threads (0 = auto)");
    ev->add_flag("--linear", eval_o.linear_baseline, "evaluate the linear baseline instead");
    ev->add_option("--loo", eval_o.loo,
                   "leave-one-out over these datasets (train on the rest, test on each)");
    ev->add_option("--epochs", eval_o.fold_train.train.epochs, "joint epochs for --loo folds");
    ev->add_option("--pretrain-epochs", eval_o.fold_train.train.pretrain_epochs,
                   "pretraining epochs for --loo folds");
    ev->add_option("--batch-size", eval_o.fold_train.train.batch_size,
                   "batch size for --loo folds");
    ev->add_option("--mode", eval_o.fold_train.mode, "training mode for --loo folds")
        ->check(CLI::IsMember({"reciprocal", "baseline", "lstm"}));
    ev->add_option("--train-seed", eval_o.fold_train.train.seed, "training seed for --loo");
    ev->add_option("--out-dir,-o", eval_o.out_dir, "output directory");
    ev->add_option("--config", eval_o.config_file, "JSON config with defaults");

    AttackEvalOpts atk_o;
    CLI::App* atk = app.add_subcommand(
        "attack-eval", "side-by-side metrics with and without matched prediction");
    atk->add_option("--ckpt", atk_o.ckpt, "checkpoint file (needs both networks)");
    atk->add_option("--data", atk_o.data, "test dataset file(s)");
    atk->add_option("--iterations", atk_o.attack.iterations, "attack iterations M");
    atk->add_option("--epsilon", atk_o.attack.epsilon, "attack step (negative descends)");
    atk->add_option("--alpha", atk_o.attack.alpha, "exponential average weight");
    atk->add_option("--k", atk_o.k, "best-of-K samples per scene");
    atk->add_option("--seed", atk_o.seed, "noise seed");
    atk->add_option("--collision-threshold", atk_o.collision_threshold,
                    "near-collision distance, meters");
    atk->add_option("--threads", atk_o.threads, "worker threads (0 = auto)");
    atk->add_option("--out-dir,-o", atk_o.out_dir, "output directory");
    atk->add_option("--config", atk_o.config_file, "JSON config with defaults");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) run_generate(*gen, gen_o);
        if (train->parsed()) run_train(*train, train_o);
        if (ev->parsed()) run_eval(*ev, eval_o);
        if (atk->parsed()) run_attack_eval(*atk, atk_o);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
