// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 4-6 share six desk-scale training runs (three
// seeds, reciprocal and non-reciprocal arms) on a fixed synthetic benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "rtraj/attack.hpp"
#include "rtraj/baselines.hpp"
#include "rtraj/evaluation.hpp"
#include "rtraj/social_force.hpp"
#include "rtraj/training.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/test_models.hpp"

namespace fs = std::filesystem;
using namespace rtraj;
using rtraj::testing::gradcheck;
using rtraj::testing::random_scene;
using rtraj::testing::tiny_config;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness
// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(2026);
    double worst_primitive = 0.0;

    auto rnd = [&rng](Shape s, double lo = -2.0, double hi = 2.0) {
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = rng.uniform(lo, hi);
        return Tensor(std::move(s), std::move(v));
    };

    for (int i = 0; i < 25; ++i) {
        {
            Tensor a = rnd({2, 3}), b = rnd({2, 3}), bias = rnd({3});
            worst_primitive = std::max(
                worst_primitive,
                gradcheck([&] { return sum(mul(add(a, bias), sub(a, b))); }, {a, b, bias})
                    .max_rel_err);
        }
        {
            Tensor a = rnd({6}), pos = rnd({6}, 0.1, 3.0);
            worst_primitive = std::max(
                worst_primitive,
                gradcheck(
                    [&] {
                        return sum(add(add(tanh(a), sigmoid(a)),
                                       add(relu(a), add(exp(scale(a, 0.2)), log(pos)))));
                    },
                    {a, pos})
                    .max_rel_err);
        }
        {
            Tensor a = rnd({3, 4}), b = rnd({4, 2});
            worst_primitive = std::max(
                worst_primitive,
                gradcheck([&] { return l2_norm(matmul(a, b)); }, {a, b}).max_rel_err);
        }
        {
            Tensor a = rnd({3, 4});
            worst_primitive = std::max(
                worst_primitive,
                gradcheck(
                    [&] {
                        Tensor g = gather_rows(concat({a, transpose(transpose(a))}, 0), {4, 1});
                        return add(sum(max_over_axis(a, 0)), add(mean(g), l2_norm(a)));
                    },
                    {a})
                    .max_rel_err);
        }
    }

    // End-to-end composites on the tiny model: H=4, 2 agents, 3 steps.
    const ModelConfig cfg = tiny_config(3, 3);
    Rng init_rng(7);
    GeneratorParams f = GeneratorParams::init(cfg, init_rng);
    GeneratorParams g = GeneratorParams::init(cfg.reversed(), init_rng);
    Rng scene_rng(8);
    const SceneSample scene = random_scene(scene_rng, 2, 3, 3);
    LossConfig lc;
    lc.lambda = 0.5;

    double worst_composite = 0.0;
    {
        std::vector<Tensor> leaves;
        for (auto& [name, t] : f.named_params()) leaves.push_back(t);
        worst_composite = std::max(worst_composite, gradcheck(
                                                        [&] {
                                                            Rng noise(99);
                                                            return j_forward(scene, f, g, lc, noise);
                                                        },
                                                        leaves)
                                                        .max_rel_err);
    }
    {
        std::vector<Tensor> leaves;
        for (auto& [name, t] : g.named_params()) leaves.push_back(t);
        worst_composite = std::max(worst_composite, gradcheck(
                                                        [&] {
                                                            Rng noise(98);
                                                            return j_backward(scene, f, g, lc, noise);
                                                        },
                                                        leaves)
                                                        .max_rel_err);
    }
    {
        Rng noise(97);
        const Tensor z({2, cfg.noise_dim}, noise.normal_vec(2 * cfg.noise_dim));
        Tensor pred({3 * 2, 2}, noise.normal_vec(12));
        worst_composite = std::max(
            worst_composite,
            gradcheck([&] { return matching_error(scene, pred, g, z); }, {pred}).max_rel_err);
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = worst_primitive < 1e-5 && worst_composite < 1e-4 && secs < 30.0;
    o.detail = "primitive rel err " + fmt(worst_primitive) + " < 1e-5, composite " +
               fmt(worst_composite) + " < 1e-4 (J+/J-/E on H=4, 2 agents, 3 steps), " +
               fmt(secs) + " s < 30 s";
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: metric oracles
// ---------------------------------------------------------------------------

Outcome criterion_metric_oracles() {
    Rng rng(31);
    auto random_tracks = [&rng](std::size_t agents, std::size_t steps, double span) {
        Tracks t(agents);
        for (auto& track : t) {
            for (std::size_t s = 0; s < steps; ++s) {
                track.push_back({rng.uniform(-span, span), rng.uniform(-span, span)});
            }
        }
        return t;
    };

    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t agents = 1 + rng.below(6);
        const std::size_t steps = 1 + rng.below(12);
        const Tracks gt = random_tracks(agents, steps, 5.0);
        const Tracks pred = random_tracks(agents, steps, 5.0);
        worst = std::max(worst, std::fabs(ade(pred, gt) - testing::naive_ade(pred, gt)));
        worst = std::max(worst, std::fabs(fde(pred, gt) - testing::naive_fde(pred, gt)));
        const Tracks close = random_tracks(agents, steps, 0.15);
        worst = std::max(worst, std::fabs(collision_pct(close, 0.1) -
                                          testing::naive_collision_pct(close, 0.1)));
    }

    // Pinned cases: constant (3,4) offset gives ADE 5; the 0.1 m threshold is
    // strict.
    const Tracks gt{{{0, 0}, {1, 1}}};
    const Tracks off{{{3, 4}, {4, 5}}};
    const bool fixed_ok = std::fabs(ade(off, gt) - 5.0) < 1e-12 &&
                          collision_pct({{{0, 0}}, {{0.1, 0}}}, 0.1) == 0.0 &&
                          collision_pct({{{0, 0}}, {{0.0999, 0}}}, 0.1) == 100.0;

    Outcome o;
    o.pass = worst < 1e-12 && fixed_ok;
    o.detail = "1000 random cases vs brute force, max deviation " + fmt(worst) +
               " < 1e-12; offset-5 ADE and strict collision threshold hold";
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 3: data invariants
// ---------------------------------------------------------------------------

Outcome criterion_data_invariants() {
    Rng rng(41);
    std::size_t failures = 0;

    for (int i = 0; i < 1000; ++i) {
        const SceneSample s = random_scene(rng, 1 + rng.below(4), 8, 12);
        const SceneSample back = time_reverse(time_reverse(s));
        for (std::size_t a = 0; a < s.agents(); ++a) {
            for (std::size_t t = 0; t < 8; ++t) {
                if (back.observed[a][t].x != s.observed[a][t].x ||
                    back.observed[a][t].y != s.observed[a][t].y) {
                    ++failures;
                }
            }
            for (std::size_t t = 0; t < 12; ++t) {
                if (back.future[a][t].x != s.future[a][t].x ||
                    back.future[a][t].y != s.future[a][t].y) {
                    ++failures;
                }
            }
        }
    }

    for (int round = 0; round < 60; ++round) {
        std::vector<FrameRecord> recs;
        const std::size_t frames = 20 + rng.below(15);
        for (std::size_t f = 0; f < frames; ++f) {
            for (int a = 0; a < 6; ++a) {
                if (rng.uniform() < 0.75) {
                    recs.push_back({static_cast<long>(f), a, {rng.uniform(), rng.uniform()}});
                }
            }
        }
        for (const auto& s : extract_windows(recs)) {
            for (std::size_t a = 0; a < s.agents(); ++a) {
                if (s.observed[a].size() != 8 || s.future[a].size() != 12) ++failures;
            }
        }
    }

    for (int i = 0; i < 1000; ++i) {
        const SceneSample s = random_scene(rng, 1 + rng.below(4), 8, 12);
        NormalizationSpec spec;
        spec.mode = NormMode::RelativeDisplacement;
        const SceneSample back = denormalize(normalize(s, spec), spec);
        for (std::size_t a = 0; a < s.agents(); ++a) {
            for (std::size_t t = 0; t < 12; ++t) {
                if (std::fabs(back.future[a][t].x - s.future[a][t].x) > 1e-12 ||
                    std::fabs(back.future[a][t].y - s.future[a][t].y) > 1e-12) {
                    ++failures;
                }
            }
        }
    }

    Outcome o;
    o.pass = failures == 0;
    o.detail = "involution, window completeness, normalize round trip over >=1000 random "
               "samples each: " +
               std::to_string(failures) + " failures";
    return o;
}

// ---------------------------------------------------------------------------
// Shared benchmark for criteria 4-6
// ---------------------------------------------------------------------------

struct Benchmark {
    Dataset train;
    Dataset test;
    std::vector<ReciprocalPair> reciprocal;  // one per seed
    std::vector<ReciprocalPair> baseline;    // lambda = 1 arm
    std::vector<double> train_secs;
    bool ready = false;
    std::string error;
};

constexpr std::uint64_t kSeeds[3] = {11, 12, 13};
constexpr std::size_t kPretrainEpochs = 5;
constexpr std::size_t kJointEpochs = 15;

TrainConfig bench_train_cfg(std::uint64_t seed, double lambda) {
    TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.pretrain_epochs = kPretrainEpochs;
    cfg.epochs = kJointEpochs;
    cfg.lambda = lambda;
    cfg.seed = seed;
    return cfg;
}

Benchmark build_benchmark() {
    Benchmark b;
    try {
        SocialForceConfig sf;
        sf.n_scenes = 500;
        sf.agents_per_scene = 3;
        sf.seed = 2301;
        b.train = generate_social_force(sf);
        sf.n_scenes = 120;
        sf.seed = 2302;
        b.test = generate_social_force(sf);

        ModelConfig model;  // paper-preset dims: embed 16, hidden 32, disc 48

        b.reciprocal.resize(3);
        b.baseline.resize(3);
        b.train_secs.resize(3, 0.0);
        parallel_for(6, 6, [&](std::size_t i) {
            const std::size_t seed_idx = i % 3;
            if (i < 3) {
                const auto t0 = std::chrono::steady_clock::now();
                ReciprocalPair pair =
                    ReciprocalPair::init(model, bench_train_cfg(kSeeds[seed_idx], 0.5));
                train_pair(pair, b.train);
                b.train_secs[seed_idx] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                b.reciprocal[seed_idx] = std::move(pair);
            } else {
                ReciprocalPair pair =
                    ReciprocalPair::init(model, bench_train_cfg(kSeeds[seed_idx], 1.0));
                train_pair(pair, b.train);
                b.baseline[seed_idx] = std::move(pair);
            }
        });
        b.ready = true;
    } catch (const std::exception& e) {
        b.error = e.what();
    }
    return b;
}

// ---------------------------------------------------------------------------
// Criterion 4: baseline ordering
// ---------------------------------------------------------------------------

Outcome criterion_baseline_ordering(const Benchmark& b) {
    Outcome o;
    if (!b.ready) {
        o.detail = "benchmark training failed: " + b.error;
        return o;
    }
    const double linear_ade = evaluate_linear(b.test).ade;
    std::vector<double> model_ades;
    for (int s = 0; s < 3; ++s) {
        EvalOptions eo;
        eo.k = 20;
        eo.seed = 900 + s;
        model_ades.push_back(evaluate(b.reciprocal[s].forward.gen, b.test, eo).ade);
    }
    const double med = median3(model_ades);
    const double slowest = *std::max_element(b.train_secs.begin(), b.train_secs.end());
    o.pass = med <= linear_ade && slowest < 600.0;
    o.detail = "best-of-20 ADE median " + fmt(med) + " <= linear " + fmt(linear_ade) +
               " on 500-scene benchmark; slowest training " + fmt(slowest) + " s < 600 s (" +
               std::to_string(kPretrainEpochs) + "+" + std::to_string(kPretrainEpochs) + "+" +
               std::to_string(kJointEpochs) + " epochs <= 50)";
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 5: reciprocal-learning ablation
// ---------------------------------------------------------------------------

Outcome criterion_reciprocal_ablation(const Benchmark& b) {
    Outcome o;
    if (!b.ready) {
        o.detail = "benchmark training failed: " + b.error;
        return o;
    }
    std::vector<double> recip_ades, base_ades, recip_recon, base_recon;
    for (int s = 0; s < 3; ++s) {
        EvalOptions eo;
        eo.k = 20;
        eo.seed = 900 + s;
        recip_ades.push_back(evaluate(b.reciprocal[s].forward.gen, b.test, eo).ade);
        base_ades.push_back(evaluate(b.baseline[s].forward.gen, b.test, eo).ade);
        recip_recon.push_back(reconstruction_error(b.reciprocal[s], b.test, 700 + s));
        base_recon.push_back(reconstruction_error(b.baseline[s], b.test, 700 + s));
    }
    const double ratio = median3(recip_ades) / median3(base_ades);
    const double rr = median3(recip_recon), br = median3(base_recon);
    o.pass = ratio <= 1.02 && rr < br;
    o.detail = "ADE ratio reciprocal/baseline " + fmt(ratio) +
               " <= 1.02; held-out reconstruction error " + fmt(rr) + " < " + fmt(br) +
               " (medians over 3 seeds)";
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: attack behavior
// ---------------------------------------------------------------------------

Outcome criterion_attack(const Benchmark& b) {
    Outcome o;
    if (!b.ready) {
        o.detail = "benchmark training failed: " + b.error;
        return o;
    }
    const AttackConfig attack;  // defaults: M=20, eps=-0.05, alpha=0.1
    std::vector<double> fractions, ratios;
    for (int s = 0; s < 3; ++s) {
        EvalOptions eo;
        eo.k = 1;
        eo.seed = 800 + s;
        const AttackEvalResult res = attack_evaluate(b.reciprocal[s], b.test, eo, attack);
        std::size_t improved = 0;
        for (const auto& curve : res.e_curves) {
            if (curve.back() <= curve.front()) ++improved;
        }
        fractions.push_back(static_cast<double>(improved) /
                            static_cast<double>(res.e_curves.size()));
        ratios.push_back(res.post.ade / res.pre.ade);
    }
    const double frac = median3(fractions);
    const double ratio = median3(ratios);

    const double unit = exp_average({{1.0}, {2.0}, {3.0}}, 0.1)[0];
    const bool unit_ok = std::fabs(unit - 2.0665) < 1e-4;

    o.pass = frac >= 0.80 && ratio <= 1.05 && unit_ok;
    o.detail = "E^M <= E^0 on " + fmt(100 * frac) + "% of held-out samples (>= 80%); "
               "post/pre ADE " +
               fmt(ratio) + " <= 1.05 (medians over 3 seeds); exp-average unit value " +
               fmt(unit) + " within 1e-4 of 2.0665";
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 7: pipeline determinism
// ---------------------------------------------------------------------------

Outcome criterion_determinism() {
    Outcome o;
#ifndef RTRAJ_CLI_PATH
    o.detail = "CLI not built";
    return o;
#else
    const fs::path root = fs::temp_directory_path() / "rtraj_acceptance_det";
    fs::remove_all(root);
    auto run_pipeline = [&](const std::string& tag) -> fs::path {
        const fs::path dir = root / tag;
        fs::create_directories(dir);
        const std::string base = std::string(RTRAJ_CLI_PATH);
        auto sh = [&](const std::string& args) {
            const std::string cmd = base + " " + args + " >/dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                throw std::runtime_error("pipeline command failed: " + cmd);
            }
        };
        const std::string d = dir.string();
        sh("generate --scenes 24 --agents 2 --seed 5 --name train -o " + d);
        sh("generate --scenes 8 --agents 2 --seed 6 --name test -o " + d);
        sh("train --data " + d + "/train.ds --epochs 2 --pretrain-epochs 1 --batch-size 8"
           " --seed 3 --hidden 8 --disc-hidden 8 --embed 4 --pool 4 --noise 2 -o " + d);
        sh("eval --ckpt " + d + "/checkpoint.ckpt --data " + d + "/test.ds --k 3 -o " + d);
        sh("attack-eval --ckpt " + d + "/checkpoint.ckpt --data " + d +
           "/test.ds --iterations 4 -o " + d);
        return dir;
    };
    try {
        const fs::path a = run_pipeline("a");
        const fs::path bdir = run_pipeline("b");
        std::size_t compared = 0;
        std::string mismatch;
        for (const auto& entry : fs::directory_iterator(a)) {
            if (entry.path().extension() != ".csv") continue;
            std::ifstream fa(entry.path(), std::ios::binary);
            std::ifstream fb(bdir / entry.path().filename(), std::ios::binary);
            std::stringstream sa, sb;
            sa << fa.rdbuf();
            sb << fb.rdbuf();
            ++compared;
            if (sa.str() != sb.str() || sa.str().empty()) {
                mismatch = entry.path().filename().string();
            }
        }
        o.pass = compared >= 5 && mismatch.empty();
        o.detail = std::to_string(compared) +
                   " CSV outputs (generate->train->eval->attack-eval, two runs, same seeds) " +
                   (mismatch.empty() ? "byte-identical" : "differ: " + mismatch);
    } catch (const std::exception& e) {
        o.detail = e.what();
    }
    fs::remove_all(root);
    return o;
#endif
}

// ---------------------------------------------------------------------------
// Criterion 8: non-reproducibility statement
// ---------------------------------------------------------------------------

Outcome criterion_scope_statement() {
    Outcome o;
    std::ifstream in(RTRAJ_README_PATH);
    if (!in) {
        o.detail = "README.md not found";
        return o;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string readme = ss.str();
    const bool has_statement = readme.find("not reproducible") != std::string::npos;
    const bool names_numbers = readme.find("0.69") != std::string::npos;
    const bool names_reason = readme.find("scene features") != std::string::npos;
    o.pass = has_statement && names_numbers && names_reason;
    o.detail = "README states that published ETH/UCY benchmark values (0.69/1.24 etc.) are not "
               "reproducible without pretrained scene/depth features and full-scale training; "
               "criteria 4-6 substitute directional checks";
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> pre_criteria = {
        {"gradient correctness", criterion_gradients},
        {"metric oracles", criterion_metric_oracles},
        {"data invariants", criterion_data_invariants},
    };

    int failures = 0;
    int id = 1;
    auto report = [&](const std::string& name, const Outcome& o) {
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << id++ << " (" << name
                  << "): " << o.detail << std::endl;
        if (!o.pass) ++failures;
    };

    for (auto& [name, fn] : pre_criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.detail = std::string("exception: ") + e.what();
        }
        report(name, o);
    }

    std::cout << "... training shared benchmark models (3 seeds x 2 arms, 500 scenes)"
              << std::endl;
    const Benchmark bench = build_benchmark();

    report("baseline ordering", criterion_baseline_ordering(bench));
    report("reciprocal-learning ablation", criterion_reciprocal_ablation(bench));
    report("attack behavior", criterion_attack(bench));
    report("pipeline determinism", criterion_determinism());
    report("scope statement", criterion_scope_statement());

    std::cout << (failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
