// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Heavier end-to-end checks share one prepared synthetic corpus.
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "autoset/config.hpp"
#include "autoset/graph.hpp"
#include "autoset/inference.hpp"
#include "autoset/metrics.hpp"
#include "autoset/network.hpp"
#include "autoset/pipeline.hpp"
#include "autoset/synthgen.hpp"
#include "autoset/training.hpp"
#include "test_helpers.hpp"

using namespace autoset;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail = "") {
    std::printf("criterion %d (%s): %s%s%s\n", idx, name, ok ? "PASS" : "FAIL",
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// ---- criterion 1: gradient correctness on the reduced architecture --------

void check_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    ArchitectureConfig arch;
    arch.channels = 2;
    arch.window_w = 40;
    arch.conv_filters = {4, 4};
    arch.dense_widths = {16};
    arch.n_labels = 3;
    arch.max_cardinality = 2;
    ParameterStore store = init_parameters(arch, 1);
    std::mt19937_64 rng(2);
    const Tensor x = testutil::random_tensor({2, 40}, rng, 0.0, 1.0);
    const ActivitySet target({0, 2});

    GradMap auto_g, set_g, bce_g;
    loss_auto_grad(x, store, arch, auto_g);
    loss_set_grad(x, target, store, arch, set_g);
    loss_bce_grad(x, target, store, arch, bce_g);

    double worst = 0.0;
    std::string worst_name;
    auto fd_check = [&](const GradMap& grads, auto&& f, ParamGroup group, const char* tag) {
        for (const auto& name : store.names_in_group(group)) {
            const Tensor fd = testutil::finite_difference(
                [&](const Tensor& t) {
                    ParameterStore probe = store;
                    probe.at(name).value = t;
                    return f(probe);
                },
                store.at(name).value);
            const double err = testutil::max_relative_error(grads.at(name), fd);
            if (err > worst) {
                worst = err;
                worst_name = std::string(tag) + ":" + name;
            }
        }
    };
    fd_check(auto_g, [&](ParameterStore& p) { return loss_auto(x, p, arch); },
             ParamGroup::encoder, "auto");
    fd_check(auto_g, [&](ParameterStore& p) { return loss_auto(x, p, arch); },
             ParamGroup::decoder, "auto");
    fd_check(set_g, [&](ParameterStore& p) { return loss_set(x, target, p, arch); },
             ParamGroup::encoder, "set");
    fd_check(set_g, [&](ParameterStore& p) { return loss_set(x, target, p, arch); },
             ParamGroup::head, "set");
    fd_check(bce_g, [&](ParameterStore& p) { return loss_bce(x, target, p, arch); },
             ParamGroup::encoder, "bce");
    fd_check(bce_g, [&](ParameterStore& p) { return loss_bce(x, target, p, arch); },
             ParamGroup::head, "bce");

    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max relative error %.3g at %s, %.1f s", worst,
                  worst_name.c_str(), secs);
    report(1, "gradient correctness", worst < 1e-4 && secs < 60.0, buf);
}

// ---- criterion 2: MAP set inference vs exhaustive enumeration -------------

void check_inference_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    const int sizes[] = {3, 5, 8, 10};
    int mismatches = 0, cases = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int m = sizes[trial % 4];
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
        SetScores s;
        for (int i = 0; i < m; ++i) s.element_scores.push_back(unit(rng));
        double total = 0.0;
        std::vector<double> raw(k + 1);
        for (double& v : raw) total += (v = unit(rng));
        for (double v : raw) s.cardinality_logscores.push_back(std::log(v / total));
        for (double u : {0.5, 1.0, 2.5, 5.0}) {
            InferenceConfig cfg;
            cfg.u = u;
            ++cases;
            if (!(map_set_inference(s, cfg).set == testutil::brute_force_map_set(s, u)))
                ++mismatches;
        }
    }
    const double secs = seconds_since(t0);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d/%d exact, %.2f s", cases - mismatches, cases, secs);
    report(2, "set-inference exactness", mismatches == 0 && secs < 10.0, buf);
}

// ---- criterion 3: metrics fixtures ----------------------------------------

void check_metrics_fixtures() {
    bool ok = true;
    {
        const ActivityVocabulary vocab({"a", "b"});
        const std::vector<EvalPair> pairs = {
            {ActivitySet({0}), ActivitySet({0})},
            {ActivitySet({0}), ActivitySet({1})},
            {ActivitySet({0, 1}), ActivitySet({0, 1})},
        };
        const MetricsReport r = evaluate(pairs, vocab, 2);
        ok = ok && std::abs(r.exact_match_ratio - 2.0 / 3.0) < 1e-12;
        ok = ok && std::abs(r.mr_for_cardinality(1) - 0.5) < 1e-12;
        ok = ok && std::abs(r.mr_for_cardinality(2) - 1.0) < 1e-12;
        ok = ok && std::abs(r.per_label[0].f1 - 0.8) < 1e-12;
    }
    {
        // partial credit: predicted {walk}, target {walk, stand}
        const ActivityVocabulary vocab({"walk", "stand"});
        const MetricsReport r =
            evaluate({{ActivitySet({0}), ActivitySet({0, 1})}}, vocab, 2);
        ok = ok && r.exact_match_ratio == 0.0;
        ok = ok && r.per_label[0].tp == 1 && r.per_label[1].fn == 1;
    }
    report(3, "metrics oracle", ok);
}

// ---- criterion 4: encoder/decoder shape chain -----------------------------

void check_shape_chain() {
    ArchitectureConfig arch;
    arch.channels = 3;
    arch.window_w = 200;
    arch.conv_filters = {8, 8, 8, 8};
    arch.dense_widths = {16};
    arch.n_labels = 3;
    arch.max_cardinality = 2;
    const std::vector<int> lens = arch.conv_out_lengths();
    bool ok = lens == std::vector<int>{98, 47, 22, 9};
    ParameterStore store = init_parameters(arch, 11);
    const Tensor rec = decode(encode(Tensor({3, 200}, 0.3), store, arch), store, arch);
    ok = ok && rec.shape == std::vector<int>{3, 200};
    std::string detail = "lengths";
    for (int l : lens) detail += " " + std::to_string(l);
    detail += ", restored " + shape_str(rec.shape);
    report(4, "shape chain", ok, detail);
}

// ---- shared synthetic corpus for criteria 5-7 -----------------------------

RunConfig desk_config(const fs::path& dir) {
    RunConfig rc;
    rc.data_path = (dir / "stream.csv").string();
    rc.out_dir = (dir / "out").string();
    rc.segmentation.window_w = 200;
    rc.segmentation.stride = 20;
    rc.segmentation.recognition_length_r = 10;
    rc.architecture.window_w = 200;
    rc.architecture.conv_filters = {32, 32, 32, 32};
    rc.architecture.dense_widths = {128, 128};
    rc.training.learning_rate = 2e-3;
    rc.training.batch_size = 64;
    rc.training.max_epochs = 20;
    rc.training.seed = 17;
    rc.pretrain_epochs = 8;
    rc.calibrate_u = true;
    rc.seed = 17;
    return rc;
}

void write_desk_stream(const RunConfig& rc) {
    SynthConfig sc = default_synth_config(3, 3, 17);
    sc.total_samples = 60000;
    // episodes at least one window long: windows straddle at most one
    // activity boundary, so targets top out at cardinality 2
    sc.episode_min_samples = 250;
    sc.episode_max_samples = 450;
    sc.noise_std = 0.08;
    write_delimited(rc.data_path, generate(sc));
}

void check_desk_scale(const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig rc = desk_config(dir);
    write_desk_stream(rc);
    cmd_prepare(rc);

    cmd_train(rc, ModelMode::auto_set);
    cmd_infer(rc, ModelMode::auto_set);
    const MetricsReport auto_set = cmd_eval(rc, ModelMode::auto_set);

    cmd_train(rc, ModelMode::deep_bce);
    cmd_infer(rc, ModelMode::deep_bce);
    const MetricsReport deep_bce = cmd_eval(rc, ModelMode::deep_bce);

    const double secs = seconds_since(t0);
    const bool ok = auto_set.exact_match_ratio >= 0.90 &&
                    auto_set.exact_match_ratio >= deep_bce.exact_match_ratio && secs < 900.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "MR auto-set %.3f, deep-bce %.3f, %.0f s",
                  auto_set.exact_match_ratio, deep_bce.exact_match_ratio, secs);
    report(5, "desk-scale end-to-end", ok, buf);
}

void check_pretraining_benefit(const fs::path& dir) {
    RunConfig base = desk_config(dir);  // reuses the prepared stream file
    base.out_dir = (dir / "out_low_label").string();
    base.labeled_fraction = 0.10;
    base.training.max_epochs = 10;
    base.pretrain_epochs = 6;

    int wins = 0;
    std::string detail;
    for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
        RunConfig rc = base;
        rc.out_dir = base.out_dir + "_" + std::to_string(seed);
        rc.seed = seed;
        rc.training.seed = seed;
        cmd_prepare(rc);
        const TrainOutputs auto_run = cmd_train(rc, ModelMode::auto_set);
        const TrainOutputs deep_run = cmd_train(rc, ModelMode::deep_set);
        const double val_auto =
            auto_run.supervised.epochs[auto_run.supervised.best_epoch - 1].val_objective;
        const double val_deep =
            deep_run.supervised.epochs[deep_run.supervised.best_epoch - 1].val_objective;
        if (val_auto <= val_deep) ++wins;
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%sseed %llu: %.4f vs %.4f", detail.empty() ? "" : "; ",
                      static_cast<unsigned long long>(seed), val_auto, val_deep);
        detail += buf;
    }
    report(6, "pretraining benefit", wins >= 2, detail + " (" + std::to_string(wins) + "/3)");
}

void check_determinism(const fs::path& dir) {
    RunConfig rc = desk_config(dir);
    rc.out_dir = (dir / "out_det_a").string();
    rc.training.max_epochs = 2;
    rc.pretrain_epochs = 1;
    SynthConfig sc = default_synth_config(3, 3, 23);
    sc.total_samples = 15000;
    rc.data_path = (dir / "det_stream.csv").string();
    write_delimited(rc.data_path, generate(sc));

    auto run = [&](const std::string& out) {
        RunConfig r = rc;
        r.out_dir = out;
        cmd_prepare(r);
        cmd_train(r, ModelMode::auto_set);
        cmd_infer(r, ModelMode::auto_set);
        cmd_eval(r, ModelMode::auto_set);
        return r;
    };
    const RunConfig a = run((dir / "out_det_a").string());
    const RunConfig b = run((dir / "out_det_b").string());

    bool ok = true;
    std::string bad;
    auto same = [&](const std::string& pa, const std::string& pb, const char* what) {
        if (slurp(pa) != slurp(pb)) {
            ok = false;
            bad += std::string(bad.empty() ? "" : ", ") + what;
        }
    };
    same(checkpoint_path(a, ModelMode::auto_set), checkpoint_path(b, ModelMode::auto_set),
         "checkpoint");
    same(pretrain_checkpoint_path(a, ModelMode::auto_set),
         pretrain_checkpoint_path(b, ModelMode::auto_set), "pretrain checkpoint");
    same(dump_path(a, ModelMode::auto_set), dump_path(b, ModelMode::auto_set), "dump");
    same(eval_report_path(a, ModelMode::auto_set), eval_report_path(b, ModelMode::auto_set),
         "eval report");
    report(7, "pipeline determinism", ok, ok ? "byte-identical artifacts" : "differs: " + bad);
}

// ---- criterion 8: single-batch overfit ------------------------------------

void check_single_batch_overfit() {
    ArchitectureConfig arch;
    arch.channels = 2;
    arch.window_w = 40;
    arch.conv_filters = {4, 4};
    arch.dense_widths = {16};
    arch.n_labels = 3;
    arch.max_cardinality = 2;
    ParameterStore store = init_parameters(arch, 31);
    std::mt19937_64 rng(32);
    std::vector<LabeledSegment> batch;
    for (int i = 0; i < 8; ++i) {
        LabeledSegment s;
        s.data = testutil::random_tensor({2, 40}, rng, 0.0, 1.0);
        s.target = i % 4 == 3 ? ActivitySet({i % 3, (i + 1) % 3}) : ActivitySet({i % 3});
        batch.push_back(std::move(s));
    }
    for (int step = 0; step < 300; ++step) {
        GradMap grads;
        for (const auto& s : batch) loss_set_grad(s.data, s.target, store, arch, grads);
        for (auto& [name, g] : grads)
            for (double& v : g.data) v /= 8.0;
        adam_step(store, grads, 1e-2, 0.0);
    }
    double final_loss = 0.0;
    for (const auto& s : batch) final_loss += loss_set(s.data, s.target, store, arch);
    final_loss /= 8.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "mean loss %.4f after 300 steps", final_loss);
    report(8, "single-batch overfit", final_loss < 0.05, buf);
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "autoset_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    try {
        check_gradients();
        check_inference_exactness();
        check_metrics_fixtures();
        check_shape_chain();
        check_desk_scale(dir);
        check_pretraining_benefit(dir);
        check_determinism(dir);
        check_single_batch_overfit();
    } catch (const std::exception& e) {
        std::printf("acceptance suite aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%s\n", g_failures == 0 ? "all criteria passed" : "criteria failed");
    return g_failures == 0 ? 0 : 1;
}
