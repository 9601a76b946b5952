#include <doctest.h>

#include <cmath>
#include <random>

#include "autoset/graph.hpp"
#include "autoset/training.hpp"
#include "test_helpers.hpp"

using namespace autoset;

namespace {

ArchitectureConfig tiny_arch() {
    ArchitectureConfig arch;
    arch.channels = 2;
    arch.window_w = 16;
    arch.conv_filters = {3, 3};
    arch.dense_widths = {6};
    arch.n_labels = 3;
    arch.max_cardinality = 2;
    return arch;
}

}  // namespace

TEST_CASE("uniform scores on a singleton target give bce + nll = 2.4849") {
    // M=2 element scores both 0.5, target {a1}; cardinality spread uniformly
    // over {0,1,2}. bce = -ln 0.5 - ln 0.5, nll = ln 3.
    Graph g;
    const NodeId scores = g.leaf(Tensor({2}, 0.5));
    const NodeId card = g.leaf(Tensor({3}, 1.0));
    const NodeId total = g.add(g.bce(scores, {1.0, 0.0}), g.nll(g.log_softmax(card), 1));
    CHECK(g.value(total).scalar() == doctest::Approx(2.4849).epsilon(1e-4));
    CHECK(g.value(total).scalar() ==
          doctest::Approx(-2.0 * std::log(0.5) + std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("loss_auto is the squared reconstruction error") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 1);
    std::mt19937_64 rng(2);
    const Tensor x = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
    const Tensor rec = decode(encode(x, store, arch), store, arch);
    double manual = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = rec.data[i] - x.data[i];
        manual += d * d;
    }
    CHECK(loss_auto(x, store, arch) == doctest::Approx(manual).epsilon(1e-12));
    CHECK(loss_auto(x, store, arch) >= 0.0);
}

TEST_CASE("loss_bce equals loss_set minus the cardinality term") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 3);
    std::mt19937_64 rng(4);
    const Tensor x = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
    const ActivitySet target({0, 2});
    const SetScores s = predict_scores(x, store, arch);
    const double nll = -s.cardinality_logscores[target.cardinality()];
    CHECK(loss_bce(x, target, store, arch) ==
          doctest::Approx(loss_set(x, target, store, arch) - nll).epsilon(1e-9));
}

TEST_CASE("loss_set rejects targets above the cardinality cap") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 5);
    const Tensor x({2, 16}, 0.5);
    CHECK_THROWS(loss_set(x, ActivitySet({0, 1, 2}), store, arch));
}

TEST_CASE("supervised losses are finite and non-negative") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 6);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor x = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
        for (const ActivitySet& t : {ActivitySet{}, ActivitySet({1}), ActivitySet({0, 2})}) {
            for (double v : {loss_set(x, t, store, arch), loss_bce(x, t, store, arch)}) {
                CHECK(std::isfinite(v));
                CHECK(v >= 0.0);
            }
        }
    }
}

TEST_CASE("supervised gradients match finite differences") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 8);
    std::mt19937_64 rng(9);
    const Tensor x = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
    const ActivitySet target({0, 1});

    GradMap set_grads, bce_grads;
    loss_set_grad(x, target, store, arch, set_grads);
    loss_bce_grad(x, target, store, arch, bce_grads);
    for (const auto& group : {ParamGroup::encoder, ParamGroup::head}) {
        for (const auto& name : store.names_in_group(group)) {
            const Tensor at = store.at(name).value;
            const Tensor fd_set = testutil::finite_difference(
                [&](const Tensor& t) {
                    ParameterStore probe = store;
                    probe.at(name).value = t;
                    return loss_set(x, target, probe, arch);
                },
                at);
            CHECK(testutil::max_relative_error(set_grads.at(name), fd_set) < 1e-4);
            const Tensor fd_bce = testutil::finite_difference(
                [&](const Tensor& t) {
                    ParameterStore probe = store;
                    probe.at(name).value = t;
                    return loss_bce(x, target, probe, arch);
                },
                at);
            CHECK(testutil::max_relative_error(bce_grads.at(name), fd_bce) < 1e-4);
        }
    }
}

TEST_CASE("adam leaves parameters untouched under zero gradient and decay") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 10);
    GradMap grads;
    for (const auto& name : store.names())
        grads[name] = Tensor(store.at(name).value.shape, 0.0);
    ParameterStore before = store;
    adam_step(store, grads, 1e-3, 0.0);
    for (const auto& name : store.names())
        CHECK(store.at(name).value.data == before.at(name).value.data);
}

TEST_CASE("first adam step moves by ~lr in the gradient's sign direction") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 11);
    const std::string name = store.names().front();
    const Tensor before = store.at(name).value;
    GradMap grads;
    grads[name] = Tensor(before.shape, 2.5);
    adam_step(store, grads, 1e-3, 0.0);
    for (std::size_t i = 0; i < before.data.size(); ++i)
        CHECK(store.at(name).value.data[i] ==
              doctest::Approx(before.data[i] - 1e-3).epsilon(1e-5));
    CHECK(store.step_count() == 1);
}

TEST_CASE("adam with weight decay shrinks a parameter with zero gradient") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 12);
    const std::string name = store.names().front();
    for (double& v : store.at(name).value.data) v = 1.0;
    GradMap grads;
    grads[name] = Tensor(store.at(name).value.shape, 0.0);
    adam_step(store, grads, 1e-3, 5e-5);
    for (double v : store.at(name).value.data) CHECK(v < 1.0);
}

TEST_CASE("adam updates are deterministic") {
    ArchitectureConfig arch = tiny_arch();
    std::mt19937_64 rng(13);
    const Tensor x = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
    auto run = [&] {
        ParameterStore store = init_parameters(arch, 14);
        for (int step = 0; step < 3; ++step) {
            GradMap grads;
            loss_set_grad(x, ActivitySet({1}), store, arch, grads);
            adam_step(store, grads, 1e-3, 5e-5);
        }
        return store;
    };
    ParameterStore a = run();
    ParameterStore b = run();
    for (const auto& name : a.names())
        CHECK(a.at(name).value.data == b.at(name).value.data);
}

TEST_CASE("early stopping fires after patience epochs without improvement") {
    EarlyStopper stop{5};
    CHECK_FALSE(stop.update(3.0, 1));
    CHECK_FALSE(stop.update(3.0, 2));
    CHECK_FALSE(stop.update(3.0, 3));
    CHECK_FALSE(stop.update(3.0, 4));
    CHECK_FALSE(stop.update(3.0, 5));
    CHECK(stop.update(3.0, 6));  // five epochs since the epoch-1 best
    CHECK(stop.best_epoch == 1);
}

TEST_CASE("early stopping resets on strict improvement only") {
    EarlyStopper stop{2};
    CHECK_FALSE(stop.update(3.0, 1));
    CHECK_FALSE(stop.update(2.0, 2));  // improvement
    CHECK_FALSE(stop.update(2.0, 3));  // equal: not an improvement
    CHECK(stop.update(2.0, 4));
    CHECK(stop.best_epoch == 2);
}

TEST_CASE("warm start copies the encoder group bit-exactly and nothing else") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore src = init_parameters(arch, 20);
    ParameterStore dst = init_parameters(arch, 21);
    const ParameterStore dst_before = dst;
    warm_start_encoder(dst, src);
    for (const auto& name : dst.names()) {
        if (dst.at(name).group == ParamGroup::encoder)
            CHECK(dst.at(name).value.data == src.at(name).value.data);
        else
            CHECK(dst.at(name).value.data == dst_before.at(name).value.data);
    }
}

TEST_CASE("single-batch training drives the set loss down") {
    ArchitectureConfig arch = tiny_arch();
    ParameterStore store = init_parameters(arch, 30);
    std::mt19937_64 rng(31);
    std::vector<LabeledSegment> batch;
    for (int i = 0; i < 4; ++i) {
        LabeledSegment s;
        s.data = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
        s.target = ActivitySet({i % 3});
        batch.push_back(std::move(s));
    }
    auto batch_loss = [&](ParameterStore& p) {
        double total = 0.0;
        for (const auto& s : batch) total += loss_set(s.data, s.target, p, arch);
        return total / static_cast<double>(batch.size());
    };
    const double before = batch_loss(store);
    for (int step = 0; step < 150; ++step) {
        GradMap grads;
        for (const auto& s : batch) loss_set_grad(s.data, s.target, store, arch, grads);
        for (auto& [name, g] : grads)
            for (double& v : g.data) v /= static_cast<double>(batch.size());
        adam_step(store, grads, 1e-2, 0.0);
    }
    CHECK(batch_loss(store) < before * 0.5);
}

TEST_CASE("train_supervised improves on the first epoch and reports it") {
    ArchitectureConfig arch = tiny_arch();
    std::mt19937_64 rng(40);
    std::vector<LabeledSegment> train_s, val_s;
    for (int i = 0; i < 24; ++i) {
        LabeledSegment s;
        s.data = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
        s.target = ActivitySet({i % 3});
        (i < 18 ? train_s : val_s).push_back(std::move(s));
    }
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 6;
    cfg.max_epochs = 8;
    cfg.seed = 41;
    cfg.mode = TrainMode::set;
    const ParameterStore initial = init_parameters(arch, 42);
    const TrainResult res = train_supervised(train_s, val_s, cfg, initial, arch);
    REQUIRE(!res.report.epochs.empty());
    CHECK(res.report.best_epoch >= 1);
    const double best_val = res.report.epochs[res.report.best_epoch - 1].val_objective;
    CHECK(best_val <= res.report.epochs.front().val_objective);
    // learning rate decays between consecutive epochs
    if (res.report.epochs.size() >= 2)
        CHECK(res.report.epochs[1].learning_rate ==
              doctest::Approx(res.report.epochs[0].learning_rate * 0.95));
}

TEST_CASE("train_supervised is deterministic under a fixed seed") {
    ArchitectureConfig arch = tiny_arch();
    std::mt19937_64 rng(50);
    std::vector<LabeledSegment> train_s, val_s;
    for (int i = 0; i < 16; ++i) {
        LabeledSegment s;
        s.data = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
        s.target = ActivitySet({i % 3});
        (i < 12 ? train_s : val_s).push_back(std::move(s));
    }
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 3;
    cfg.seed = 51;
    cfg.mode = TrainMode::bce;
    const ParameterStore initial = init_parameters(arch, 52);
    const TrainResult a = train_supervised(train_s, val_s, cfg, initial, arch);
    const TrainResult b = train_supervised(train_s, val_s, cfg, initial, arch);
    for (const auto& name : a.best_params.names())
        CHECK(a.best_params.at(name).value.data == b.best_params.at(name).value.data);
}

TEST_CASE("train_auto runs and rejects empty datasets") {
    ArchitectureConfig arch = tiny_arch();
    std::mt19937_64 rng(60);
    std::vector<Tensor> train_x, val_x;
    for (int i = 0; i < 8; ++i) train_x.push_back(testutil::random_tensor({2, 16}, rng, 0.0, 1.0));
    for (int i = 0; i < 2; ++i) val_x.push_back(testutil::random_tensor({2, 16}, rng, 0.0, 1.0));
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 2;
    cfg.seed = 61;
    cfg.mode = TrainMode::autoenc;
    const ParameterStore initial = init_parameters(arch, 62);
    const TrainResult res = train_auto(train_x, val_x, cfg, initial, arch);
    CHECK(res.report.epochs.size() == 2);
    CHECK_THROWS(train_auto({}, val_x, cfg, initial, arch));
}
