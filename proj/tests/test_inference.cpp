#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "autoset/inference.hpp"
#include "test_helpers.hpp"

using namespace autoset;

namespace {

SetScores random_scores(int m, int k, std::mt19937_64& rng) {
    SetScores s;
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int i = 0; i < m; ++i) s.element_scores.push_back(unit(rng));
    std::vector<double> raw(k + 1);
    double total = 0.0;
    for (double& v : raw) {
        v = unit(rng);
        total += v;
    }
    for (double v : raw) s.cardinality_logscores.push_back(std::log(v / total));
    return s;
}

}  // namespace

TEST_CASE("map inference matches exhaustive enumeration on random scores") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const int m = 3 + static_cast<int>(rng() % 8);
        const int k = 1 + static_cast<int>(rng() % m);
        const SetScores s = random_scores(m, std::min(k, m), rng);
        for (double u : {0.5, 1.0, 2.5, 5.0}) {
            InferenceConfig cfg;
            cfg.u = u;
            const SetPrediction pred = map_set_inference(s, cfg);
            CHECK(pred.set == testutil::brute_force_map_set(s, u));
        }
    }
}

TEST_CASE("dominant cardinality-zero mass predicts the empty set") {
    SetScores s;
    s.element_scores = {0.9, 0.9, 0.9};
    s.cardinality_logscores = {std::log(0.97), std::log(0.01), std::log(0.01), std::log(0.01)};
    InferenceConfig cfg;
    cfg.u = 1.0;
    CHECK(map_set_inference(s, cfg).set.empty());
}

TEST_CASE("larger U never shrinks the predicted set") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const SetScores s = random_scores(6, 4, rng);
        int prev = -1;
        for (double u : default_u_grid()) {
            InferenceConfig cfg;
            cfg.u = u;
            const int card = map_set_inference(s, cfg).set.cardinality();
            CHECK(card >= prev);
            prev = card;
        }
    }
}

TEST_CASE("map inference is equivariant under label permutation") {
    std::mt19937_64 rng(3);
    const SetScores s = random_scores(5, 3, rng);
    std::vector<int> perm = {0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    SetScores permuted = s;
    for (int i = 0; i < 5; ++i) permuted.element_scores[perm[i]] = s.element_scores[i];

    InferenceConfig cfg;
    const ActivitySet base = map_set_inference(s, cfg).set;
    const ActivitySet moved = map_set_inference(permuted, cfg).set;
    std::vector<int> expected;
    for (int i : base.members()) expected.push_back(perm[i]);
    std::sort(expected.begin(), expected.end());
    CHECK(moved == ActivitySet(expected));
}

TEST_CASE("adding a constant to all cardinality log-scores changes nothing") {
    std::mt19937_64 rng(4);
    const SetScores s = random_scores(6, 3, rng);
    SetScores shifted = s;
    for (double& v : shifted.cardinality_logscores) v += 1.7;
    InferenceConfig cfg;
    CHECK(map_set_inference(s, cfg).set == map_set_inference(shifted, cfg).set);
}

TEST_CASE("per-cardinality diagnostics cover 0..K and peak at the decoded set") {
    std::mt19937_64 rng(5);
    const SetScores s = random_scores(5, 3, rng);
    InferenceConfig cfg;
    const SetPrediction pred = map_set_inference(s, cfg);
    REQUIRE(pred.per_cardinality_best.size() == 4);
    const double best = *std::max_element(pred.per_cardinality_best.begin(),
                                          pred.per_cardinality_best.end());
    CHECK(pred.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(pred.per_cardinality_best[pred.set.cardinality()] ==
          doctest::Approx(pred.objective).epsilon(1e-12));
}

TEST_CASE("threshold inference keeps exactly the scores above tau") {
    SetScores s;
    s.element_scores = {0.2, 0.7, 0.5, 0.91};
    s.cardinality_logscores = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)};
    CHECK(threshold_inference(s, 0.5) == ActivitySet({1, 3}));  // 0.5 itself excluded
    CHECK(threshold_inference(s, 0.95).empty());
    CHECK(threshold_inference(s, 0.1) == ActivitySet({0, 1, 2, 3}));
}

TEST_CASE("default U grid spans 0.5 to 5.0 in 0.1 steps") {
    const std::vector<double> grid = default_u_grid();
    REQUIRE(grid.size() == 46);
    CHECK(grid.front() == doctest::Approx(0.5));
    CHECK(grid.back() == doctest::Approx(5.0));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.1));
}

TEST_CASE("calibrate_u returns the smallest U among equally good values") {
    ArchitectureConfig arch;
    arch.channels = 2;
    arch.window_w = 16;
    arch.conv_filters = {3, 3};
    arch.dense_widths = {6};
    arch.n_labels = 3;
    arch.max_cardinality = 2;
    ParameterStore store = init_parameters(arch, 7);
    std::mt19937_64 rng(8);
    std::vector<LabeledSegment> val;
    for (int i = 0; i < 6; ++i) {
        LabeledSegment s;
        s.data = testutil::random_tensor({2, 16}, rng, 0.0, 1.0);
        s.target = ActivitySet({i % 3});
        val.push_back(std::move(s));
    }
    const double u = calibrate_u(store, arch, val, default_u_grid());
    // exhaustively verify no grid point strictly beats it, and no equal
    // point precedes it
    auto mr_at = [&](double cand) {
        InferenceConfig cfg;
        cfg.u = cand;
        int hits = 0;
        for (const auto& s : val)
            if (map_set_inference(predict_scores(s.data, store, arch), cfg).set == s.target) ++hits;
        return hits;
    };
    const int best = mr_at(u);
    for (double cand : default_u_grid()) {
        CHECK(mr_at(cand) <= best);
        if (cand < u - 1e-9) CHECK(mr_at(cand) < best);
    }
}

TEST_CASE("prediction dumps round-trip through text") {
    PredictionDump dump;
    dump.mode = InferenceMode::map_set;
    dump.u = 2.5;
    dump.labels = {"walk", "jog", "sit"};
    PredictionRecord a;
    a.offset = 0;
    a.set = ActivitySet({0, 2});
    a.element_scores = {0.9123456789012345, 0.1, 0.8};
    a.cardinality_logscores = {-3.0, -0.5, -1.2};
    PredictionRecord b;
    b.offset = 20;
    b.set = ActivitySet{};  // empty set serialized as "-"
    b.element_scores = {0.1, 0.2, 0.3};
    b.cardinality_logscores = {-0.1, -2.5, -3.5};
    dump.records = {a, b};

    const auto path =
        (std::filesystem::temp_directory_path() / "autoset_test_dump.txt").string();
    write_prediction_dump(path, dump);
    const PredictionDump back = read_prediction_dump(path);
    CHECK(back.mode == InferenceMode::map_set);
    CHECK(back.u == dump.u);
    CHECK(back.labels == dump.labels);
    REQUIRE(back.records.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.records[i].offset == dump.records[i].offset);
        CHECK(back.records[i].set == dump.records[i].set);
        CHECK(back.records[i].element_scores == dump.records[i].element_scores);  // bitwise
        CHECK(back.records[i].cardinality_logscores == dump.records[i].cardinality_logscores);
    }

    // writing the same dump twice is byte-identical
    const auto path2 =
        (std::filesystem::temp_directory_path() / "autoset_test_dump2.txt").string();
    write_prediction_dump(path2, back);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("inference config validation rejects bad values") {
    InferenceConfig cfg;
    cfg.u = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = InferenceConfig{};
    cfg.threshold = 1.5;
    CHECK_THROWS(cfg.validate());
}
