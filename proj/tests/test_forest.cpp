#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "simile/experiments.hpp"
#include "simile/forest.hpp"
#include "simile/metrics.hpp"
#include "simile/policy.hpp"
#include "simile/rng.hpp"
#include "simile/serialize.hpp"

using namespace simile;

namespace {

std::vector<int> iota_idx(size_t n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

struct RandomNode {
    std::vector<State> states;
    Series targets;
    Series h_values;
};

RandomNode random_node(int n, int n_features, std::uint64_t seed) {
    Rng rng(mix64(seed));
    RandomNode node;
    for (int i = 0; i < n; ++i) {
        State s(n_features);
        for (double& v : s) v = rng.uniform01();
        node.states.push_back(std::move(s));
        node.targets.push_back({rng.uniform01()});
        node.h_values.push_back({rng.uniform01()});
    }
    return node;
}

}  // namespace

TEST_CASE("leaf_value closed forms") {
    // lambda = 0 reduces to the plain mean in both modes
    CHECK(leaf_value({{2.0}, {4.0}}, {{0.0}, {9.0}}, 0.0, LeafMode::distance_only)[0] == 3.0);
    CHECK(leaf_value({{2.0}, {4.0}}, {{0.0}, {9.0}}, 0.0, LeafMode::joint)[0] == 3.0);
    // single pair, distance mode: (1+l)*target - l*h
    CHECK(leaf_value({{2.0}}, {{1.0}}, 1.0, LeafMode::distance_only)[0] == 3.0);
    // joint mode ignores lambda entirely
    CHECK(leaf_value({{1.0}, {3.0}}, {{5.0}, {6.0}}, 7.0, LeafMode::joint)[0] == 2.0);
    CHECK_THROWS_AS(static_cast<void>(leaf_value({}, {}, 1.0, LeafMode::joint)),
                    std::logic_error);
}

TEST_CASE("smoothed_predict closed forms") {
    CHECK(smoothed_predict({3.0}, 0.0, {99.0})[0] == 3.0);
    CHECK(smoothed_predict({3.0}, 1.0, {1.0})[0] == 2.0);
    for (double lambda : {0.0, 0.5, 2.0, 100.0})
        CHECK(smoothed_predict({0.7}, lambda, {0.7})[0] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("node_impurity closed forms") {
    CHECK(node_impurity({{5.0}}, {{5.0}}, 0.0, LeafMode::distance_only) == 0.0);
    // single sample, joint: abar = 2, impurity = 0 + 1 * (2 - 0)^2
    CHECK(node_impurity({{2.0}}, {{0.0}}, 1.0, LeafMode::joint) == 4.0);
    // targets equal to h everywhere: zero for any lambda, both modes
    for (double lambda : {0.0, 1.0, 5.0}) {
        CHECK(node_impurity({{0.4}, {0.4}}, {{0.4}, {0.4}}, lambda, LeafMode::distance_only) ==
              0.0);
        CHECK(node_impurity({{0.4}, {0.4}}, {{0.4}, {0.4}}, lambda, LeafMode::joint) == 0.0);
    }
}

TEST_CASE("leaf_value matches grid + golden-section minimization") {
    const double lambdas[] = {0.0, 0.5, 1.0, 5.0};
    for (int rep = 0; rep < 40; ++rep) {
        Rng rng(mix64(300 + rep));
        const int n = 1 + static_cast<int>(rng.below(20));
        const auto node = random_node(n, 2, 400 + rep);
        const double lambda = lambdas[rep % 4];
        const double lo = -2.0 - 6.0 * lambda, hi = 3.0 + 6.0 * lambda;

        const double got_d = leaf_value(node.targets, node.h_values, lambda,
                                        LeafMode::distance_only)[0];
        const double want_d = oracle::grid_golden_min(
            [&](double a) {
                return oracle::leaf_objective_distance(a, node.targets, node.h_values, lambda, 0);
            },
            lo, hi);
        CHECK(std::fabs(got_d - want_d) <= 1e-6);

        const double got_j = leaf_value(node.targets, node.h_values, lambda, LeafMode::joint)[0];
        const double want_j = oracle::grid_golden_min(
            [&](double a) {
                return oracle::leaf_objective_joint(a, node.targets, node.h_values, lambda, 0);
            },
            lo, hi);
        CHECK(std::fabs(got_j - want_j) <= 1e-6);
    }
}

TEST_CASE("best_split hand cases") {
    // one feature separating two target clusters perfectly, lambda = 0
    std::vector<State> states{{0.0}, {0.1}, {0.9}, {1.0}};
    Series targets{{0.0}, {0.0}, {10.0}, {10.0}};
    Series hs{{0.0}, {0.0}, {0.0}, {0.0}};
    const auto idx = iota_idx(4);
    const auto s = best_split(states, targets, hs, idx, 0.0, LeafMode::distance_only, {0}, 1);
    REQUIRE(s.has_value());
    CHECK(s->feature == 0);
    CHECK(s->threshold == doctest::Approx(0.5));
    // perfect separation removes all impurity
    CHECK(s->reduction ==
          doctest::Approx(node_impurity(targets, hs, 0.0, LeafMode::distance_only)));

    // identical targets and h everywhere: nothing to gain
    Series flat{{1.0}, {1.0}, {1.0}, {1.0}};
    CHECK_FALSE(
        best_split(states, flat, flat, idx, 1.0, LeafMode::distance_only, {0}, 1).has_value());

    // a feature with a single repeated value yields no candidate
    std::vector<State> dup{{0.5}, {0.5}, {0.5}, {0.5}};
    CHECK_FALSE(
        best_split(dup, targets, hs, idx, 0.0, LeafMode::distance_only, {0}, 1).has_value());
}

TEST_CASE("best_split equals the exhaustive scan exactly") {
    for (int rep = 0; rep < 60; ++rep) {
        Rng rng(mix64(900 + rep));
        const int n = 4 + static_cast<int>(rng.below(37));
        const int d = 2 + static_cast<int>(rng.below(4));
        const auto node = random_node(n, d, 1700 + rep);
        const double lambda = (rep % 4) * 0.75;
        const LeafMode mode = rep % 2 ? LeafMode::joint : LeafMode::distance_only;
        const int msl = 1 + static_cast<int>(rng.below(3));
        std::vector<int> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        const auto idx = iota_idx(n);

        const auto got = best_split(node.states, node.targets, node.h_values, idx, lambda, mode,
                                    feats, msl);
        const auto want = oracle::exhaustive_split(node.states, node.targets, node.h_values, idx,
                                                   lambda, mode, feats, msl);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            CHECK(got->feature == want->feature);
            CHECK(got->threshold == want->threshold);
            CHECK(got->reduction == want->reduction);
        }
    }
}

namespace {

RandomNode training_set(int n, const StateLayout& lay, std::uint64_t seed) {
    Rng rng(mix64(seed));
    RandomNode data;
    for (int i = 0; i < n; ++i) {
        State s(lay.state_dim());
        for (double& v : s) v = rng.uniform01();
        data.states.push_back(std::move(s));
        data.targets.push_back({rng.uniform01()});
    }
    return data;
}

}  // namespace

TEST_CASE("train_forest degenerate and determinism") {
    const StateLayout lay{1, 1, 1, 1};  // state = [x_t, x_{t-1}, a_{t-1}]
    const auto data = training_set(30, lay, 21);
    const auto reg = LinearAutoregressor::identity(1);

    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 0;
    const auto stub = train_forest(data.states, data.targets, reg, 0.0,
                                   LeafMode::distance_only, cfg, lay, 1.0);
    REQUIRE(stub.trees.size() == 1);
    CHECK(stub.trees[0]->is_leaf());
    double mean = 0.0;
    for (const auto& t : data.targets) mean += t[0];
    mean /= data.targets.size();
    CHECK(stub.predict(data.states[0])[0] == doctest::Approx(mean).epsilon(1e-12));

    ForestConfig cfg2;
    cfg2.n_trees = 8;
    cfg2.max_depth = 4;
    cfg2.bootstrap = true;
    cfg2.feature_subsample_fraction = 0.67;
    cfg2.seed = 5;
    const auto f1 = train_forest(data.states, data.targets, reg, 0.5, LeafMode::distance_only,
                                 cfg2, lay, 1.0);
    const auto f2 = train_forest(data.states, data.targets, reg, 0.5, LeafMode::distance_only,
                                 cfg2, lay, 1.0);
    for (const auto& s : data.states) CHECK(f1.predict(s) == f2.predict(s));
}

TEST_CASE("lambda = 0 reproduces a plain regression forest exactly") {
    const StateLayout lay{1, 1, 1, 2};
    const auto data = training_set(60, lay, 33);
    ForestConfig cfg;
    cfg.n_trees = 6;
    cfg.max_depth = 5;
    cfg.min_samples_leaf = 2;
    cfg.seed = 17;
    SUBCASE("without bootstrap") {}
    SUBCASE("with bootstrap and feature subsampling") {
        cfg.bootstrap = true;
        cfg.feature_subsample_fraction = 0.6;
    }
    const auto smooth = train_forest(data.states, data.targets,
                                     LinearAutoregressor::identity(1), 0.0,
                                     LeafMode::distance_only, cfg, lay, 1.0);
    const auto plain = oracle::train_plain_forest(data.states, data.targets, cfg, 1, 1.0);
    for (const auto& s : data.states) CHECK(smooth.predict(s) == plain.predict(s));
    const auto probe = training_set(40, lay, 99);
    for (const auto& s : probe.states) CHECK(smooth.predict(s) == plain.predict(s));
}

TEST_CASE("huge lambda pins the prediction to the autoregressor") {
    const StateLayout lay{1, 1, 0, 1};
    const auto data = training_set(40, lay, 55);
    const auto reg = LinearAutoregressor::identity(1);
    ForestConfig cfg;
    cfg.n_trees = 4;
    cfg.max_depth = 3;
    const auto forest = train_forest(data.states, data.targets, reg, 1e6,
                                     LeafMode::distance_only, cfg, lay, 1.0);
    for (const auto& s : data.states) {
        const double h = predict_ar_state(reg, s, lay)[0];
        CHECK(std::fabs(forest.predict(s)[0] - std::clamp(h, 0.0, 1.0)) <= 1e-4);
    }
}

TEST_CASE("predictions stay inside the action bounds") {
    const StateLayout lay{1, 1, 0, 1};
    Rng rng(mix64(8));
    RandomNode data;
    for (int i = 0; i < 50; ++i) {
        data.states.push_back({rng.uniform01() * 10.0 - 5.0, rng.uniform01() * 10.0 - 5.0});
        data.targets.push_back({rng.uniform01() * 4.0 - 2.0});  // targets beyond [0, 1]
    }
    ForestConfig cfg;
    cfg.n_trees = 3;
    cfg.max_depth = 4;
    const auto forest = train_forest(data.states, data.targets,
                                     LinearAutoregressor::identity(1), 0.3,
                                     LeafMode::distance_only, cfg, lay, 1.0);
    for (int i = 0; i < 200; ++i) {
        const State s{rng.uniform01() * 20.0 - 10.0, rng.uniform01() * 20.0 - 10.0};
        const double p = forest.predict(s)[0];
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    CHECK_THROWS_AS(static_cast<void>(forest.predict(State{1.0})), std::invalid_argument);
}

TEST_CASE("single-leaf policy contracts at exactly lambda/(1+lambda)") {
    const double lambda = 1.0;
    const StateLayout lay{1, 1, 0, 1};
    const auto f = make_single_leaf_forest({0.5}, lambda, LinearAutoregressor::identity(1), lay,
                                           1.0);
    Rng rng(mix64(31));
    for (int rep = 0; rep < 200; ++rep) {
        const double x = rng.uniform01();
        const double a = 0.3 + 0.4 * rng.uniform01();
        const double u = (rng.uniform01() - 0.5) * 0.2;
        if (std::fabs(u) < 1e-6) continue;
        const double fa = f->predict({x, a})[0];
        const double fb = f->predict({x, a + u})[0];
        CHECK(std::fabs(fb - fa) / std::fabs(u) ==
              doctest::Approx(lambda / (1.0 + lambda)).epsilon(1e-9));
    }
}

TEST_CASE("increasing lambda never roughens the roll-out") {
    SynthConfig sc;
    sc.horizon = 150;
    sc.seed = 4;
    sc.noise_std = 0.1;
    sc.smoothing_halflife = 5.0;
    const Trajectory data = synth_expert(sc);
    const StateLayout lay{1, 1, 2, 1};
    std::vector<State> states(data.horizon());
    for (int t = 1; t <= data.horizon(); ++t) states[t - 1] = make_state(data, t, 2, 1);
    const auto reg = fit_autoregressor(data.actions, 1, 0.15);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 5;
    cfg.seed = 2;
    double prev = 1e18;
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        auto forest = std::make_shared<SmoothForest>(
            train_forest(states, data.actions, reg, lambda, LeafMode::distance_only, cfg, lay,
                         data.action_bound));
        const auto rolled = rollout_det(EnsemblePolicy(forest), data.contexts,
                                        data.actions.front());
        const double s = smoothness(rolled.actions);
        CHECK(s <= prev + 1e-12);
        prev = s;
    }
}

TEST_CASE("forest JSON round-trip is lossless") {
    const StateLayout lay{1, 1, 1, 2};
    const auto data = training_set(50, lay, 101);
    ForestConfig cfg;
    cfg.n_trees = 5;
    cfg.max_depth = 4;
    cfg.bootstrap = true;
    cfg.seed = 77;
    const auto forest = train_forest(data.states, data.targets,
                                     LinearAutoregressor::identity(1), 0.8,
                                     LeafMode::joint, cfg, lay, 1.0);
    const auto doc = forest_to_json(forest);
    const auto back = forest_from_json(doc);
    CHECK(forest_to_json(back).dump() == doc.dump());
    for (const auto& s : data.states) CHECK(back.predict(s) == forest.predict(s));
}
