#include <doctest.h>

#include <cmath>

#include "simile/experiments.hpp"
#include "simile/metrics.hpp"
#include "simile/policy.hpp"
#include "simile/rng.hpp"

using namespace simile;

namespace {

const StateLayout kLay{1, 1, 0, 1};  // state = [x_t, a_{t-1}]

std::shared_ptr<SmoothForest> leaf_policy(double value, double lambda, double bound = 1.0) {
    return make_single_leaf_forest({value}, lambda, LinearAutoregressor::identity(1), kLay,
                                   bound);
}

Series const_contexts(int T, double x) { return Series(T, Vec{x}); }

}  // namespace

TEST_CASE("interpolate weight bookkeeping") {
    const auto A = leaf_policy(0.2, 0.0);
    const auto B = leaf_policy(0.8, 0.0);
    EnsemblePolicy prev(A);

    // beta = 0 leaves the previous policy untouched
    const auto same = interpolate(prev, B, 0.0);
    REQUIRE(same.size() == 1);
    CHECK(same.members()[0].forest.get() == A.get());
    CHECK(same.members()[0].weight == 1.0);

    // beta = 1 replaces everything
    const auto replaced = interpolate(prev, B, 1.0);
    REQUIRE(replaced.size() == 1);
    CHECK(replaced.members()[0].forest.get() == B.get());
    CHECK(replaced.members()[0].weight == 1.0);

    const auto mixed = interpolate(prev, B, 0.25);
    REQUIRE(mixed.size() == 2);
    CHECK(mixed.members()[0].weight == 0.75);
    CHECK(mixed.members()[1].weight == 0.25);

    CHECK_THROWS_AS(static_cast<void>(interpolate(prev, B, 1.5)), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(interpolate(prev, B, -0.1)), std::invalid_argument);
}

TEST_CASE("interpolate weights follow the closed form") {
    const Vec betas{0.4, 0.3, 0.6, 0.2, 0.5, 0.35, 0.45, 0.25};
    EnsemblePolicy policy(leaf_policy(0.1, 0.0));
    std::vector<double> applied{1.0};  // weight history, member j at position j
    for (double beta : betas) {
        policy = interpolate(policy, leaf_policy(0.5, 0.0), beta);
        applied.push_back(beta);
    }
    REQUIRE(policy.size() == static_cast<int>(betas.size()) + 1);
    // weight of member j: beta_j * prod_{i > j} (1 - beta_i), accumulated in
    // application order so the comparison is exact
    for (size_t j = 0; j < applied.size(); ++j) {
        double expected = applied[j];
        for (size_t i = j + 1; i < applied.size(); ++i) expected *= 1.0 - applied[i];
        CHECK(policy.members()[j].weight == expected);
    }
}

TEST_CASE("ensemble simplex validation") {
    const auto A = leaf_policy(0.2, 0.0);
    CHECK_THROWS_AS(
        static_cast<void>(EnsemblePolicy::from_members({{A, 0.6}, {A, 0.6}})),
        std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(EnsemblePolicy::from_members({{A, -0.1}, {A, 1.1}})),
                    std::invalid_argument);
    CHECK_NOTHROW(static_cast<void>(EnsemblePolicy::from_members({{A, 0.5}, {A, 0.5}})));
}

TEST_CASE("rollout_det closed forms") {
    // identity in a: constant trajectory at a0
    const auto identity_pol = leaf_policy(0.5, 1e12);
    const auto r1 = rollout_det(EnsemblePolicy(identity_pol), const_contexts(10, 0.3), {0.25});
    for (const auto& a : r1.actions) CHECK(a[0] == doctest::Approx(0.25).epsilon(1e-9));

    // lambda = 0 constant leaf: every step equals the leaf value
    const auto flat = leaf_policy(0.7, 0.0);
    const auto r2 = rollout_det(EnsemblePolicy(flat), const_contexts(7, 0.1), {0.0});
    for (const auto& a : r2.actions) CHECK(a[0] == 0.7);

    // hand-iterated recurrence: pi([x, a]) = (x + a) / 2 with x = 2
    const auto half = leaf_policy(2.0, 1.0, 10.0);
    const auto r3 = rollout_det(EnsemblePolicy(half), const_contexts(3, 2.0), {0.0});
    CHECK(r3.actions[0][0] == doctest::Approx(1.0));
    CHECK(r3.actions[1][0] == doctest::Approx(1.5));
    CHECK(r3.actions[2][0] == doctest::Approx(1.75));

    // states are logged alongside actions
    REQUIRE(r3.states.size() == 3);
    CHECK(r3.states[0] == State{2.0, 0.0});
    CHECK(r3.states[1] == State{2.0, 1.0});
}

TEST_CASE("rollout_sto degenerate boundaries") {
    const auto A = leaf_policy(0.3, 0.5);
    const auto B = leaf_policy(0.9, 0.5);
    const Series ctx = const_contexts(20, 0.5);

    // single member: stochastic is exactly deterministic
    const EnsemblePolicy solo(A);
    const auto det = rollout_det(solo, ctx, {0.1});
    const auto sto = rollout_sto(solo, ctx, {0.1}, 1234);
    CHECK(det.actions == sto.actions);

    // beta = 0 mixture never picks the new member
    const auto mix0 = interpolate(solo, B, 0.0);
    CHECK(rollout_sto(mix0, ctx, {0.1}, 99).actions == det.actions);

    // identical inputs and seed reproduce bit for bit
    const auto mix = interpolate(solo, B, 0.5);
    CHECK(rollout_sto(mix, ctx, {0.1}, 7).actions == rollout_sto(mix, ctx, {0.1}, 7).actions);
}

TEST_CASE("stochastic roll-outs average to the deterministic one (affine members)") {
    const int T = 60;
    const int n_samples = 400;
    const auto A = leaf_policy(0.35, 1.0);
    const auto B = leaf_policy(0.80, 1.0);
    const auto mix = interpolate(EnsemblePolicy(A), B, 0.5);
    Rng ctx_rng(mix64(17));
    Series ctx(T);
    for (auto& x : ctx) x = {ctx_rng.uniform01()};
    const auto det = rollout_det(mix, ctx, {0.5});

    Vec sum(T, 0.0), sumsq(T, 0.0);
    for (int i = 0; i < n_samples; ++i) {
        const auto sto = rollout_sto(mix, ctx, {0.5}, mix64(1000 + i));
        for (int t = 0; t < T; ++t) {
            sum[t] += sto.actions[t][0];
            sumsq[t] += sto.actions[t][0] * sto.actions[t][0];
        }
    }
    for (int t = 0; t < T; ++t) {
        const double mean = sum[t] / n_samples;
        const double var = std::max(0.0, sumsq[t] / n_samples - mean * mean) * n_samples /
                           (n_samples - 1);
        const double se = std::sqrt(var / n_samples);
        CHECK(std::fabs(mean - det.actions[t][0]) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("deterministic loss no worse than stochastic on the synthetic task") {
    SynthConfig sc;
    sc.horizon = 100;
    sc.seed = 21;
    sc.noise_std = 0.1;
    sc.smoothing_halflife = 5.0;
    const Trajectory data = synth_expert(sc);
    const auto A = make_single_leaf_forest({0.4}, 1.0, LinearAutoregressor::identity(1),
                                           StateLayout{1, 1, 0, 1}, 1.0);
    const auto B = make_single_leaf_forest({0.7}, 1.0, LinearAutoregressor::identity(1),
                                           StateLayout{1, 1, 0, 1}, 1.0);
    const auto mix = interpolate(EnsemblePolicy(A), B, 0.5);
    const auto det = rollout_det(mix, data.contexts, data.actions.front());
    const double det_loss = imitation_loss(det.actions, data.actions);
    const int n_samples = 400;
    double acc = 0.0, accsq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const auto sto = rollout_sto(mix, data.contexts, data.actions.front(), mix64(5000 + i));
        const double l = imitation_loss(sto.actions, data.actions);
        acc += l;
        accsq += l * l;
    }
    const double mean = acc / n_samples;
    const double var = std::max(0.0, accsq / n_samples - mean * mean) * n_samples /
                       (n_samples - 1);
    CHECK(det_loss <= mean + 3.0 * std::sqrt(var / n_samples) + 1e-12);
}

TEST_CASE("rollout input validation") {
    const auto A = leaf_policy(0.3, 0.5);
    const EnsemblePolicy solo(A);
    CHECK_THROWS_AS(static_cast<void>(rollout_det(solo, {}, {0.1})), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(rollout_det(solo, const_contexts(5, 0.2), {0.1, 0.2})),
                    std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(rollout_det(solo, {{0.2, 0.4}}, {0.1})),
                    std::invalid_argument);
}
