#include <doctest.h>

#include <cmath>

#include "simile/experiments.hpp"
#include "simile/metrics.hpp"
#include "simile/rng.hpp"
#include "simile/theory.hpp"

using namespace simile;

TEST_CASE("imitation_loss basics") {
    CHECK(imitation_loss({{1.0}, {2.0}}, {{1.0}, {2.0}}) == 0.0);
    CHECK(imitation_loss({{0.0}, {0.0}}, {{1.0}, {1.0}}) == 1.0);
    // quadratic homogeneity
    Rng rng(mix64(2));
    Series a(10), b(10);
    for (int t = 0; t < 10; ++t) {
        a[t] = {rng.uniform01()};
        b[t] = {rng.uniform01()};
    }
    const double base = imitation_loss(a, b);
    Series a3 = a, b3 = b;
    for (auto& v : a3) v[0] *= 3.0;
    for (auto& v : b3) v[0] *= 3.0;
    CHECK(imitation_loss(a3, b3) == doctest::Approx(9.0 * base).epsilon(1e-12));
    CHECK_THROWS_AS(static_cast<void>(imitation_loss(a, {{1.0}})), std::invalid_argument);
}

TEST_CASE("smoothness basics") {
    CHECK(smoothness({{0.5}, {0.5}, {0.5}}) == 0.0);
    CHECK(smoothness({{0.0}, {1.0}, {0.0}, {1.0}}) == 1.0);
    // translation invariance
    Rng rng(mix64(3));
    Series a(12);
    for (auto& v : a) v = {rng.uniform01()};
    Series shifted = a;
    for (auto& v : shifted) v[0] += 17.5;
    CHECK(smoothness(shifted) == doctest::Approx(smoothness(a)).epsilon(1e-12));
    CHECK_THROWS_AS(static_cast<void>(smoothness({{1.0}})), std::invalid_argument);
}

TEST_CASE("check_lemma1 hand instances") {
    // quadratic at the pair (1, 0): lhs 1, rhs 12
    const auto r = check_lemma1([](double a) { return a * a; }, 2.0, {{1.0, 0.0}});
    CHECK(r.violations == 0);
    CHECK(r.max_violation == doctest::Approx(1.0 - 12.0));

    // constant function never violates
    const auto rc = check_lemma1([](double) { return 3.0; }, 1.0, {{0.0, 5.0}, {-2.0, 2.0}});
    CHECK(rc.violations == 0);
    CHECK(rc.max_violation <= 0.0);

    // linear function with H -> 0 is degenerate and flagged
    const auto rl = check_lemma1([](double a) { return a + 10.0; }, 0.0, {{0.0, 1.0}});
    CHECK(rl.degenerate);
    CHECK(rl.violations == 1);
}

TEST_CASE("check_lemma1 known-H functions over sampled pairs") {
    Rng rng(mix64(44));
    std::vector<std::pair<double, double>> pairs(10000);
    for (auto& p : pairs) {
        p.first = -3.0 + 6.0 * rng.uniform01();
        p.second = -3.0 + 6.0 * rng.uniform01();
    }
    CHECK(check_lemma1([](double a) { return a * a; }, 2.0, pairs).violations == 0);
    CHECK(check_lemma1([](double a) { return 1.0 + std::sin(a) * std::sin(a); }, 2.0, pairs)
              .violations == 0);
    CHECK(check_lemma1([](double a) { return std::log1p(std::exp(a)); }, 0.25, pairs)
              .violations == 0);
}

TEST_CASE("theorem bounds closed forms") {
    CHECK(theorem2_bound(0.5, 0.5, 0.0, 1.0, 0.0) == 0.0);
    CHECK(theorem2_bound(0.5, 0.5, 1.0, 2.0, -1.0) == doctest::Approx(1.5));
    CHECK(theorem2_bound(1e-9, 0.5, 1.0, 2.0, 0.0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS_AS(static_cast<void>(theorem2_bound(0.5, 1.0, 1.0, 1.0, 0.0)),
                    std::domain_error);

    CHECK(theorem1_bound(0.5, 0.0, 1.0, 100, 0.0) == 0.0);
    CHECK(theorem1_bound(0.01, 0.1, 2.0, 100, -3.0) == doctest::Approx(0.17));
    // beta = 1/T recovers epsilon * L + reduction / T
    const int T = 50;
    CHECK(theorem1_bound(1.0 / T, 0.3, 2.0, T, -1.5) ==
          doctest::Approx(0.3 * 2.0 + (-1.5) / T));
}

TEST_CASE("bounds monotone in epsilon and L") {
    const Vec grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    for (double beta : {0.1, 0.5, 0.9})
        for (double gamma : {0.0, 0.4, 0.9})
            for (size_t i = 0; i + 1 < grid.size(); ++i) {
                CHECK(theorem2_bound(beta, gamma, grid[i], 1.5, -1.0) <=
                      theorem2_bound(beta, gamma, grid[i + 1], 1.5, -1.0));
                CHECK(theorem2_bound(beta, gamma, 1.5, grid[i], -1.0) <=
                      theorem2_bound(beta, gamma, 1.5, grid[i + 1], -1.0));
                CHECK(theorem1_bound(beta, grid[i], 1.5, 30, -1.0) <=
                      theorem1_bound(beta, grid[i + 1], 1.5, 30, -1.0));
                CHECK(theorem1_bound(beta, 1.5, grid[i], 30, -1.0) <=
                      theorem1_bound(beta, 1.5, grid[i + 1], 30, -1.0));
            }
}

TEST_CASE("corollary2 step size") {
    // boundary of improvement: Delta = delta
    const auto eq = corollary2_beta(1.0, 1.0);
    CHECK(eq.beta == 0.01);
    CHECK(eq.bound == 0.0);
    CHECK_FALSE(eq.guaranteed);

    const auto free = corollary2_beta(2.0, 0.0);
    CHECK(free.beta == doctest::Approx(0.5));
    CHECK(free.bound == doctest::Approx(-1.0));
    CHECK(free.guaranteed);

    const auto mid = corollary2_beta(2.0, 1.0);
    CHECK(mid.beta == doctest::Approx(0.25));
    CHECK(mid.bound == doctest::Approx(-1.0 / 6.0));

    const auto none = corollary2_beta(-0.5, 0.2);
    CHECK_FALSE(none.guaranteed);
    CHECK(none.note == "no reduction available");
}

TEST_CASE("estimate_gamma closed form and smoke") {
    const StateLayout lay{1, 1, 0, 1};
    std::vector<State> states;
    Rng rng(mix64(10));
    for (int i = 0; i < 12; ++i) states.push_back({rng.uniform01(), 0.3 + 0.4 * rng.uniform01()});

    // f constant in a: gamma = lambda / (1 + lambda) exactly
    const auto affine = make_single_leaf_forest({0.5}, 1.0, LinearAutoregressor::identity(1),
                                                lay, 1.0);
    CHECK(estimate_gamma(EnsemblePolicy(affine), states, 0.05, 8, 5) ==
          doctest::Approx(0.5).epsilon(1e-12));

    // lambda = 0 single leaf is constant: gamma = 0
    const auto flat = make_single_leaf_forest({0.5}, 0.0, LinearAutoregressor::identity(1), lay,
                                              1.0);
    CHECK(estimate_gamma(EnsemblePolicy(flat), states, 0.05, 8, 5) == 0.0);

    CHECK_THROWS_AS(static_cast<void>(estimate_gamma(EnsemblePolicy(flat), {}, 0.05, 4, 1)),
                    std::invalid_argument);
}

TEST_CASE("smoothness_report fields") {
    SynthConfig sc;
    sc.horizon = 80;
    sc.seed = 9;
    const Trajectory data = synth_expert(sc);
    ForestConfig fc;
    fc.n_trees = 5;
    fc.max_depth = 4;
    const Series rolled(data.actions.begin(), data.actions.end());
    const auto rep = smoothness_report(rolled, data, 1, 1, fc);
    CHECK(rep.mean_first_order_diff == doctest::Approx(smoothness(data.actions)));
    CHECK(rep.expert_reference == doctest::Approx(smoothness(data.actions)));
    CHECK(rep.naive_error >= 0.0);
    CHECK(rep.gap >= 0.0);
    // rolling out the expert itself: the gap is roughly the expert smoothness
    CHECK(rep.gap <= 2.0 * rep.expert_reference);
}
