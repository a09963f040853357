#include "simile/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "simile/metrics.hpp"
#include "simile/rng.hpp"
#include "simile/theory.hpp"

namespace simile {

namespace {

double effective_ridge(const TrainingConfig& cfg, int T) {
    return cfg.ridge < 0.0 ? 1e-3 * T : cfg.ridge;
}

double sample_stddev(const Vec& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double mean_of(const Vec& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

}  // namespace

TrainingConfig apply_beta_token(TrainingConfig cfg, const std::string& token) {
    if (token == "adaptive") {
        cfg.beta_mode = BetaMode::adaptive;
        return cfg;
    }
    if (token == "corollary2") {
        cfg.beta_mode = BetaMode::corollary2;
        return cfg;
    }
    try {
        size_t used = 0;
        const double b = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        cfg.beta_mode = BetaMode::fixed;
        cfg.fixed_beta = b;
    } catch (const std::exception&) {
        throw std::invalid_argument("unrecognized beta mode '" + token +
                                    "' (want adaptive, corollary2, or a number)");
    }
    return cfg;
}

std::vector<BetaCompareCell> compare_beta(const Trajectory& data, const TrainingConfig& base,
                                          const std::vector<std::string>& grid) {
    if (grid.empty()) throw std::invalid_argument("compare_beta: empty grid");
    std::vector<BetaCompareCell> cells;
    cells.reserve(grid.size());
    for (const std::string& token : grid) {
        const TrainingConfig cfg = apply_beta_token(base, token);
        cells.push_back(BetaCompareCell{token, simile_train(data, cfg).records});
    }
    return cells;
}

std::vector<InterpRow> compare_interp(const Trajectory& data, TrainingConfig base, double beta,
                                      int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("compare_interp: n_samples must be >= 1");
    base.beta_mode = BetaMode::fixed;
    base.fixed_beta = beta;
    const Vec a0 = data.actions.front();

    std::vector<InterpRow> rows;
    auto observer = [&](int n, const EnsemblePolicy& policy, const IterationRecord& rec) {
        Vec losses(n_samples);
        for (int i = 0; i < n_samples; ++i) {
            const std::uint64_t seed = mix64(base.seed + 7919ULL * (n + 1) + i);
            const RolloutResult r = rollout_sto(policy, data.contexts, a0, seed);
            losses[i] = imitation_loss(r.actions, data.actions);
        }
        const double mean = mean_of(losses);
        const double se = n_samples > 1
                              ? sample_stddev(losses, mean) / std::sqrt(double(n_samples))
                              : 0.0;
        rows.push_back(InterpRow{n, rec.combined_error, mean, se});
    };
    simile_train(data, base, observer);
    return rows;
}

namespace {

Vec expert_mean_action(const Trajectory& data) {
    Vec mean(data.action_dim(), 0.0);
    for (const auto& a : data.actions)
        for (size_t d = 0; d < a.size(); ++d) mean[d] += a[d];
    for (double& v : mean) v /= static_cast<double>(data.horizon());
    return mean;
}

}  // namespace

std::vector<SigmaSweepRow> sigma_tradeoff(const Trajectory& data, const TrainingConfig& base,
                                          const std::vector<double>& sigmas, bool poor_start) {
    if (sigmas.empty()) throw std::invalid_argument("sigma_tradeoff: empty grid");
    base.validate();
    data.validate();
    const int T = data.horizon();
    const double ridge = effective_ridge(base, T);
    const StateLayout layout{data.context_dim(), data.action_dim(), base.p, base.q};
    const Vec a0 = data.actions.front();

    // shared starting policy and roll-out
    const LinearAutoregressor h0 = fit_autoregressor(data.actions, base.tau, ridge);
    std::shared_ptr<SmoothForest> pi0;
    if (poor_start) {
        pi0 = make_single_leaf_forest(expert_mean_action(data), 0.0, h0, layout,
                                      data.action_bound);
    } else {
        std::vector<State> s0(T);
        for (int t = 1; t <= T; ++t) s0[t - 1] = make_state(data, t, base.p, base.q);
        ForestConfig fc = base.forest;
        fc.seed = mix64(mix64(base.seed) + 0);
        pi0 = std::make_shared<SmoothForest>(train_forest(
            s0, data.actions, h0, base.lambda, base.leaf_mode, fc, layout, data.action_bound));
    }
    const RolloutResult rolled = rollout_det(EnsemblePolicy(pi0), data.contexts, a0);

    ForestConfig fc1 = base.forest;
    fc1.seed = mix64(mix64(base.seed) + 1);
    std::vector<SigmaSweepRow> rows;
    rows.reserve(sigmas.size());
    for (double sigma : sigmas) {
        const Series feedback = gen_feedback(rolled.actions, data.actions, sigma);
        const LinearAutoregressor h = fit_autoregressor(feedback, base.tau, ridge);
        auto pihat = std::make_shared<SmoothForest>(
            train_forest(rolled.states, feedback, h, base.lambda, base.leaf_mode, fc1, layout,
                         data.action_bound));
        const RolloutResult r = rollout_det(EnsemblePolicy(pihat), data.contexts, a0);
        rows.push_back(SigmaSweepRow{sigma, imitation_loss(r.actions, data.actions),
                                     smoothness(r.actions)});
    }
    return rows;
}

std::shared_ptr<SmoothForest> make_single_leaf_forest(const Vec& leaf, double lambda,
                                                      const LinearAutoregressor& reg,
                                                      const StateLayout& layout,
                                                      double action_bound) {
    auto forest = std::make_shared<SmoothForest>();
    forest->lambda = lambda;
    forest->reg = reg;
    forest->layout = layout;
    forest->action_bound = action_bound;
    forest->cfg.n_trees = 1;
    forest->cfg.max_depth = 0;
    auto node = std::make_unique<TreeNode>();
    node->leaf = leaf;
    forest->trees.push_back(std::move(node));
    return forest;
}

Prop1Result prop1_experiment(const Trajectory& data, const TrainingConfig& base, double sigma_lo,
                             double sigma_hi) {
    base.validate();
    data.validate();
    const int T = data.horizon();
    const double ridge = effective_ridge(base, T);
    const StateLayout layout{data.context_dim(), data.action_dim(), base.p, base.q};
    const Vec a0 = data.actions.front();

    // deliberately poor initial policy: a constant at the expert's mean level,
    // which has a large average gap while staying on the action scale
    const LinearAutoregressor h0 = fit_autoregressor(data.actions, base.tau, ridge);
    const auto poor = make_single_leaf_forest(expert_mean_action(data), 0.0, h0, layout,
                                              data.action_bound);
    const RolloutResult rolled = rollout_det(EnsemblePolicy(poor), data.contexts, a0);

    Prop1Result out;
    out.sigma_lo = sigma_lo;
    out.sigma_hi = sigma_hi;
    out.expert_smoothness = smoothness(data.actions);
    double gap = 0.0;
    for (int t = 0; t < T; ++t) {
        const Vec& prev = t == 0 ? rolled.actions[0] : rolled.actions[t - 1];
        double sq = 0.0;
        for (size_t d = 0; d < prev.size(); ++d) {
            const double e = data.actions[t][d] - prev[d];
            sq += e * e;
        }
        gap += std::sqrt(sq);
    }
    out.gap = gap / static_cast<double>(T);

    ForestConfig fc = base.forest;
    fc.seed = mix64(mix64(base.seed) + 1);
    auto retrain_smoothness = [&](double sigma) {
        const Series feedback = gen_feedback(rolled.actions, data.actions, sigma);
        const LinearAutoregressor h = fit_autoregressor(feedback, base.tau, ridge);
        auto pihat = std::make_shared<SmoothForest>(
            train_forest(rolled.states, feedback, h, base.lambda, base.leaf_mode, fc, layout,
                         data.action_bound));
        const RolloutResult r = rollout_det(EnsemblePolicy(pihat), data.contexts, a0);
        return smoothness(r.actions);
    };
    out.smoothness_lo = retrain_smoothness(sigma_lo);
    out.smoothness_hi = retrain_smoothness(sigma_hi);
    return out;
}

// ---------------------------------------------------------------------------
// theory suite

namespace {

using nlohmann::json;

std::vector<std::pair<double, double>> sample_pairs(int n, double lo, double hi,
                                                    std::uint64_t seed) {
    Rng rng(mix64(seed));
    std::vector<std::pair<double, double>> pairs(n);
    for (auto& p : pairs) {
        p.first = lo + (hi - lo) * rng.uniform01();
        p.second = lo + (hi - lo) * rng.uniform01();
    }
    return pairs;
}

TheoryCheck lemma1_check(const std::string& name, const std::function<double(double)>& fn,
                         double H, double lo, double hi, std::uint64_t seed) {
    const auto report = check_lemma1(fn, H, sample_pairs(10000, lo, hi, seed));
    TheoryCheck c{name, report.violations == 0 && report.precondition_ok, true, {}};
    c.detail = json{{"pairs", report.pairs},
                    {"violations", report.violations},
                    {"max_violation", report.max_violation},
                    {"H", H}};
    return c;
}

struct AffinePair {
    EnsemblePolicy mixture;  // two-member beta mixture
    EnsemblePolicy base;     // the 1-beta member alone
};

AffinePair make_affine_mixture(const StateLayout& layout, double action_bound, double beta) {
    const auto identity = LinearAutoregressor::identity(layout.action_dim);
    const auto a = make_single_leaf_forest(Vec(layout.action_dim, 0.35 * action_bound), 1.0,
                                           identity, layout, action_bound);
    const auto b = make_single_leaf_forest(Vec(layout.action_dim, 0.8 * action_bound), 1.0,
                                           identity, layout, action_bound);
    AffinePair out;
    out.base = EnsemblePolicy(a);
    out.mixture = interpolate(out.base, b, beta);
    return out;
}

}  // namespace

TheoryReport run_theory_suite(const Trajectory& data, const TrainingConfig& base) {
    base.validate();
    data.validate();
    TheoryReport report;
    auto add = [&report](TheoryCheck c) {
        if (c.asserted && !c.pass) report.all_pass = false;
        report.checks.push_back(std::move(c));
    };

    // self-bounding smoothness inequality on functions with known H
    add(lemma1_check("lemma1_quadratic", [](double a) { return a * a; }, 2.0, -3.0, 3.0, 11));
    add(lemma1_check("lemma1_one_plus_sin2",
                     [](double a) { return 1.0 + std::sin(a) * std::sin(a); }, 2.0, -6.0, 6.0,
                     12));
    add(lemma1_check("lemma1_softplus", [](double a) { return std::log1p(std::exp(a)); }, 0.25,
                     -4.0, 4.0, 13));
    {
        // a linear function is 0-smooth; the inequality must be flagged, not pass
        const auto r = check_lemma1([](double a) { return a + 10.0; }, 0.0,
                                    sample_pairs(1000, -3.0, 3.0, 14));
        TheoryCheck c{"lemma1_degenerate_flagged", r.degenerate && r.violations > 0, true, {}};
        c.detail = json{{"violations", r.violations}, {"degenerate", r.degenerate}};
        add(c);
    }

    const double R = data.action_bound;
    const StateLayout affine_layout{data.context_dim(), data.action_dim(), 0, 1};

    {
        // closed-form contraction of the constant-leaf policy
        const auto f = make_single_leaf_forest(Vec(data.action_dim(), 0.5 * R), 1.0,
                                               LinearAutoregressor::identity(data.action_dim()),
                                               affine_layout, R);
        std::vector<State> states;
        for (int t = 1; t <= std::min(data.horizon(), 16); ++t) {
            State s = make_state(data, t, 0, 1);
            states.push_back(std::move(s));
        }
        const double g = estimate_gamma(EnsemblePolicy(f), states, 0.05 * R, 8, 99);
        TheoryCheck c{"gamma_closed_form", std::fabs(g - 0.5) <= 1e-9, true, {}};
        c.detail = json{{"estimate", g}, {"expected", 0.5}};
        add(c);
    }
    {
        // error-path contract: an expanding regularizer must be reported as
        // a contraction violation, and the suite keeps going
        LinearAutoregressor expanding;
        expanding.tau = 1;
        expanding.coeffs.assign(data.action_dim(), Vec{1.2});
        const auto f = make_single_leaf_forest(Vec(data.action_dim(), 0.5 * R), 1e6, expanding,
                                               affine_layout, R);
        std::vector<State> states{make_state(data, 2, 0, 1)};
        const double g = estimate_gamma(EnsemblePolicy(f), states, 0.05 * R, 8, 100);
        bool reported = false;
        std::string message;
        try {
            theorem2_bound(0.5, g, 1.0, 1.0, 0.0);
        } catch (const std::domain_error& e) {
            reported = true;
            message = e.what();
        }
        TheoryCheck c{"contraction_violation_reported", g >= 1.0 && reported, true, {}};
        c.detail = json{{"gamma", g}, {"message", message}};
        add(c);
    }
    {
        // bounds are monotone in epsilon and L
        bool ok = true;
        const Vec grid{0.0, 0.1, 0.5, 1.0, 2.0};
        for (double b : {0.1, 0.5, 0.9})
            for (double g : {0.0, 0.3, 0.8})
                for (size_t i = 0; i + 1 < grid.size(); ++i) {
                    ok = ok && theorem2_bound(b, g, grid[i], 1.0, -0.5) <=
                                   theorem2_bound(b, g, grid[i + 1], 1.0, -0.5);
                    ok = ok && theorem2_bound(b, g, 1.0, grid[i], -0.5) <=
                                   theorem2_bound(b, g, 1.0, grid[i + 1], -0.5);
                    ok = ok && theorem1_bound(b, grid[i], 1.0, 50, -0.5) <=
                                   theorem1_bound(b, grid[i + 1], 1.0, 50, -0.5);
                    ok = ok && theorem1_bound(b, 1.0, grid[i], 50, -0.5) <=
                                   theorem1_bound(b, 1.0, grid[i + 1], 50, -0.5);
                }
        add(TheoryCheck{"bound_monotonicity", ok, true, {}});
    }

    // deterministic vs stochastic interpolation, affine members: unbiased
    // per-step means and no worse deterministic loss
    {
        const int T = std::min(data.horizon(), 100);
        const Series contexts(data.contexts.begin(), data.contexts.begin() + T);
        const Series expert(data.actions.begin(), data.actions.begin() + T);
        const Vec a0 = data.actions.front();
        const auto pair = make_affine_mixture(affine_layout, R, 0.5);
        const RolloutResult det = rollout_det(pair.mixture, contexts, a0);

        const int n_samples = 500;
        const int k = data.action_dim();
        std::vector<Vec> step_sum(T, Vec(k, 0.0)), step_sumsq(T, Vec(k, 0.0));
        Vec losses(n_samples);
        for (int i = 0; i < n_samples; ++i) {
            const RolloutResult sto =
                rollout_sto(pair.mixture, contexts, a0, mix64(base.seed + 31 * i));
            losses[i] = imitation_loss(sto.actions, expert);
            for (int t = 0; t < T; ++t)
                for (int d = 0; d < k; ++d) {
                    step_sum[t][d] += sto.actions[t][d];
                    step_sumsq[t][d] += sto.actions[t][d] * sto.actions[t][d];
                }
        }
        int bad_steps = 0;
        double worst_ratio = 0.0;
        for (int t = 0; t < T; ++t)
            for (int d = 0; d < k; ++d) {
                const double mean = step_sum[t][d] / n_samples;
                const double var =
                    std::max(0.0, step_sumsq[t][d] / n_samples - mean * mean) *
                    (double(n_samples) / (n_samples - 1));
                const double se = std::sqrt(var / n_samples);
                const double diff = std::fabs(mean - det.actions[t][d]);
                if (diff > 3.0 * se + 1e-12) ++bad_steps;
                if (se > 0.0) worst_ratio = std::max(worst_ratio, diff / se);
            }
        TheoryCheck c{"lemma2_affine_unbiased", bad_steps == 0, true, {}};
        c.detail = json{{"bad_steps", bad_steps}, {"worst_z", worst_ratio}, {"samples", n_samples}};
        add(c);

        const double det_loss = imitation_loss(det.actions, expert);
        const double mean_loss = mean_of(losses);
        const double se_loss = sample_stddev(losses, mean_loss) / std::sqrt(double(n_samples));
        TheoryCheck c2{"corollary1_affine", det_loss <= mean_loss + 3.0 * se_loss, true, {}};
        c2.detail = json{{"deterministic_loss", det_loss},
                         {"mean_stochastic_loss", mean_loss},
                         {"stderr", se_loss}};
        add(c2);
    }

    // a full adaptive training run: feedback descent and the improvement bound
    {
        const TrainResult run = simile_train(data, base);
        bool descent_ok = true;
        double worst = -std::numeric_limits<double>::infinity();
        for (size_t n = 1; n < run.records.size(); ++n) {
            worst = std::max(worst, run.records[n].feedback_descent);
            if (!(run.records[n].feedback_descent <= 0.0)) descent_ok = false;
        }
        TheoryCheck c{"feedback_descent", descent_ok, true, {}};
        c.detail = json{{"max_descent_value", worst}};
        add(c);

        int contraction_failures = 0, bound_violations = 0;
        json per_iteration = json::array();
        for (size_t n = 1; n < run.records.size(); ++n) {
            const IterationRecord& r = run.records[n];
            if (!r.theory.contraction_ok) {
                ++contraction_failures;
                per_iteration.push_back(json{{"iteration", r.iteration},
                                             {"contraction_ok", false},
                                             {"gamma", r.theory.gamma}});
                continue;
            }
            const double slack = 0.1 * std::fabs(r.theory.theorem2_bound) + 1e-6;
            const bool ok = r.measured_improvement <= r.theory.theorem2_bound + slack;
            if (!ok) ++bound_violations;
            per_iteration.push_back(json{{"iteration", r.iteration},
                                         {"measured", r.measured_improvement},
                                         {"bound", r.theory.theorem2_bound},
                                         {"gamma", r.theory.gamma},
                                         {"within", ok}});
        }
        const int N = static_cast<int>(run.records.size()) - 1;
        const int allowed = N / 10;  // "9 of 10" style estimation slack
        TheoryCheck c2{"theorem2_bound_run",
                       contraction_failures == 0 && bound_violations <= allowed, true, {}};
        c2.detail = json{{"iterations", N},
                         {"contraction_failures", contraction_failures},
                         {"bound_violations", bound_violations},
                         {"allowed_violations", allowed},
                         {"per_iteration", per_iteration}};
        add(c2);
    }

    // corollary-2 step size: no degradation whenever the reduction dominates
    {
        TrainingConfig cfg = base;
        cfg.beta_mode = BetaMode::corollary2;
        const TrainResult run = simile_train(data, cfg);
        int applicable = 0, violations = 0;
        for (size_t n = 1; n < run.records.size(); ++n) {
            const IterationRecord& r = run.records[n];
            const bool guaranteed = r.theory.contraction_ok && std::isfinite(r.theory.delta) &&
                                    r.theory.reduction > r.theory.delta;
            if (!guaranteed) continue;
            ++applicable;
            const double slack = 0.1 * std::fabs(r.theory.corollary2_bound) + 1e-6;
            if (!(r.measured_improvement <= slack)) ++violations;
        }
        TheoryCheck c{"corollary2_non_degradation", violations == 0, true, {}};
        c.detail = json{{"applicable_iterations", applicable}, {"violations", violations}};
        add(c);
    }

    // forest-member interpolation: the unbiasedness argument is only exact
    // for affine members, so this one is reported, not asserted
    {
        const auto rows = compare_interp(data, base, 0.5, 50);
        bool det_no_worse = true;
        double worst_gap = 0.0;
        for (const auto& row : rows) {
            // the 1e-12 absorbs summation dust when the arms coincide exactly
            // (single-member ensembles make every stochastic roll-out identical)
            const double margin = row.mean_stochastic_error + 3.0 * row.stderr_value + 1e-12;
            if (row.deterministic_error > margin) det_no_worse = false;
            worst_gap = std::max(worst_gap, row.deterministic_error - row.mean_stochastic_error);
        }
        TheoryCheck c{"corollary1_forest", det_no_worse, true, {}};
        json per = json::array();
        for (const auto& row : rows)
            per.push_back(json{{"iteration", row.iteration},
                               {"deterministic_error", row.deterministic_error},
                               {"mean_stochastic_error", row.mean_stochastic_error},
                               {"stderr", row.stderr_value}});
        c.detail = json{{"rows", per}, {"worst_det_minus_sto", worst_gap}};
        add(c);

        TheoryCheck c2{"lemma2_forest_reported", true, false, {}};
        c2.detail = json{{"note", "per-step unbiasedness is exact only for affine members; "
                                  "see corollary1_forest rows for the measured gap"},
                         {"worst_det_minus_sto", worst_gap}};
        add(c2);
    }

    return report;
}

}  // namespace simile
