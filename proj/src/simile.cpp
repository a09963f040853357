#include "simile/simile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simile/rng.hpp"

namespace simile {

Series gen_feedback(const Series& rolled, const Series& expert, double sigma) {
    if (rolled.size() != expert.size())
        throw std::invalid_argument("gen_feedback: length mismatch");
    if (!(sigma >= 0.0 && sigma <= 1.0))
        throw std::invalid_argument("gen_feedback: sigma must be in [0, 1]");
    Series out(rolled.size());
    for (size_t t = 0; t < rolled.size(); ++t) {
        if (rolled[t].size() != expert[t].size())
            throw std::invalid_argument("gen_feedback: dimension mismatch");
        out[t].resize(rolled[t].size());
        for (size_t d = 0; d < rolled[t].size(); ++d)
            out[t][d] = sigma * rolled[t][d] + (1.0 - sigma) * expert[t][d];
    }
    return out;
}

double adaptive_beta(double error_new, double error_old, double beta_min, double beta_max) {
    if (!(error_new >= 0.0) || !(error_old >= 0.0))
        throw std::invalid_argument("adaptive_beta: errors must be >= 0");
    if (error_new == 0.0 && error_old == 0.0) return beta_min;  // converged
    const double raw = error_old / (error_new + error_old);
    return std::clamp(raw, beta_min, beta_max);
}

double sigma_schedule_value(const SigmaSchedule& schedule, int n) {
    if (n < 1) throw std::invalid_argument("sigma_schedule_value: n must be >= 1");
    switch (schedule.kind) {
        case SigmaSchedule::Kind::geometric:
            return schedule.sigma0 * std::pow(schedule.decay, n - 1);
        case SigmaSchedule::Kind::constant:
            return schedule.sigma0;
        case SigmaSchedule::Kind::zero:
            return 0.0;
    }
    throw std::logic_error("sigma_schedule_value: unknown kind");
}

void TrainingConfig::validate() const {
    if (n_iterations < 1) throw std::invalid_argument("config: n_iterations must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
    if (tau < 1) throw std::invalid_argument("config: tau must be >= 1");
    if (p < 0 || q < 0) throw std::invalid_argument("config: p and q must be >= 0");
    if (tau > q) throw std::invalid_argument("config: tau must be <= q (h reads the action window)");
    if (beta_mode == BetaMode::fixed && !(fixed_beta > 0.0 && fixed_beta <= 1.0))
        throw std::invalid_argument("config: fixed beta must be in (0, 1]");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max <= 1.0))
        throw std::invalid_argument("config: bad beta clamp range");
    switch (sigma.kind) {
        case SigmaSchedule::Kind::geometric:
            if (!(sigma.sigma0 >= 0.0 && sigma.sigma0 <= 1.0))
                throw std::invalid_argument("config: sigma0 must be in [0, 1]");
            if (!(sigma.decay > 0.0 && sigma.decay < 1.0))
                throw std::invalid_argument("config: geometric decay must be in (0, 1)");
            break;
        case SigmaSchedule::Kind::constant:
            if (!(sigma.sigma0 >= 0.0 && sigma.sigma0 <= 1.0))
                throw std::invalid_argument("config: sigma must be in [0, 1]");
            break;
        case SigmaSchedule::Kind::zero:
            break;
    }
    forest.validate();
    if (!(gamma_perturbation > 0.0) || gamma_draws < 1 || gamma_max_states < 1)
        throw std::invalid_argument("config: bad gamma estimation knobs");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_finite(double v, const char* what, int iteration) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("simile_train: ") + what + " is not finite at iteration " +
                                 std::to_string(iteration));
}

// thin the roll-out states for the gamma estimate
std::vector<State> sample_states(const std::vector<State>& states, int max_states) {
    if (static_cast<int>(states.size()) <= max_states) return states;
    std::vector<State> out;
    out.reserve(max_states);
    const double stride = static_cast<double>(states.size()) / max_states;
    for (int i = 0; i < max_states; ++i)
        out.push_back(states[static_cast<size_t>(i * stride)]);
    return out;
}

}  // namespace

TrainResult simile_train(const Trajectory& train, const TrainingConfig& cfg,
                         const IterationObserver& observer) {
    cfg.validate();
    train.validate();
    const int T = train.horizon();
    const Series& expert = train.actions;
    const double ridge = cfg.ridge < 0.0 ? 1e-3 * T : cfg.ridge;
    const StateLayout layout{train.context_dim(), train.action_dim(), cfg.p, cfg.q};
    const Vec a0 = expert.front();  // roll-outs start on-distribution

    auto forest_cfg_for = [&cfg](int iteration) {
        ForestConfig fc = cfg.forest;
        fc.seed = mix64(mix64(cfg.seed) + static_cast<std::uint64_t>(iteration));
        return fc;
    };

    TrainResult result;

    // supervised initialization on expert states
    const LinearAutoregressor h0 = fit_autoregressor(expert, cfg.tau, ridge);
    std::vector<State> s0(T);
    for (int t = 1; t <= T; ++t) s0[t - 1] = make_state(train, t, cfg.p, cfg.q);
    auto pihat0 = std::make_shared<SmoothForest>(
        train_forest(s0, expert, h0, cfg.lambda, cfg.leaf_mode, forest_cfg_for(0), layout,
                     train.action_bound));
    EnsemblePolicy policy(pihat0);
    RolloutResult rolled = rollout_det(policy, train.contexts, a0);

    IterationRecord rec0;
    rec0.iteration = 0;
    rec0.sigma = kNaN;
    rec0.beta = 1.0;
    rec0.error_new = imitation_loss(rolled.actions, expert);
    rec0.error_old = rec0.error_new;
    rec0.combined_error = rec0.error_new;
    rec0.smoothness = smoothness(rolled.actions);
    rec0.feedback_descent = kNaN;
    rec0.measured_improvement = kNaN;
    rec0.theory.gamma = estimate_gamma(policy, sample_states(rolled.states, cfg.gamma_max_states),
                                       cfg.gamma_perturbation, cfg.gamma_draws,
                                       mix64(cfg.seed) ^ 0xA11CEULL);
    rec0.theory.contraction_ok = rec0.theory.gamma < 1.0;
    rec0.theory.epsilon = kNaN;
    rec0.theory.lipschitz = kNaN;
    rec0.theory.reduction = kNaN;
    rec0.theory.delta = kNaN;
    rec0.theory.theorem2_bound = kNaN;
    rec0.theory.corollary2_beta = kNaN;
    rec0.theory.corollary2_bound = kNaN;
    check_finite(rec0.combined_error, "initial error", 0);
    result.records.push_back(rec0);
    if (observer) observer(0, policy, rec0);

    for (int n = 1; n <= cfg.n_iterations; ++n) {
        const RolloutResult prev = std::move(rolled);    // roll-out of pi_{n-1}
        const Series& rolled_actions = prev.actions;
        const std::vector<State>& states = prev.states;
        const double error_old = result.records.back().combined_error;

        const double sigma = sigma_schedule_value(cfg.sigma, n);
        const Series feedback = gen_feedback(rolled_actions, expert, sigma);
        const double descent = feedback_descent(rolled_actions, expert, feedback);

        const LinearAutoregressor h = fit_autoregressor(feedback, cfg.tau, ridge);
        auto pihat = std::make_shared<SmoothForest>(
            train_forest(states, feedback, h, cfg.lambda, cfg.leaf_mode, forest_cfg_for(n),
                         layout, train.action_bound));

        const EnsemblePolicy pihat_policy(pihat);
        const RolloutResult new_rolled = rollout_det(pihat_policy, train.contexts, a0);
        const double error_new = imitation_loss(new_rolled.actions, expert);
        check_finite(error_new, "error(pihat)", n);
        check_finite(error_old, "error(pi)", n);

        // theory estimates on the states induced by pi_{n-1}
        TheoryEstimates est;
        double eps = 0.0;
        double loss_new_on_old = 0.0;  // loss of pihat on d_pi
        double worst_gap = 0.0;        // max_t ||a_t - a*_t||
        for (int t = 0; t < T; ++t) {
            const Vec ph = pihat->predict(states[t]);
            const Vec po = policy.predict(states[t]);
            double dsq = 0.0, lsq = 0.0, gsq = 0.0;
            for (int d = 0; d < layout.action_dim; ++d) {
                const double de = ph[d] - po[d];
                dsq += de * de;
                const double le = ph[d] - expert[t][d];
                lsq += le * le;
                const double ge = rolled_actions[t][d] - expert[t][d];
                gsq += ge * ge;
            }
            eps = std::max(eps, std::sqrt(dsq));
            loss_new_on_old += lsq;
            worst_gap = std::max(worst_gap, std::sqrt(gsq));
        }
        loss_new_on_old /= static_cast<double>(T);
        est.epsilon = eps;
        est.lipschitz = 2.0 * worst_gap;
        est.reduction = error_old - loss_new_on_old;  // Delta

        const auto gamma_states = sample_states(states, cfg.gamma_max_states);
        const std::uint64_t gseed = mix64(cfg.seed + 0x9A33AULL * n);
        est.gamma = std::max(
            estimate_gamma(policy, gamma_states, cfg.gamma_perturbation, cfg.gamma_draws, gseed),
            estimate_gamma(pihat_policy, gamma_states, cfg.gamma_perturbation, cfg.gamma_draws,
                           gseed ^ 1));
        est.contraction_ok = est.gamma < 1.0;
        est.delta = est.contraction_ok
                        ? est.gamma * est.epsilon * est.lipschitz / (1.0 - est.gamma)
                        : kNaN;

        const Corollary2Result cor2 =
            corollary2_beta(est.reduction, est.contraction_ok ? est.delta : est.reduction,
                            cfg.beta_min);
        est.corollary2_beta = cor2.beta;
        est.corollary2_bound = cor2.bound;

        double beta = cfg.fixed_beta;
        switch (cfg.beta_mode) {
            case BetaMode::adaptive:
                beta = adaptive_beta(error_new, error_old, cfg.beta_min, cfg.beta_max);
                break;
            case BetaMode::fixed:
                break;
            case BetaMode::corollary2:
                beta = std::clamp(cor2.beta, cfg.beta_min, cfg.beta_max);
                break;
        }

        est.theorem2_bound = (est.contraction_ok && beta > 0.0 && beta < 1.0)
                                 ? theorem2_bound(beta, est.gamma, est.epsilon, est.lipschitz,
                                                  -est.reduction)
                                 : kNaN;

        policy = interpolate(policy, pihat, beta);
        rolled = rollout_det(policy, train.contexts, a0);

        IterationRecord rec;
        rec.iteration = n;
        rec.sigma = sigma;
        rec.beta = beta;
        rec.error_new = error_new;
        rec.error_old = error_old;
        rec.combined_error = imitation_loss(rolled.actions, expert);
        rec.smoothness = smoothness(rolled.actions);
        rec.feedback_descent = descent;
        rec.measured_improvement = rec.combined_error - error_old;
        rec.theory = est;
        check_finite(rec.combined_error, "combined error", n);
        result.records.push_back(rec);
        if (observer) observer(n, policy, rec);
    }

    result.policy = std::move(policy);
    return result;
}

}  // namespace simile
