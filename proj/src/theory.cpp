#include "simile/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simile/metrics.hpp"
#include "simile/rng.hpp"

namespace simile {

Lemma1Report check_lemma1(const std::function<double(double)>& fn, double H,
                          const std::vector<std::pair<double, double>>& pairs,
                          double tolerance) {
    Lemma1Report report;
    report.pairs = static_cast<int>(pairs.size());
    report.degenerate = !(H > 0.0);
    report.max_violation = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : pairs) {
        const double fa = fn(a);
        const double fb = fn(b);
        if (fa < 0.0 || fb < 0.0) report.precondition_ok = false;
        const double lhs = (fa - fb) * (fa - fb);
        const double rhs = 6.0 * H * (fa + fb) * (a - b) * (a - b);
        const double gap = lhs - rhs;
        report.max_violation = std::max(report.max_violation, gap);
        if (gap > tolerance) ++report.violations;
    }
    if (pairs.empty()) report.max_violation = 0.0;
    return report;
}

double theorem1_bound(double beta, double epsilon, double L, int T, double reduction_term) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("theorem1_bound: beta must be in (0, 1)");
    return beta * epsilon * L * static_cast<double>(T) + beta * reduction_term;
}

double theorem2_bound(double beta, double gamma, double epsilon, double L,
                      double reduction_term) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("theorem2_bound: beta must be in (0, 1)");
    if (!(gamma >= 0.0)) throw std::invalid_argument("theorem2_bound: gamma must be >= 0");
    if (gamma >= 1.0) throw std::domain_error("theorem2_bound: contraction violated (gamma >= 1)");
    return beta * gamma * epsilon * L / ((1.0 - beta) * (1.0 - gamma)) + beta * reduction_term;
}

Corollary2Result corollary2_beta(double Delta, double delta, double beta_min) {
    Corollary2Result r;
    if (!(Delta > 0.0)) {
        r.beta = beta_min;
        r.bound = 0.0;
        r.note = "no reduction available";
        return r;
    }
    if (delta < 0.0) throw std::invalid_argument("corollary2_beta: delta must be >= 0");
    if (delta >= Delta) {
        r.beta = beta_min;
        r.bound = 0.0;
        r.note = "contraction penalty dominates reduction";
        return r;
    }
    r.beta = std::max((Delta - delta) / (2.0 * Delta), beta_min);
    r.bound = -((Delta - delta) * (Delta - delta)) / (2.0 * (Delta + delta));
    r.guaranteed = true;
    return r;
}

double estimate_gamma(const EnsemblePolicy& policy, const std::vector<State>& states,
                      double perturbation, int draws_per_state, std::uint64_t seed) {
    if (states.empty()) throw std::invalid_argument("estimate_gamma: empty state sample");
    if (!(perturbation > 0.0))
        throw std::invalid_argument("estimate_gamma: perturbation must be > 0");
    const StateLayout& lay = policy.layout();
    const int off = lay.action_offset();
    const int width = lay.q * lay.action_dim;
    Rng rng(mix64(seed));
    double gamma = 0.0;
    for (const State& s : states) {
        const Vec base = policy.predict(s);
        for (int r = 0; r < draws_per_state; ++r) {
            Vec u(width);
            double norm = 0.0;
            for (double& v : u) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) continue;
            State sp = s;
            for (int i = 0; i < width; ++i) sp[off + i] += perturbation * u[i] / norm;
            const Vec moved = policy.predict(sp);
            double dist = 0.0;
            for (size_t d = 0; d < moved.size(); ++d) {
                const double e = moved[d] - base[d];
                dist += e * e;
            }
            gamma = std::max(gamma, std::sqrt(dist) / perturbation);
        }
    }
    return gamma;
}

SmoothnessReport smoothness_report(const Series& rolled, const Trajectory& expert, int p, int q,
                                   const ForestConfig& cfg) {
    expert.validate();
    if (rolled.size() != expert.actions.size())
        throw std::invalid_argument("smoothness_report: length mismatch");
    SmoothnessReport report;
    report.mean_first_order_diff = smoothness(rolled);
    report.expert_reference = smoothness(expert.actions);

    double gap = 0.0;
    const int T = expert.horizon();
    for (int t = 0; t < T; ++t) {
        const Vec& prev = t == 0 ? rolled[0] : rolled[t - 1];
        double sq = 0.0;
        for (size_t d = 0; d < prev.size(); ++d) {
            const double e = expert.actions[t][d] - prev[d];
            sq += e * e;
        }
        gap += std::sqrt(sq);
    }
    report.gap = gap / static_cast<double>(T);

    // best context-only fit the class offers: zero the action window and
    // train an unsmoothed forest
    const StateLayout lay{expert.context_dim(), expert.action_dim(), p, q};
    std::vector<State> zeroed(T);
    for (int t = 1; t <= T; ++t) {
        State s = make_state(expert, t, p, q);
        std::fill(s.begin() + lay.action_offset(), s.end(), 0.0);
        zeroed[t - 1] = std::move(s);
    }
    const auto naive = train_forest(zeroed, expert.actions,
                                    LinearAutoregressor::identity(expert.action_dim()), 0.0,
                                    LeafMode::distance_only, cfg, lay, expert.action_bound);
    Series preds(T);
    for (int t = 0; t < T; ++t) preds[t] = naive.predict(zeroed[t]);
    report.naive_error = imitation_loss(preds, expert.actions);
    return report;
}

}  // namespace simile
