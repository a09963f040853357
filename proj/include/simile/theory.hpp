#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "simile/policy.hpp"
#include "simile/trajectory.hpp"

namespace simile {

/// Per-iteration estimates of the quantities appearing in the improvement
/// bounds. All of these are finite-sample estimates measured on realized
/// roll-out states, not population constants.
struct TheoryEstimates {
    double gamma = 0.0;      // Lipschitz constant in the action window
    double epsilon = 0.0;    // max_t ||pihat(s_t) - pi(s_t)||
    double lipschitz = 0.0;  // loss Lipschitz estimate, 2 * max_t ||a_t - a*_t||
    double reduction = 0.0;  // Delta = loss_pi(pi) - loss_pi(pihat)
    double delta = 0.0;      // gamma * epsilon * L / (1 - gamma)
    double theorem2_bound = 0.0;
    double corollary2_beta = 0.0;
    double corollary2_bound = 0.0;
    bool contraction_ok = false;  // gamma < 1
};

struct Lemma1Report {
    int pairs = 0;
    int violations = 0;          // pairs with lhs - rhs > tolerance
    double max_violation = 0.0;  // max over pairs of lhs - rhs
    bool precondition_ok = true; // fn stayed non-negative on the sample
    bool degenerate = false;     // H <= 0
};

/// Checks (fn(a) - fn(a'))^2 <= 6 H (fn(a) + fn(a')) * (a - a')^2 on the
/// given sample pairs.
Lemma1Report check_lemma1(const std::function<double(double)>& fn, double H,
                          const std::vector<std::pair<double, double>>& pairs,
                          double tolerance = 1e-9);

/// beta * epsilon * L * T + beta * reduction_term. Requires beta in (0,1).
double theorem1_bound(double beta, double epsilon, double L, int T, double reduction_term);

/// beta*gamma*epsilon*L / ((1-beta)*(1-gamma)) + beta * reduction_term.
/// Requires beta in (0,1); gamma >= 1 throws std::domain_error
/// ("contraction violated").
double theorem2_bound(double beta, double gamma, double epsilon, double L, double reduction_term);

struct Corollary2Result {
    double beta = 0.0;
    double bound = 0.0;
    bool guaranteed = false;  // true iff Delta > delta > guaranteed improvement
    std::string note;
};

/// beta = (Delta - delta) / (2 Delta), bound = -(Delta - delta)^2 / (2 (Delta + delta)).
/// Delta <= 0 or delta >= Delta yield beta_min with bound 0, flagged in note.
Corollary2Result corollary2_beta(double Delta, double delta, double beta_min = 0.01);

/// Max over sampled states and random action-window perturbations of
/// ||pi([x, a+u]) - pi([x, a])|| / ||u||, with ||u|| = perturbation.
double estimate_gamma(const EnsemblePolicy& policy, const std::vector<State>& states,
                      double perturbation, int draws_per_state, std::uint64_t seed);

/// Smoothness diagnostics for one rolled-out trajectory against the expert.
struct SmoothnessReport {
    double mean_first_order_diff = 0.0;  // smoothness of the roll-out
    double expert_reference = 0.0;       // same metric on the expert actions
    double naive_error = 0.0;            // MSE of a context-only regressor
    double gap = 0.0;                    // (1/T) sum ||a*_t - a_{t-1}||
};

/// naive_error trains a lambda = 0 forest on states whose action window is
/// zeroed, i.e. the best f([x, 0]) the class offers.
SmoothnessReport smoothness_report(const Series& rolled, const Trajectory& expert,
                                   int p, int q, const ForestConfig& cfg);

}  // namespace simile
