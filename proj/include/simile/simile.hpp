#pragma once

#include <functional>
#include <vector>

#include "simile/forest.hpp"
#include "simile/metrics.hpp"
#include "simile/policy.hpp"
#include "simile/theory.hpp"

namespace simile {

struct SigmaSchedule {
    enum class Kind { geometric, constant, zero };
    Kind kind = Kind::geometric;
    double sigma0 = 0.5;
    double decay = 0.5;

    static SigmaSchedule geometric(double sigma0, double decay) {
        return {Kind::geometric, sigma0, decay};
    }
    static SigmaSchedule constant(double sigma) { return {Kind::constant, sigma, 1.0}; }
    static SigmaSchedule zero() { return {Kind::zero, 0.0, 1.0}; }
};

enum class BetaMode { adaptive, fixed, corollary2 };

struct TrainingConfig {
    int n_iterations = 10;
    double lambda = 1.0;
    int tau = 2;
    double ridge = -1.0;  // < 0 selects the default 1e-3 * T at fit time
    int p = 2;
    int q = 2;
    BetaMode beta_mode = BetaMode::adaptive;
    double fixed_beta = 0.5;
    double beta_min = 0.01;
    double beta_max = 0.99;
    SigmaSchedule sigma;
    ForestConfig forest;
    LeafMode leaf_mode = LeafMode::distance_only;
    std::uint64_t seed = 7;
    // knobs for the per-iteration theory estimates
    double gamma_perturbation = 0.4;
    int gamma_draws = 8;
    int gamma_max_states = 64;

    void validate() const;
};

/// One row of the training log.
struct IterationRecord {
    int iteration = 0;
    double sigma = 0.0;
    double beta = 0.0;
    double error_new = 0.0;       // roll-out MSE of pihat_n vs the expert
    double error_old = 0.0;       // roll-out MSE of pi_{n-1} vs the expert
    double combined_error = 0.0;  // roll-out MSE of pi_n vs the expert
    double smoothness = 0.0;      // first-order difference of pi_n's roll-out
    double feedback_descent = 0.0;
    double measured_improvement = 0.0;  // combined_error - error_old (NaN at n = 0)
    TheoryEstimates theory;
};

/// Virtual feedback targets: ahat_t = sigma * a_t + (1 - sigma) * a*_t.
Series gen_feedback(const Series& rolled, const Series& expert, double sigma);

/// error_old / (error_new + error_old), clamped to [beta_min, beta_max].
/// Both errors zero returns beta_min (converged).
double adaptive_beta(double error_new, double error_old, double beta_min = 0.01,
                     double beta_max = 0.99);

/// geometric: sigma0 * decay^(n-1); constant: sigma0; zero: 0. n is 1-based.
double sigma_schedule_value(const SigmaSchedule& schedule, int n);

struct TrainResult {
    EnsemblePolicy policy;
    std::vector<IterationRecord> records;  // n = 0 .. N
};

/// Called after each iteration (including the supervised round n = 0) with
/// the policy as of that iteration.
using IterationObserver = std::function<void(int, const EnsemblePolicy&, const IterationRecord&)>;

/// The full training loop: supervised initialization on expert states, then
/// per iteration a roll-out of the current policy, virtual feedback,
/// autoregressor refit, forest training and deterministic interpolation at
/// an adaptive or fixed step size. NaN errors abort with a diagnostic.
TrainResult simile_train(const Trajectory& train, const TrainingConfig& cfg,
                         const IterationObserver& observer = nullptr);

}  // namespace simile
