#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "simile/simile.hpp"

namespace simile {

/// Applies a beta-grid token to a config: "adaptive", "corollary2", or a
/// fixed value such as "0.1". Throws std::invalid_argument on junk.
TrainingConfig apply_beta_token(TrainingConfig cfg, const std::string& token);

struct BetaCompareCell {
    std::string mode;
    std::vector<IterationRecord> records;
};

/// One full training run per grid cell, identical data and seed throughout.
std::vector<BetaCompareCell> compare_beta(const Trajectory& data, const TrainingConfig& base,
                                          const std::vector<std::string>& grid);

struct InterpRow {
    int iteration = 0;
    double deterministic_error = 0.0;
    double mean_stochastic_error = 0.0;
    double stderr_value = 0.0;  // 0 when n_samples < 2 (flagged by the caller)
};

/// Deterministic versus stochastic interpolation at a fixed beta. A single
/// training run supplies the per-iteration dataset; both arms evaluate the
/// same interpolated ensemble, the stochastic one averaged over n_samples
/// seeded roll-outs.
std::vector<InterpRow> compare_interp(const Trajectory& data, TrainingConfig base, double beta,
                                      int n_samples);

struct SigmaSweepRow {
    double sigma = 0.0;
    double imitation = 0.0;   // roll-out MSE of the retrained policy vs expert
    double smoothness = 0.0;  // first-order difference of its roll-out
};

/// First-iteration feedback sweep: one shared starting policy and roll-out,
/// then one retrained policy per sigma on the identical states. With
/// poor_start the starting policy is a constant at the expert's mean action
/// (the early-iteration regime where the feedback trade-off is visible);
/// otherwise it is the usual supervised round.
std::vector<SigmaSweepRow> sigma_tradeoff(const Trajectory& data, const TrainingConfig& base,
                                          const std::vector<double>& sigmas,
                                          bool poor_start = false);

struct Prop1Result {
    double gap = 0.0;  // (1/T) sum ||a*_t - a_{t-1}|| of the poor roll-out
    double expert_smoothness = 0.0;
    double sigma_lo = 0.0, sigma_hi = 0.0;
    double smoothness_lo = 0.0;  // roll-out smoothness after sigma_lo feedback
    double smoothness_hi = 0.0;  // roll-out smoothness after sigma_hi feedback
};

/// Starts from a deliberately poor constant policy and retrains once with raw
/// expert feedback versus smoothed feedback, same forest seed.
Prop1Result prop1_experiment(const Trajectory& data, const TrainingConfig& base,
                             double sigma_lo = 0.0, double sigma_hi = 0.75);

struct TheoryCheck {
    std::string name;
    bool pass = true;
    bool asserted = true;  // reported-only checks never fail the suite
    nlohmann::json detail;
};

struct TheoryReport {
    std::vector<TheoryCheck> checks;
    bool all_pass = true;  // over asserted checks
};

/// Runs every executable check of the improvement bounds, interpolation
/// lemmas and feedback conditions on the given data.
TheoryReport run_theory_suite(const Trajectory& data, const TrainingConfig& base);

/// Single-leaf forest: prediction (leaf + lambda * h(a)) / (1 + lambda),
/// clamped. With a one-lag identity regressor this is the affine policy
/// family used by the interpolation checks.
std::shared_ptr<SmoothForest> make_single_leaf_forest(const Vec& leaf, double lambda,
                                                      const LinearAutoregressor& reg,
                                                      const StateLayout& layout,
                                                      double action_bound);

}  // namespace simile
