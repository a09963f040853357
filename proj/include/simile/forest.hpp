#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "simile/autoregressor.hpp"
#include "simile/trajectory.hpp"

namespace simile {

/// Which terminal-value rule a tree uses. distance_only sets the leaf to
/// mean{(1+lambda)*target - lambda*h(s)} so that the smoothed prediction
/// minimizes squared distance to the targets alone; joint minimizes the
/// combined distance+smoothness objective, whose minimizer is the plain
/// target mean.
enum class LeafMode { distance_only, joint };

struct ForestConfig {
    int n_trees = 20;
    int max_depth = 6;  // 0 trains a single leaf
    int min_samples_leaf = 2;
    double feature_subsample_fraction = 1.0;  // per-node candidate fraction
    bool bootstrap = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left, right;
    Vec leaf;  // per-dimension terminal value, leaves only

    bool is_leaf() const { return feature < 0; }
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double reduction = 0.0;
};

/// Per-dimension terminal value for a node holding (target, h) pairs.
/// Empty nodes throw std::logic_error.
Vec leaf_value(const Series& targets, const Series& h_values, double lambda, LeafMode mode);

/// (leaf + lambda * h) / (1 + lambda), per dimension.
Vec smoothed_predict(const Vec& leaf, double lambda, const Vec& h_value);

/// sum over the node of (abar - target)^2 + lambda * (abar - h)^2, summed
/// over action dimensions, with abar = leaf_value(mode).
double node_impurity(const Series& targets, const Series& h_values, double lambda, LeafMode mode);

/// Scans midpoints between consecutive sorted unique values of every
/// candidate feature and returns the split with the largest impurity
/// reduction, honoring min_samples_leaf on both sides. Ties break toward the
/// lowest feature index, then the lowest threshold. Returns nullopt when no
/// split gives a strictly positive reduction. `node_indices` selects the
/// node's rows; iteration order follows it everywhere, so results are
/// reproducible sum-for-sum.
std::optional<SplitChoice> best_split(const std::vector<State>& states,
                                      const Series& targets,
                                      const Series& h_values,
                                      const std::vector<int>& node_indices,
                                      double lambda, LeafMode mode,
                                      const std::vector<int>& candidate_features,
                                      int min_samples_leaf);

/// A trained policy pi = (f, h): a regression-tree ensemble f whose leaf
/// predictions are blended with the autoregressor h at weight lambda.
struct SmoothForest {
    std::vector<std::unique_ptr<TreeNode>> trees;
    double lambda = 0.0;
    LinearAutoregressor reg;
    LeafMode leaf_mode = LeafMode::distance_only;
    ForestConfig cfg;
    StateLayout layout;
    double action_bound = 1.0;

    /// Mean over trees of the smoothed per-tree prediction, clamped to
    /// [0, action_bound]. Throws std::invalid_argument on dimension mismatch.
    Vec predict(const State& s) const;
};

/// Trains cfg.n_trees CART-style trees on (states, targets). h(s) per sample
/// is computed once from the state's recorded action window. Per-tree seeds
/// derive deterministically from cfg.seed (mix64(cfg.seed + 1 + tree_index)),
/// so parallel and sequential training produce identical forests.
SmoothForest train_forest(const std::vector<State>& states, const Series& targets,
                          const LinearAutoregressor& reg, double lambda, LeafMode mode,
                          const ForestConfig& cfg, const StateLayout& layout,
                          double action_bound);

}  // namespace simile
