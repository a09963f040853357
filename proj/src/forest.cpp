#include "simile/forest.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "simile/rng.hpp"

namespace simile {

void ForestConfig::validate() const {
    if (n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
    if (max_depth < 0) throw std::invalid_argument("forest: max_depth must be >= 0");
    if (min_samples_leaf < 1) throw std::invalid_argument("forest: min_samples_leaf must be >= 1");
    if (!(feature_subsample_fraction > 0.0) || feature_subsample_fraction > 1.0)
        throw std::invalid_argument("forest: feature_subsample_fraction must be in (0, 1]");
}

namespace {

// Indexed leaf value; iterates node_indices in order, dims independently.
Vec leaf_value_idx(const Series& targets, const Series& h_values,
                   const std::vector<int>& idx, double lambda, LeafMode mode) {
    const int k = static_cast<int>(targets[idx.front()].size());
    const double n = static_cast<double>(idx.size());
    Vec out(k, 0.0);
    for (int d = 0; d < k; ++d) {
        double s = 0.0;
        if (mode == LeafMode::distance_only) {
            for (int i : idx) s += (1.0 + lambda) * targets[i][d] - lambda * h_values[i][d];
        } else {
            for (int i : idx) s += targets[i][d];
        }
        out[d] = s / n;
    }
    return out;
}

double impurity_idx(const Series& targets, const Series& h_values,
                    const std::vector<int>& idx, double lambda, LeafMode mode) {
    const Vec abar = leaf_value_idx(targets, h_values, idx, lambda, mode);
    const int k = static_cast<int>(abar.size());
    double acc = 0.0;
    for (int i : idx) {
        for (int d = 0; d < k; ++d) {
            const double e = abar[d] - targets[i][d];
            acc += e * e;
            const double r = abar[d] - h_values[i][d];
            acc += lambda * (r * r);
        }
    }
    return acc;
}

std::optional<SplitChoice> best_split_idx(const std::vector<State>& states,
                                          const Series& targets, const Series& h_values,
                                          const std::vector<int>& idx, double lambda,
                                          LeafMode mode,
                                          const std::vector<int>& candidate_features,
                                          int min_samples_leaf) {
    const int n = static_cast<int>(idx.size());
    if (n < 2 * min_samples_leaf) return std::nullopt;
    const double total = impurity_idx(targets, h_values, idx, lambda, mode);

    SplitChoice best;
    bool found = false;
    std::vector<int> left, right;
    left.reserve(idx.size());
    right.reserve(idx.size());

    for (int f : candidate_features) {
        Vec vals;
        vals.reserve(idx.size());
        for (int i : idx) vals.push_back(states[i][f]);
        Vec uniq = vals;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (size_t j = 0; j + 1 < uniq.size(); ++j) {
            double thr = (uniq[j] + uniq[j + 1]) / 2.0;
            if (!(thr < uniq[j + 1])) thr = uniq[j];  // midpoint collapsed upward
            left.clear();
            right.clear();
            for (int i : idx) (states[i][f] <= thr ? left : right).push_back(i);
            if (static_cast<int>(left.size()) < min_samples_leaf ||
                static_cast<int>(right.size()) < min_samples_leaf)
                continue;
            const double il = impurity_idx(targets, h_values, left, lambda, mode);
            const double ir = impurity_idx(targets, h_values, right, lambda, mode);
            const double reduction = total -
                                     (static_cast<double>(left.size()) / n) * il -
                                     (static_cast<double>(right.size()) / n) * ir;
            // strict > keeps the first maximum: lowest feature, lowest threshold
            if (!found || reduction > best.reduction) {
                best = SplitChoice{f, thr, reduction};
                found = true;
            }
        }
    }
    if (!found || !(best.reduction > 0.0)) return std::nullopt;
    return best;
}

std::vector<int> whole_node(size_t n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

void check_node_inputs(const Series& targets, const Series& h_values, double lambda) {
    if (targets.empty()) throw std::logic_error("forest: empty node");
    if (targets.size() != h_values.size())
        throw std::invalid_argument("forest: targets and h values differ in length");
    if (lambda < 0.0) throw std::invalid_argument("forest: lambda must be >= 0");
}

}  // namespace

Vec leaf_value(const Series& targets, const Series& h_values, double lambda, LeafMode mode) {
    check_node_inputs(targets, h_values, lambda);
    return leaf_value_idx(targets, h_values, whole_node(targets.size()), lambda, mode);
}

Vec smoothed_predict(const Vec& leaf, double lambda, const Vec& h_value) {
    if (lambda < 0.0) throw std::invalid_argument("smoothed_predict: lambda must be >= 0");
    if (leaf.size() != h_value.size())
        throw std::invalid_argument("smoothed_predict: dimension mismatch");
    Vec out(leaf.size());
    for (size_t d = 0; d < leaf.size(); ++d)
        out[d] = (leaf[d] + lambda * h_value[d]) / (1.0 + lambda);
    return out;
}

double node_impurity(const Series& targets, const Series& h_values, double lambda,
                     LeafMode mode) {
    check_node_inputs(targets, h_values, lambda);
    return impurity_idx(targets, h_values, whole_node(targets.size()), lambda, mode);
}

std::optional<SplitChoice> best_split(const std::vector<State>& states, const Series& targets,
                                      const Series& h_values,
                                      const std::vector<int>& node_indices, double lambda,
                                      LeafMode mode, const std::vector<int>& candidate_features,
                                      int min_samples_leaf) {
    if (node_indices.empty()) throw std::logic_error("best_split: empty node");
    if (min_samples_leaf < 1)
        throw std::invalid_argument("best_split: min_samples_leaf must be >= 1");
    return best_split_idx(states, targets, h_values, node_indices, lambda, mode,
                          candidate_features, min_samples_leaf);
}

// ---------------------------------------------------------------------------
// training

namespace {

struct TreeBuilder {
    const std::vector<State>& states;
    const Series& targets;
    const Series& h_values;
    double lambda;
    LeafMode mode;
    const ForestConfig& cfg;
    int n_features;
    Rng rng;

    std::vector<int> sample_features() {
        const int want = std::clamp(
            static_cast<int>(std::ceil(cfg.feature_subsample_fraction * n_features)), 1,
            n_features);
        std::vector<int> pool(n_features);
        std::iota(pool.begin(), pool.end(), 0);
        if (want == n_features) return pool;  // no draw consumed
        for (int i = 0; i < want; ++i) {
            const int j = i + static_cast<int>(rng.below(n_features - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(want);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    std::unique_ptr<TreeNode> make_leaf(const std::vector<int>& idx) {
        auto node = std::make_unique<TreeNode>();
        node->leaf = leaf_value_idx(targets, h_values, idx, lambda, mode);
        return node;
    }

    std::unique_ptr<TreeNode> build(const std::vector<int>& idx, int depth) {
        if (depth >= cfg.max_depth || static_cast<int>(idx.size()) < 2 * cfg.min_samples_leaf)
            return make_leaf(idx);
        const auto feats = sample_features();
        const auto split = best_split_idx(states, targets, h_values, idx, lambda, mode, feats,
                                          cfg.min_samples_leaf);
        if (!split) return make_leaf(idx);
        std::vector<int> left, right;
        left.reserve(idx.size());
        right.reserve(idx.size());
        for (int i : idx) (states[i][split->feature] <= split->threshold ? left : right).push_back(i);
        auto node = std::make_unique<TreeNode>();
        node->feature = split->feature;
        node->threshold = split->threshold;
        node->left = build(left, depth + 1);
        node->right = build(right, depth + 1);
        return node;
    }

    std::unique_ptr<TreeNode> run() {
        const int n = static_cast<int>(states.size());
        std::vector<int> idx;
        if (cfg.bootstrap) {
            idx.reserve(n);
            for (int i = 0; i < n; ++i) idx.push_back(static_cast<int>(rng.below(n)));
        } else {
            idx = whole_node(n);
        }
        return build(idx, 0);
    }
};

const TreeNode* descend(const TreeNode* node, const State& s) {
    while (!node->is_leaf()) node = s[node->feature] <= node->threshold ? node->left.get()
                                                                        : node->right.get();
    return node;
}

}  // namespace

Vec SmoothForest::predict(const State& s) const {
    if (static_cast<int>(s.size()) != layout.state_dim())
        throw std::invalid_argument("forest predict: state dimension mismatch");
    const Vec h = predict_ar_state(reg, s, layout);
    const int k = layout.action_dim;
    Vec acc(k, 0.0);
    for (const auto& tree : trees) {
        const TreeNode* leaf = descend(tree.get(), s);
        for (int d = 0; d < k; ++d)
            acc[d] += (leaf->leaf[d] + lambda * h[d]) / (1.0 + lambda);
    }
    const double n = static_cast<double>(trees.size());
    for (int d = 0; d < k; ++d) acc[d] = std::clamp(acc[d] / n, 0.0, action_bound);
    return acc;
}

SmoothForest train_forest(const std::vector<State>& states, const Series& targets,
                          const LinearAutoregressor& reg, double lambda, LeafMode mode,
                          const ForestConfig& cfg, const StateLayout& layout,
                          double action_bound) {
    cfg.validate();
    if (lambda < 0.0) throw std::invalid_argument("train_forest: lambda must be >= 0");
    if (states.empty() || states.size() != targets.size())
        throw std::invalid_argument("train_forest: states/targets size mismatch");
    if (static_cast<int>(states.size()) < cfg.min_samples_leaf)
        throw std::invalid_argument("train_forest: fewer samples than min_samples_leaf");
    const int dim = layout.state_dim();
    for (const auto& s : states)
        if (static_cast<int>(s.size()) != dim)
            throw std::invalid_argument("train_forest: state dimension mismatch");
    for (const auto& t : targets)
        if (static_cast<int>(t.size()) != layout.action_dim)
            throw std::invalid_argument("train_forest: target dimension mismatch");

    Series h_values(states.size());
    for (size_t i = 0; i < states.size(); ++i)
        h_values[i] = predict_ar_state(reg, states[i], layout);

    SmoothForest forest;
    forest.lambda = lambda;
    forest.reg = reg;
    forest.leaf_mode = mode;
    forest.cfg = cfg;
    forest.layout = layout;
    forest.action_bound = action_bound;
    forest.trees.resize(cfg.n_trees);

    auto train_one = [&](int t) {
        TreeBuilder builder{states,  targets, h_values, lambda, mode,
                            cfg,     dim,     Rng(mix64(cfg.seed + 1 + t))};
        return builder.run();
    };

    // trees are independent given their derived seeds, so parallel training
    // is bit-identical to sequential
    const unsigned hw = std::thread::hardware_concurrency();
    if (cfg.n_trees > 1 && hw > 1) {
        std::vector<std::future<std::unique_ptr<TreeNode>>> futures;
        futures.reserve(cfg.n_trees);
        for (int t = 0; t < cfg.n_trees; ++t)
            futures.push_back(std::async(std::launch::async, train_one, t));
        for (int t = 0; t < cfg.n_trees; ++t) forest.trees[t] = futures[t].get();
    } else {
        for (int t = 0; t < cfg.n_trees; ++t) forest.trees[t] = train_one(t);
    }
    return forest;
}

}  // namespace simile
