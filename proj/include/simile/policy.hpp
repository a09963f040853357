#pragma once

#include <memory>
#include <vector>

#include "simile/forest.hpp"

namespace simile {

struct PolicyMember {
    std::shared_ptr<const SmoothForest> forest;
    double weight = 0.0;
};

/// Convex combination of trained forests. The deterministic prediction is
/// sum_i w_i * member_i.predict(s). Immutable once built.
class EnsemblePolicy {
public:
    EnsemblePolicy() = default;
    explicit EnsemblePolicy(std::shared_ptr<const SmoothForest> forest);
    static EnsemblePolicy from_members(std::vector<PolicyMember> members);

    const std::vector<PolicyMember>& members() const { return members_; }
    int size() const { return static_cast<int>(members_.size()); }
    const StateLayout& layout() const;
    double action_bound() const;

    Vec predict(const State& s) const;

    /// Simplex invariant: weights non-negative and summing to 1 (+-1e-12),
    /// all members sharing one state layout and action bound.
    void validate() const;

private:
    std::vector<PolicyMember> members_;
};

/// Appends new_forest at weight beta and scales previous weights by
/// (1 - beta). Members whose weight drops below 1e-12 are pruned and the
/// remainder renormalized. beta outside [0,1] throws std::invalid_argument.
EnsemblePolicy interpolate(const EnsemblePolicy& prev,
                           std::shared_ptr<const SmoothForest> new_forest, double beta);

struct RolloutResult {
    Series actions;             // T x k
    std::vector<State> states;  // the state each prediction saw
};

/// Sequential roll-out: s_t is built from the contexts and the policy's own
/// past predictions (indices before step 1 use a0), a_t = policy(s_t).
RolloutResult rollout_det(const EnsemblePolicy& policy, const Series& contexts, const Vec& a0);

/// Same state recursion, but each step samples a single member by weight and
/// uses its prediction alone.
RolloutResult rollout_sto(const EnsemblePolicy& policy, const Series& contexts, const Vec& a0,
                          std::uint64_t seed);

}  // namespace simile
