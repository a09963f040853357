#include "simile/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "simile/rng.hpp"

namespace simile {

EnsemblePolicy::EnsemblePolicy(std::shared_ptr<const SmoothForest> forest) {
    members_.push_back(PolicyMember{std::move(forest), 1.0});
    validate();
}

EnsemblePolicy EnsemblePolicy::from_members(std::vector<PolicyMember> members) {
    EnsemblePolicy p;
    p.members_ = std::move(members);
    p.validate();
    return p;
}

const StateLayout& EnsemblePolicy::layout() const {
    if (members_.empty()) throw std::logic_error("policy: no members");
    return members_.front().forest->layout;
}

double EnsemblePolicy::action_bound() const {
    if (members_.empty()) throw std::logic_error("policy: no members");
    return members_.front().forest->action_bound;
}

void EnsemblePolicy::validate() const {
    if (members_.empty()) throw std::invalid_argument("policy: no members");
    double sum = 0.0;
    for (const auto& m : members_) {
        if (!m.forest) throw std::invalid_argument("policy: null member");
        if (!(m.weight >= 0.0)) throw std::invalid_argument("policy: negative weight");
        if (!(m.forest->layout == members_.front().forest->layout))
            throw std::invalid_argument("policy: members disagree on state layout");
        if (m.forest->action_bound != members_.front().forest->action_bound)
            throw std::invalid_argument("policy: members disagree on action bound");
        sum += m.weight;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("policy: weights must sum to 1");
}

Vec EnsemblePolicy::predict(const State& s) const {
    if (members_.empty()) throw std::logic_error("policy: no members");
    const int k = layout().action_dim;
    Vec out(k, 0.0);
    for (const auto& m : members_) {
        const Vec p = m.forest->predict(s);
        for (int d = 0; d < k; ++d) out[d] += m.weight * p[d];
    }
    return out;
}

EnsemblePolicy interpolate(const EnsemblePolicy& prev,
                           std::shared_ptr<const SmoothForest> new_forest, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("interpolate: beta must be in [0, 1]");
    prev.validate();
    constexpr double kPrune = 1e-12;

    std::vector<PolicyMember> next;
    next.reserve(prev.members().size() + 1);
    bool pruned = false;
    for (const auto& m : prev.members()) {
        const double w = (1.0 - beta) * m.weight;
        if (w < kPrune) { pruned = true; continue; }
        next.push_back(PolicyMember{m.forest, w});
    }
    if (beta < kPrune) {
        pruned = true;
    } else {
        next.push_back(PolicyMember{std::move(new_forest), beta});
    }
    if (next.empty()) throw std::logic_error("interpolate: all members pruned");
    if (pruned) {
        double sum = 0.0;
        for (const auto& m : next) sum += m.weight;
        for (auto& m : next) m.weight /= sum;
    }
    return EnsemblePolicy::from_members(std::move(next));
}

namespace {

RolloutResult rollout_impl(const EnsemblePolicy& policy, const Series& contexts, const Vec& a0,
                           const std::uint64_t* seed) {
    policy.validate();
    const StateLayout& lay = policy.layout();
    if (contexts.empty()) throw std::invalid_argument("rollout: empty context sequence");
    for (const auto& x : contexts)
        if (static_cast<int>(x.size()) != lay.context_dim)
            throw std::invalid_argument("rollout: context dimension mismatch");
    if (static_cast<int>(a0.size()) != lay.action_dim)
        throw std::invalid_argument("rollout: initial action dimension mismatch");

    Rng rng(seed ? mix64(*seed) : 0);
    const int T = static_cast<int>(contexts.size());
    RolloutResult out;
    out.actions.reserve(T);
    out.states.reserve(T);
    for (int t = 1; t <= T; ++t) {
        State s = assemble_state(lay, contexts, t, out.actions, a0);
        Vec a;
        if (seed) {
            // sample one member by weight, use its prediction alone
            const double u = rng.uniform01();
            double cum = 0.0;
            const auto& members = policy.members();
            const SmoothForest* chosen = members.back().forest.get();
            for (const auto& m : members) {
                cum += m.weight;
                if (u < cum) { chosen = m.forest.get(); break; }
            }
            a = chosen->predict(s);
        } else {
            a = policy.predict(s);
        }
        out.actions.push_back(std::move(a));
        out.states.push_back(std::move(s));
    }
    return out;
}

}  // namespace

RolloutResult rollout_det(const EnsemblePolicy& policy, const Series& contexts, const Vec& a0) {
    return rollout_impl(policy, contexts, a0, nullptr);
}

RolloutResult rollout_sto(const EnsemblePolicy& policy, const Series& contexts, const Vec& a0,
                          std::uint64_t seed) {
    return rollout_impl(policy, contexts, a0, &seed);
}

}  // namespace simile
