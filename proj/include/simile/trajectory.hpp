#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace simile {

using Vec = std::vector<double>;
/// A time-indexed sequence of vectors (row t = step t, 0-based storage).
using Series = std::vector<Vec>;

/// Flattened state vector. Layout, newest first:
///   [ x_t .. x_{t-p} | a_{t-1} .. a_{t-q} ]
/// with each x block of size context_dim and each a block of size action_dim.
using State = std::vector<double>;

struct StateLayout {
    int context_dim = 1;  // m
    int action_dim = 1;   // k
    int p = 2;            // context window reaches back to x_{t-p}
    int q = 2;            // action window reaches back to a_{t-q}

    int state_dim() const { return (p + 1) * context_dim + q * action_dim; }
    int action_offset() const { return (p + 1) * context_dim; }
    bool operator==(const StateLayout&) const = default;
};

/// Paired context/action sequences. Actions are bounded per coordinate:
/// 0 <= a <= action_bound.
struct Trajectory {
    Series contexts;  // T x m
    Series actions;   // T x k
    double action_bound = 1.0;

    int horizon() const { return static_cast<int>(contexts.size()); }
    int context_dim() const { return contexts.empty() ? 0 : static_cast<int>(contexts.front().size()); }
    int action_dim() const { return actions.empty() ? 0 : static_cast<int>(actions.front().size()); }

    /// Throws std::invalid_argument on any invariant violation
    /// (T >= 2, equal lengths, consistent dims, actions within bounds).
    void validate() const;
};

/// Synthetic stand-in for human demonstrations: noisy bounded random walks
/// as contexts, a forward-backward exponentially smoothed version of the
/// clean walk as the expert action sequence.
struct SynthConfig {
    int horizon = 200;
    int context_dim = 1;
    double noise_std = 0.05;           // observation noise on contexts
    double smoothing_halflife = 10.0;  // steps; 0 disables smoothing
    double action_bound = 1.0;
    std::uint64_t seed = 0;
};

enum class TrajFormat { csv, jsonl };

/// State whose context window ends at x_t and action window ends at a_{t-1}
/// (t is 1-based). History indices below 1 repeat the earliest available
/// element: x_1 for contexts, the trajectory's first action for actions.
/// Throws std::out_of_range for t outside [1, T].
State make_state(const Trajectory& traj, int t, int p, int q);

/// Window assembly shared by roll-outs: actions come from `past_actions`
/// (the actions produced so far, step 1..t-1) and indices at or below 0 use
/// `initial_action`.
State assemble_state(const StateLayout& layout, const Series& contexts, int t,
                     const Series& past_actions, const Vec& initial_action);

Trajectory synth_expert(const SynthConfig& cfg);

/// Reads CSV (header `x_1..x_m,a_1..a_k`, or headerless with the dims given
/// explicitly) or JSON-lines ({"x": [...], "a": [...]} per line). Malformed
/// rows, inconsistent dimensions and out-of-bound actions throw
/// std::runtime_error naming the offending line.
Trajectory load_trajectory(const std::string& path, TrajFormat format,
                           int context_dim = -1, int action_dim = -1,
                           double action_bound = 1.0);

void save_trajectory(const Trajectory& traj, const std::string& path, TrajFormat format);

}  // namespace simile
