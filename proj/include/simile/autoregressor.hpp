#pragma once

#include "simile/trajectory.hpp"

namespace simile {

/// Linear autoregressor h(a_{t-1:t-tau}) = sum_i c_i * a_{t-i}, one
/// coefficient row per action dimension.
struct LinearAutoregressor {
    std::vector<Vec> coeffs;  // k rows x tau columns
    int tau = 1;
    double ridge = 0.0;  // regularization weight used at fit time

    int action_dim() const { return static_cast<int>(coeffs.size()); }

    /// Identity regularizer h(a) = a: tau = 1, c = [1] per dimension.
    static LinearAutoregressor identity(int action_dim);
};

/// Ridge-regularized least squares fit, solved by normal equations
/// independently per action dimension over rows t = tau+1 .. T.
/// Requires actions.size() > tau and ridge >= 0. With ridge = 0 a singular
/// system throws std::runtime_error advising ridge > 0.
LinearAutoregressor fit_autoregressor(const Series& actions, int tau, double ridge);

/// recent holds the last tau actions, newest first: recent[0] = a_{t-1}.
Vec predict_ar(const LinearAutoregressor& h, const Series& recent);

/// Evaluates h on a flattened state's action window (requires tau <= layout.q).
Vec predict_ar_state(const LinearAutoregressor& h, const State& s, const StateLayout& layout);

}  // namespace simile
