#pragma once

#include "simile/trajectory.hpp"

namespace simile {

/// Mean squared imitation error: (1/T) * sum_t ||a_t - b_t||^2.
double imitation_loss(const Series& a, const Series& b);

/// Mean Euclidean first-order difference: sum_{t=2..T} ||a_t - a_{t-1}|| / (T-1).
/// Requires T >= 2.
double smoothness(const Series& a);

/// (1/T) * sum_t <a_t - a*_t, ahat_t - a_t>. Negative values mean the
/// feedback points from the roll-out back toward the expert.
double feedback_descent(const Series& rolled, const Series& expert, const Series& feedback);

}  // namespace simile
