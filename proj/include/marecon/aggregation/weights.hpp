#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "marecon/errors.hpp"

namespace marecon::aggregation {

/// Floor applied to a loss before taking its reciprocal.
inline constexpr double kLossFloor = 1e-12;

/// Per-candidate weights on the probability simplex. Plain numbers: they
/// never carry gradient.
struct MomentWeights {
  std::vector<double> omega;

  double sum() const {
    double s = 0.0;
    for (double w : omega) s += w;
    return s;
  }
};

/**
 * Moment-aggregation weight function
 *
 *   omega_i = exp(1/F_i) / sum_j exp(1/F_j)
 *
 * evaluated as a max-shifted softmax over logits 1 / max(F_i / temperature,
 * kLossFloor). temperature = 1 is the plain form; larger values sharpen the
 * weights for losses of large magnitude.
 */
inline MomentWeights ma_weights(std::span<const double> losses, double temperature = 1.0) {
  if (losses.empty()) throw ContractError("ma_weights needs at least one candidate loss");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ContractError("ma_weights temperature must be positive");
  std::vector<double> logits(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double f = losses[i];
    if (std::isnan(f) || f < 0.0) {
      throw ContractError("ma_weights: loss " + std::to_string(i) + " is negative or NaN (" + std::to_string(f) + ")");
    }
    logits[i] = 1.0 / std::max(f / temperature, kLossFloor);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  MomentWeights w;
  w.omega.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w.omega[i] = std::exp(logits[i] - top);
    total += w.omega[i];
  }
  for (double& v : w.omega) v /= total;
  return w;
}

inline MomentWeights uniform_weights(std::size_t n) {
  if (n == 0) throw ContractError("uniform_weights needs n >= 1");
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

inline MomentWeights one_hot_weights(std::size_t n, std::size_t index) {
  if (index >= n) throw ContractError("one-hot index out of range");
  MomentWeights w{std::vector<double>(n, 0.0)};
  w.omega[index] = 1.0;
  return w;
}

/// Lowest index attaining the minimum.
inline std::size_t argmin_lowest(std::span<const double> values) {
  if (values.empty()) throw ContractError("argmin of empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  return best;
}

}  // namespace marecon::aggregation
