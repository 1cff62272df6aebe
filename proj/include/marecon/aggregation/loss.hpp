#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "marecon/aggregation/weights.hpp"
#include "marecon/diffcore/ops.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"
#include "marecon/forward/candidates.hpp"

namespace marecon::aggregation {

/// F_i = 0.5 * ||y - A(x; theta_i)||^2 as tape nodes, plus their values.
struct CandidateLosses {
  std::vector<ad::Var> values;
  std::vector<double> detached;

  std::size_t size() const noexcept { return values.size(); }
};

/// F_i alone, for strategies that train on a single candidate.
inline ad::Var candidate_loss(ad::Var signal, const Tensor& measurement, const forward::CandidateSet& candidates,
                              std::size_t i) {
  ad::Var predicted = candidates.measure(signal, i);
  if (predicted.shape() != measurement.shape()) {
    throw ShapeError("candidate " + std::to_string(i) + " predicts " + shape_string(predicted.shape()) +
                     " but the measurement is " + shape_string(measurement.shape()));
  }
  return ad::sum_of_squares(ad::sub(signal.tape().constant(measurement), predicted));
}

inline CandidateLosses candidate_losses(ad::Var signal, const Tensor& measurement,
                                        const forward::CandidateSet& candidates) {
  CandidateLosses out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ad::Var f = candidate_loss(signal, measurement, candidates, i);
    out.detached.push_back(f.value().item());
    out.values.push_back(f);
  }
  return out;
}

/**
 * L = sum_i omega_i F_i. Each omega_i enters the tape as a detached
 * constant, so backward yields exactly sum_i omega_i grad F_i.
 */
inline ad::Var aggregate_loss(const MomentWeights& weights, const CandidateLosses& losses) {
  if (weights.omega.size() != losses.size() || losses.size() == 0) {
    throw ContractError("aggregate_loss: " + std::to_string(weights.omega.size()) + " weights for " +
                        std::to_string(losses.size()) + " losses");
  }
  ad::Tape& tape = losses.values.front().tape();
  ad::Var total;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    ad::Var w = ad::detach(tape.constant(Tensor(losses.values[i].shape(), weights.omega[i])));
    ad::Var term = ad::mul(w, losses.values[i]);
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

enum class StrategyKind { MomentAggregation, UniformAggregation, Alternating, Oracle, RandomFixed };

struct Strategy {
  StrategyKind kind = StrategyKind::MomentAggregation;
  std::size_t fixed_index = 0;  // RandomFixed only
  double temperature = 1.0;     // MomentAggregation only

  static Strategy moment_aggregation(double temperature = 1.0) {
    return {StrategyKind::MomentAggregation, 0, temperature};
  }
  static Strategy uniform() { return {StrategyKind::UniformAggregation}; }
  static Strategy alternating() { return {StrategyKind::Alternating}; }
  static Strategy oracle() { return {StrategyKind::Oracle}; }
  static Strategy random_fixed(std::size_t index) { return {StrategyKind::RandomFixed, index}; }

  std::string name() const {
    switch (kind) {
      case StrategyKind::MomentAggregation: return "ma";
      case StrategyKind::UniformAggregation: return "uniform";
      case StrategyKind::Alternating: return "alternating";
      case StrategyKind::Oracle: return "oracle";
      case StrategyKind::RandomFixed: return "random" + std::to_string(fixed_index);
    }
    return "unknown";
  }
};

/// Parse "ma", "uniform", "alternating", "oracle" or "random" (index 0).
inline StrategyKind parse_strategy_kind(std::string_view text) {
  if (text == "ma") return StrategyKind::MomentAggregation;
  if (text == "uniform") return StrategyKind::UniformAggregation;
  if (text == "alternating") return StrategyKind::Alternating;
  if (text == "oracle") return StrategyKind::Oracle;
  if (text == "random") return StrategyKind::RandomFixed;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

inline std::string_view strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::MomentAggregation: return "ma";
    case StrategyKind::UniformAggregation: return "uniform";
    case StrategyKind::Alternating: return "alternating";
    case StrategyKind::Oracle: return "oracle";
    case StrategyKind::RandomFixed: return "random";
  }
  return "unknown";
}

struct StrategyLoss {
  ad::Var loss;
  MomentWeights weights;  // effective weights, on the simplex
  std::size_t selected;   // candidate with the largest weight
};

inline StrategyLoss strategy_loss(const Strategy& strategy, const CandidateLosses& losses,
                                  const forward::CandidateSet& candidates) {
  const std::size_t n = losses.size();
  if (n != candidates.size()) throw ContractError("strategy_loss: losses do not match the candidate set");
  auto pick = [&](std::size_t index) {
    return StrategyLoss{losses.values[index], one_hot_weights(n, index), index};
  };
  switch (strategy.kind) {
    case StrategyKind::MomentAggregation: {
      MomentWeights w = ma_weights(losses.detached, strategy.temperature);
      ad::Var loss = aggregate_loss(w, losses);
      const std::size_t top = static_cast<std::size_t>(
          std::max_element(w.omega.begin(), w.omega.end()) - w.omega.begin());
      return {loss, std::move(w), top};
    }
    case StrategyKind::UniformAggregation: {
      MomentWeights w = uniform_weights(n);
      return {aggregate_loss(w, losses), std::move(w), 0};
    }
    case StrategyKind::Alternating:
      return pick(argmin_lowest(losses.detached));
    case StrategyKind::Oracle:
      return pick(candidates.oracle_index());
    case StrategyKind::RandomFixed:
      if (strategy.fixed_index >= n) throw ConfigError("random-fixed index out of range");
      return pick(strategy.fixed_index);
  }
  throw ContractError("unhandled strategy");
}

}  // namespace marecon::aggregation
