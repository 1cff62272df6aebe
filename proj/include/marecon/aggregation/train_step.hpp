#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "marecon/aggregation/loss.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"
#include "marecon/forward/candidates.hpp"
#include "marecon/nn/adam.hpp"
#include "marecon/nn/generator.hpp"

namespace marecon::aggregation {

/// Snapshot of one training moment.
struct MomentRecord {
  long iteration = 0;
  std::vector<double> losses;   // F_1..F_nc
  std::vector<double> weights;  // omega_1..omega_nc
  double loss = 0.0;            // value of the strategy loss
  std::size_t selected = 0;
  std::optional<double> psnr;   // vs ground truth, when an evaluator is supplied
  double monitor_ms = 0.0;      // forward passes run only to fill `losses`
};

/// Quality of a generated image against the ground truth (e.g. PSNR).
using ImageEvaluator = std::function<double(const Tensor& image)>;

/// Maps generator output into the forward model's signal domain.
inline ad::Var generator_signal(ad::Var image, const forward::CandidateSet& candidates) {
  return candidates.kind() == forward::ForwardKind::Holography ? nn::object_field(image) : image;
}

/// The one candidate a strategy trains on, when it ignores the others.
inline std::optional<std::size_t> single_candidate(const Strategy& strategy, const forward::CandidateSet& candidates) {
  if (strategy.kind == StrategyKind::Oracle) return candidates.oracle_index();
  if (strategy.kind == StrategyKind::RandomFixed) {
    if (strategy.fixed_index >= candidates.size()) throw ConfigError("random-fixed index out of range");
    return strategy.fixed_index;
  }
  return std::nullopt;
}

/**
 * One iteration: generate, evaluate every candidate loss, form the
 * strategy loss with stop-gradient weights, backpropagate, Adam update.
 * The record describes the image generated at the start of the step.
 *
 * Oracle and RandomFixed train on their own candidate only. The remaining
 * losses are still recorded, computed off the training tape, and the time
 * spent on them is reported as `monitor_ms`.
 */
inline MomentRecord ma_train_step(nn::GeneratorState& state, const Tensor& measurement,
                                  const forward::CandidateSet& candidates, const Strategy& strategy, double lr,
                                  const ImageEvaluator& evaluate = {}) {
  ad::Tape tape;
  nn::Generated gen = nn::forward_generate(state, tape);
  ad::Var signal = generator_signal(gen.image, candidates);

  MomentRecord record;
  record.iteration = state.adam.step + 1;
  ad::Var loss;
  if (const auto only = single_candidate(strategy, candidates)) {
    loss = candidate_loss(signal, measurement, candidates, *only);
    const auto t0 = std::chrono::steady_clock::now();
    ad::Tape scratch;
    record.losses = candidate_losses(scratch.constant(signal.value()), measurement, candidates).detached;
    record.monitor_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    record.weights = one_hot_weights(candidates.size(), *only).omega;
    record.selected = *only;
  } else {
    CandidateLosses losses = candidate_losses(signal, measurement, candidates);
    record.losses = losses.detached;
    StrategyLoss objective = strategy_loss(strategy, losses, candidates);
    loss = objective.loss;
    record.weights = std::move(objective.weights.omega);
    record.selected = objective.selected;
  }
  for (double f : record.losses) {
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << "non-finite candidate loss at iteration " << record.iteration << ": F =";
      for (double v : record.losses) os << ' ' << v;
      throw DivergenceError(os.str(), record.iteration);
    }
  }
  record.loss = loss.value().item();
  if (evaluate) record.psnr = evaluate(gen.image.value());

  ad::GradientMap grads = tape.backward(loss);
  std::vector<Tensor> ordered;
  ordered.reserve(gen.weights.size());
  for (const ad::Var& w : gen.weights) ordered.push_back(std::move(grads.at(w.id())));
  nn::adam_step(state, ordered, lr);
  return record;
}

/// Current generator output without recording anything beyond a scratch tape.
inline Tensor generate_image(const nn::GeneratorState& state) {
  ad::Tape tape;
  return nn::forward_generate(state, tape).image.value();
}

}  // namespace marecon::aggregation
