#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"
#include "marecon/nn/generator.hpp"

namespace marecon::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/**
 * One bias-corrected Adam update of `weights` in place.
 * Throws DivergenceError (before touching any state) if a gradient is NaN/Inf.
 */
inline void adam_update(std::span<Tensor> weights, std::span<const Tensor> gradients, AdamState& adam, double lr,
                        const AdamHyper& hyper = {}) {
  if (gradients.size() != weights.size() || adam.first_moment.size() != weights.size() ||
      adam.second_moment.size() != weights.size()) {
    throw ContractError("adam: need one gradient and one moment pair per weight tensor");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (gradients[k].shape() != weights[k].shape()) {
      throw ShapeError("adam: gradient " + std::to_string(k) + " has shape " + shape_string(gradients[k].shape()));
    }
    if (!gradients[k].all_finite()) {
      throw DivergenceError("non-finite gradient for weight tensor " + std::to_string(k) + " at step " +
                                std::to_string(adam.step + 1),
                            adam.step + 1);
    }
  }

  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Tensor& w = weights[k];
    Tensor& m = adam.first_moment[k];
    Tensor& v = adam.second_moment[k];
    const Tensor& g = gradients[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
}

inline void adam_step(GeneratorState& state, std::span<const Tensor> gradients, double lr,
                      const AdamHyper& hyper = {}) {
  adam_update(state.weights, gradients, state.adam, lr, hyper);
}

}  // namespace marecon::nn
