#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "marecon/diffcore/ops.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::forward {

/// Gaussian sensing matrix with i.i.d. N(0, 1/m) entries.
struct GaussianMatrixParam {
  std::shared_ptr<const Tensor> phi;  // (m, n)
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

inline GaussianMatrixParam sample_gaussian_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0) throw ConfigError("gaussian matrix needs m >= 1 and n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  Tensor phi({m, n});
  for (double& v : phi.data()) v = normal(rng);
  return {std::make_shared<const Tensor>(std::move(phi)), m, n, seed};
}

/// y = Phi x, with x of any shape holding n elements. Result has shape (m).
inline ad::Var apply_cs(ad::Var x, const GaussianMatrixParam& param) {
  if (x.value().size() != param.n) {
    throw ShapeError("apply_cs: signal has " + std::to_string(x.value().size()) + " elements, matrix expects " +
                     std::to_string(param.n));
  }
  ad::Var flat = x.value().rank() == 1 ? x : ad::reshape(x, {param.n});
  return ad::matvec(param.phi, flat);
}

}  // namespace marecon::forward
