#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "marecon/diffcore/tape.hpp"
#include "marecon/errors.hpp"
#include "marecon/forward/compressive.hpp"
#include "marecon/forward/holography.hpp"

namespace marecon::forward {

using ForwardModelParameter = std::variant<GaussianMatrixParam, HolographyParam>;

enum class ForwardKind { CompressiveSensing, Holography };

inline ForwardKind kind_of(const ForwardModelParameter& p) {
  return std::holds_alternative<GaussianMatrixParam>(p) ? ForwardKind::CompressiveSensing : ForwardKind::Holography;
}

/**
 * Ordered candidate forward-model parameters. `oracle_index()` marks the
 * precise parameter and exists for evaluation only; reconstruction code
 * other than the Oracle strategy must not read it.
 */
class CandidateSet {
 public:
  CandidateSet(std::vector<ForwardModelParameter> params, std::size_t oracle_index)
      : params_(std::move(params)), oracle_index_(oracle_index) {
    if (params_.empty()) throw ConfigError("candidate set needs at least one parameter");
    if (oracle_index_ >= params_.size()) throw ConfigError("oracle index out of range");
    const ForwardKind k = kind_of(params_.front());
    for (const auto& p : params_) {
      if (kind_of(p) != k) throw ConfigError("candidate set mixes forward model kinds");
      if (const auto* cs = std::get_if<GaussianMatrixParam>(&p)) {
        const auto& first = std::get<GaussianMatrixParam>(params_.front());
        if (cs->m != first.m || cs->n != first.n) throw ShapeError("candidate matrices differ in shape");
        transfer_.push_back(nullptr);
      } else {
        const auto& h = std::get<HolographyParam>(p);
        if (h.grid != std::get<HolographyParam>(params_.front()).grid) throw ShapeError("candidate grids differ");
        transfer_.push_back(std::make_shared<const ComplexField>(build_transfer_function(h)));
      }
    }
  }

  std::size_t size() const noexcept { return params_.size(); }
  const std::vector<ForwardModelParameter>& params() const noexcept { return params_; }
  const ForwardModelParameter& operator[](std::size_t i) const { return params_.at(i); }
  std::size_t oracle_index() const noexcept { return oracle_index_; }
  ForwardKind kind() const { return kind_of(params_.front()); }

  /// A(signal; theta_i). CS expects n elements; holography a packed (2,N,N) field.
  ad::Var measure(ad::Var signal, std::size_t i) const {
    if (const auto* cs = std::get_if<GaussianMatrixParam>(&params_.at(i))) return apply_cs(signal, *cs);
    return hologram(signal, *transfer_[i]);
  }

 private:
  std::vector<ForwardModelParameter> params_;
  std::vector<std::shared_ptr<const ComplexField>> transfer_;
  std::size_t oracle_index_;
};

/**
 * The precise parameter plus (n_c - 1) alternatives, shuffled by `seed`.
 * CS alternatives are fresh N(0, 1/m) matrices; holography alternatives draw
 * distances uniformly from [z - spread, z + spread].
 */
inline CandidateSet build_candidate_set(const ForwardModelParameter& precise, std::size_t n_candidates,
                                        std::uint64_t seed, double distance_spread = 500.0) {
  if (n_candidates == 0) throw ConfigError("n_candidates must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<ForwardModelParameter> params{precise};
  if (const auto* cs = std::get_if<GaussianMatrixParam>(&precise)) {
    for (std::size_t i = 1; i < n_candidates; ++i) params.emplace_back(sample_gaussian_matrix(cs->m, cs->n, rng()));
  } else {
    const auto& h = std::get<HolographyParam>(precise);
    std::uniform_real_distribution<double> dist(h.distance - distance_spread, h.distance + distance_spread);
    for (std::size_t i = 1; i < n_candidates; ++i) {
      HolographyParam alt = h;
      alt.distance = dist(rng);
      params.emplace_back(alt);
    }
  }

  std::vector<std::size_t> order(params.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<ForwardModelParameter> shuffled;
  std::size_t oracle = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (order[pos] == 0) oracle = pos;
    shuffled.push_back(params[order[pos]]);
  }
  return CandidateSet(std::move(shuffled), oracle);
}

}  // namespace marecon::forward
