#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"
#include "marecon/metrics/quality.hpp"

namespace marecon::metrics {

struct PhaseReport {
  MetricReport phase;      // on phase / (2 pi)
  MetricReport amplitude;
  double global_phase = 0.0;  // offset removed before comparison, radians
};

/**
 * Compare a reconstructed complex object (amplitude, phase planes) with the
 * ground truth. Intensity measurements cannot see a constant phase offset,
 * so the offset that best aligns the two fields is removed first and the
 * residual phase is wrapped into (-pi, pi] around the truth.
 */
inline PhaseReport compare_phase(const Tensor& amplitude, const Tensor& phase, const Tensor& true_amplitude,
                                 const Tensor& true_phase) {
  if (amplitude.shape() != phase.shape() || amplitude.shape() != true_amplitude.shape() ||
      amplitude.shape() != true_phase.shape()) {
    throw ShapeError("compare_phase: all planes must share one shape");
  }
  std::complex<double> corr{0.0, 0.0};
  for (std::size_t i = 0; i < phase.size(); ++i) {
    corr += amplitude[i] * true_amplitude[i] * std::polar(1.0, phase[i] - true_phase[i]);
  }
  const double offset = std::abs(corr) > 0.0 ? std::arg(corr) : 0.0;

  constexpr double two_pi = 2.0 * std::numbers::pi;
  Tensor aligned(phase.shape()), truth(phase.shape());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    const double residual = std::remainder(phase[i] - offset - true_phase[i], two_pi);
    aligned[i] = (true_phase[i] + residual) / two_pi;
    truth[i] = true_phase[i] / two_pi;
  }
  return {evaluate(aligned, truth), evaluate(amplitude, true_amplitude), offset};
}

}  // namespace marecon::metrics
