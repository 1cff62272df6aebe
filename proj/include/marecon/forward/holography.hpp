#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>

#include "marecon/diffcore/fft.hpp"
#include "marecon/diffcore/ops.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::forward {

/// In-line holography setup. Lengths in micrometers.
struct HolographyParam {
  double wavelength = 0.520;
  double distance = 5000.0;
  double pixel_pitch = 2.0;
  std::size_t grid = 64;

  void validate() const {
    if (!(wavelength > 0.0) || !(pixel_pitch > 0.0)) throw ConfigError("wavelength and pixel pitch must be positive");
    if (!std::isfinite(distance)) throw ConfigError("propagation distance must be finite");
    if (!fft::is_power_of_two(grid)) throw ConfigError("hologram grid " + std::to_string(grid) + " is not a power of two");
  }
};

/// Frequency of DFT bin k in cycles per micrometer (wrapped ordering).
inline double dft_frequency(std::size_t k, std::size_t n, double pitch) {
  const double kk = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return kk / (static_cast<double>(n) * pitch);
}

/// True when (lambda fx)^2 + (lambda fy)^2 <= 1 at bin (ky, kx).
inline bool is_propagating(const HolographyParam& p, std::size_t ky, std::size_t kx) {
  const double ax = p.wavelength * dft_frequency(kx, p.grid, p.pixel_pitch);
  const double ay = p.wavelength * dft_frequency(ky, p.grid, p.pixel_pitch);
  return ax * ax + ay * ay <= 1.0;
}

/**
 * Angular-spectrum transfer function
 *   P(fx, fy) = exp(i 2 pi (d / lambda) sqrt(1 - (lambda fx)^2 - (lambda fy)^2))
 * on propagating frequencies, zero on evanescent ones.
 */
inline ComplexField build_transfer_function(const HolographyParam& param) {
  param.validate();
  const std::size_t n = param.grid;
  ComplexField p = ComplexField::zeros(n, n);
  for (std::size_t ky = 0; ky < n; ++ky) {
    const double ay = param.wavelength * dft_frequency(ky, n, param.pixel_pitch);
    for (std::size_t kx = 0; kx < n; ++kx) {
      const double ax = param.wavelength * dft_frequency(kx, n, param.pixel_pitch);
      const double arg = 1.0 - ax * ax - ay * ay;
      if (arg < 0.0) continue;
      const double phase = 2.0 * std::numbers::pi * (param.distance / param.wavelength) * std::sqrt(arg);
      p.re[ky * n + kx] = std::cos(phase);
      p.im[ky * n + kx] = std::sin(phase);
    }
  }
  return p;
}

/// F^-1 { P . F { object } } for a packed (2,N,N) object.
inline ad::Var propagate(ad::Var object, const ComplexField& transfer) {
  const Shape expected{2, transfer.height(), transfer.width()};
  if (object.shape() != expected) {
    throw ShapeError("propagate: object " + shape_string(object.shape()) + " vs transfer function " +
                     shape_string(expected));
  }
  ad::Var spectrum = ad::fft2(object);
  ad::Var filtered = ad::complex_mul(ad::constant(object.tape(), transfer), spectrum);
  return ad::ifft2(filtered);
}

/// Sensor intensity |U(z)|^2 of the propagated object field.
inline ad::Var hologram(ad::Var object, const ComplexField& transfer) {
  return ad::squared_magnitude(propagate(object, transfer));
}

inline ad::Var hologram(ad::Var object, const HolographyParam& param) {
  return hologram(object, build_transfer_function(param));
}

}  // namespace marecon::forward
