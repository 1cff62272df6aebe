#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::fft {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Twiddle factors exp(sign * 2*pi*i*k/n) for k < n/2.
inline std::vector<std::complex<double>> twiddles(std::size_t n, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> w(n / 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

/// In-place iterative radix-2 transform using a table from twiddles(n, .).
/// The inverse direction is not scaled.
inline void transform_1d(std::span<std::complex<double>> a, std::span<const std::complex<double>> table) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw UnsupportedSizeError("FFT length " + std::to_string(n) + " is not a power of two");
  if (table.size() != n / 2) throw ContractError("twiddle table does not match FFT length");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> u = a[start + k];
        const std::complex<double> v = a[start + k + half] * table[k * stride];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

inline void transform_1d(std::span<std::complex<double>> a, bool inverse) {
  if (!is_power_of_two(a.size())) {
    throw UnsupportedSizeError("FFT length " + std::to_string(a.size()) + " is not a power of two");
  }
  transform_1d(a, twiddles(a.size(), inverse));
}

/// Unscaled 2-D transform of an H x W row-major buffer.
inline void transform_2d(std::span<std::complex<double>> a, std::size_t height, std::size_t width, bool inverse) {
  if (!is_power_of_two(height) || !is_power_of_two(width)) {
    throw UnsupportedSizeError("FFT size " + std::to_string(height) + "x" + std::to_string(width) +
                               " is not a power of two");
  }
  const auto row_table = twiddles(width, inverse);
  for (std::size_t r = 0; r < height; ++r) transform_1d(a.subspan(r * width, width), row_table);
  const auto col_table = height == width ? row_table : twiddles(height, inverse);
  std::vector<std::complex<double>> column(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) column[r] = a[r * width + c];
    transform_1d(column, col_table);
    for (std::size_t r = 0; r < height; ++r) a[r * width + c] = column[r];
  }
}

/// Transform a packed (2,H,W) tensor. `scale` multiplies the result.
inline Tensor transform_packed(const Tensor& packed, bool inverse, double scale) {
  if (packed.rank() != 3 || packed.dim(0) != 2) {
    throw ShapeError("FFT input must be packed (2,H,W), got " + shape_string(packed.shape()));
  }
  const std::size_t h = packed.dim(1), w = packed.dim(2), n = h * w;
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {packed[i], packed[n + i]};
  transform_2d(buf, h, w, inverse);
  Tensor out(packed.shape());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = buf[i].real() * scale;
    out[n + i] = buf[i].imag() * scale;
  }
  return out;
}

/// Forward DFT, unnormalized.
inline ComplexField fft2(const ComplexField& f) {
  return ComplexField::unpack(transform_packed(f.packed(), false, 1.0));
}

/// Inverse DFT with 1/(H*W) normalization.
inline ComplexField ifft2(const ComplexField& f) {
  return ComplexField::unpack(
      transform_packed(f.packed(), true, 1.0 / static_cast<double>(f.height() * f.width())));
}

}  // namespace marecon::fft
