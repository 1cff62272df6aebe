#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "marecon/dataio/image.hpp"
#include "marecon/diffcore/fft.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::dataio {

enum class PhantomKind { Blobs, Rings, TextLike };

inline PhantomKind parse_phantom_kind(std::string_view text) {
  if (text == "blobs") return PhantomKind::Blobs;
  if (text == "rings") return PhantomKind::Rings;
  if (text == "text-like") return PhantomKind::TextLike;
  throw ConfigError("unknown phantom kind '" + std::string(text) + "'");
}

inline std::string_view phantom_kind_name(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::Blobs: return "blobs";
    case PhantomKind::Rings: return "rings";
    case PhantomKind::TextLike: return "text-like";
  }
  return "unknown";
}

/// Phase scale of the holography ground truth: phase = kPhantomPhaseScale * pixel.
inline constexpr double kPhantomPhaseScale = 0.8 * std::numbers::pi;

struct Phantom {
  ImageSample image;  // (1, N, N) in [0, 1]
  Tensor phase;       // (N, N), radians
};

namespace detail {

inline void normalize_peak(Tensor& t) {
  const double peak = *std::max_element(t.data().begin(), t.data().end());
  if (peak > 0.0)
    for (double& v : t.data()) v /= peak;
}

}  // namespace detail

/**
 * Synthetic test object of size x size (power of two):
 *  - blobs: sum of seeded Gaussian bumps, peak-normalized
 *  - rings: concentric annuli, a function of the radius only
 *  - text-like: random axis-aligned strokes
 */
inline Phantom make_phantom(PhantomKind kind, std::size_t size, std::uint64_t seed) {
  if (!fft::is_power_of_two(size)) throw ConfigError("phantom size " + std::to_string(size) + " is not a power of two");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n = static_cast<double>(size);
  Tensor px({1, size, size});

  switch (kind) {
    case PhantomKind::Blobs: {
      for (int k = 0; k < 12; ++k) {
        const double cx = n * (0.125 + 0.75 * unit(rng));
        const double cy = n * (0.125 + 0.75 * unit(rng));
        const double sigma = n * (0.03 + 0.06 * unit(rng));
        const double amp = 0.3 + 0.7 * unit(rng);
        for (std::size_t y = 0; y < size; ++y)
          for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            px[y * size + x] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          }
      }
      detail::normalize_peak(px);
      break;
    }
    case PhantomKind::Rings: {
      const double center = (n - 1.0) / 2.0;
      const double period = n * (0.08 + 0.06 * unit(rng));
      const double outer = n * (0.35 + 0.1 * unit(rng));
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const double dx = static_cast<double>(x) - center, dy = static_cast<double>(y) - center;
          const double r = std::sqrt(dx * dx + dy * dy);
          const double taper = 0.5 * (1.0 - std::tanh((r - outer) / 1.5));
          px[y * size + x] = taper * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * r / period));
        }
      break;
    }
    case PhantomKind::TextLike: {
      const int strokes = 10 + static_cast<int>(unit(rng) * 8);
      for (int k = 0; k < strokes; ++k) {
        const bool horizontal = unit(rng) < 0.5;
        const double len = n * (0.15 + 0.35 * unit(rng));
        const double thick = std::max(1.0, n * (0.02 + 0.03 * unit(rng)));
        const double x0 = n * 0.1 + unit(rng) * (n * 0.8 - (horizontal ? len : thick));
        const double y0 = n * 0.1 + unit(rng) * (n * 0.8 - (horizontal ? thick : len));
        const double x1 = x0 + (horizontal ? len : thick), y1 = y0 + (horizontal ? thick : len);
        const double level = 0.5 + 0.5 * unit(rng);
        for (std::size_t y = 0; y < size; ++y)
          for (std::size_t x = 0; x < size; ++x) {
            const double fx = static_cast<double>(x) + 0.5, fy = static_cast<double>(y) + 0.5;
            if (fx >= x0 && fx < x1 && fy >= y0 && fy < y1) {
              px[y * size + x] = std::max(px[y * size + x], level);
            }
          }
      }
      break;
    }
  }

  for (double& v : px.data()) v = std::clamp(v, 0.0, 1.0);
  Tensor phase({size, size});
  for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = kPhantomPhaseScale * px[i];
  std::string id = std::string(phantom_kind_name(kind)) + "-" + std::to_string(size) + "-seed" + std::to_string(seed);
  return {{std::move(px), std::move(id)}, std::move(phase)};
}

}  // namespace marecon::dataio
