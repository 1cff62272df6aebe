#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::metrics {

struct MetricReport {
  double psnr = 0.0;  // dB, +inf for identical images
  double ssim = 0.0;
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// (H, W) of a single-channel image given as (H,W) or (1,H,W).
inline std::pair<std::size_t, std::size_t> plane_dims(const Tensor& t) {
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  if (t.rank() == 3 && t.dim(0) == 1) return {t.dim(1), t.dim(2)};
  throw ShapeError("expected a single-channel image, got " + shape_string(t.shape()));
}

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double center = static_cast<double>(size - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

/// Separable 'valid' filtering of an H x W plane.
inline std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                        const std::vector<double>& kernel) {
  const std::size_t k = kernel.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += kernel[j] * img[y * w + x + j];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += kernel[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace detail

/// Mean squared error after clamping both images to [0, 1].
inline double mse(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("image shapes differ: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = detail::clamp01(a[i]) - detail::clamp01(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// 10 log10(1 / MSE) for images in [0, 1]; +inf when identical.
inline double psnr(const Tensor& a, const Tensor& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained Gaussian windows.
inline double ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt = {}) {
  if (a.shape() != b.shape()) {
    throw ShapeError("image shapes differ: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const auto [h, w] = detail::plane_dims(a);
  if (h < opt.window || w < opt.window) {
    throw ConfigError("image " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than the " +
                      std::to_string(opt.window) + "x" + std::to_string(opt.window) + " SSIM window");
  }
  const std::size_t n = h * w;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = detail::clamp01(a[i]);
    y[i] = detail::clamp01(b[i]);
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto kernel = detail::gaussian_window(opt.window, opt.sigma);
  const auto mu_x = detail::filter_valid(x, h, w, kernel);
  const auto mu_y = detail::filter_valid(y, h, w, kernel);
  const auto e_xx = detail::filter_valid(xx, h, w, kernel);
  const auto e_yy = detail::filter_valid(yy, h, w, kernel);
  const auto e_xy = detail::filter_valid(xy, h, w, kernel);

  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = e_xx[i] - mx * mx, vy = e_yy[i] - my * my, cov = e_xy[i] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mu_x.size());
}

inline MetricReport evaluate(const Tensor& reconstruction, const Tensor& truth) {
  return {psnr(reconstruction, truth), ssim(reconstruction, truth)};
}

}  // namespace marecon::metrics
