#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "marecon/errors.hpp"

namespace marecon {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/**
 * Dense row-major array of doubles. A rank-0 tensor (empty shape) holds a
 * single scalar.
 */
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }

  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
  }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Elementwise accumulate; shapes must match.
  Tensor& operator+=(const Tensor& other) {
    if (other.shape_ != shape_) {
      throw ShapeError("accumulate " + shape_string(other.shape_) + " into " + shape_string(shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("dot of mismatched sizes");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_norm(const Tensor& a) { return dot(a, a); }

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff of mismatched sizes");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Complex 2-D field stored as separate real and imaginary planes.
struct ComplexField {
  Tensor re;
  Tensor im;

  ComplexField() = default;
  ComplexField(Tensor real, Tensor imag) : re(std::move(real)), im(std::move(imag)) {
    if (re.shape() != im.shape()) {
      throw ShapeError("complex field planes differ: " + shape_string(re.shape()) + " vs " +
                       shape_string(im.shape()));
    }
  }

  static ComplexField zeros(std::size_t height, std::size_t width) {
    return {Tensor({height, width}), Tensor({height, width})};
  }

  std::size_t height() const { return re.dim(0); }
  std::size_t width() const { return re.dim(1); }

  /// Pack as a (2, H, W) tensor: plane 0 real, plane 1 imaginary.
  Tensor packed() const {
    Tensor out({2, re.dim(0), re.dim(1)});
    std::copy(re.data().begin(), re.data().end(), out.data().begin());
    std::copy(im.data().begin(), im.data().end(), out.data().begin() + static_cast<long>(re.size()));
    return out;
  }

  static ComplexField unpack(const Tensor& packed) {
    if (packed.rank() != 3 || packed.dim(0) != 2) {
      throw ShapeError("packed complex tensor must be (2,H,W), got " + shape_string(packed.shape()));
    }
    const std::size_t h = packed.dim(1), w = packed.dim(2), n = h * w;
    ComplexField f = zeros(h, w);
    std::copy_n(packed.data().begin(), n, f.re.data().begin());
    std::copy_n(packed.data().begin() + static_cast<long>(n), n, f.im.data().begin());
    return f;
  }
};

}  // namespace marecon
