#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "marecon/diffcore/fft.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

/// Differentiable primitives. Every function validates shapes, computes the
/// forward value eagerly and records an adjoint rule on the operand's tape.
namespace marecon::ad {

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

inline Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
  return a.tape();
}

inline void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

inline void require_rank(const char* op, const Var& x, std::size_t rank) {
  if (x.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(x.shape()));
  }
}

inline void require_packed(const char* op, const Var& x) {
  if (x.value().rank() != 3 || x.value().dim(0) != 2) {
    throw ShapeError(std::string(op) + ": expected packed complex (2,H,W), got " + shape_string(x.shape()));
  }
}

inline double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace detail

inline Var add(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  detail::require_same_shape("add", a, b);
  Tensor out = a.value();
  out += b.value();
  return tape.record(OpKind::Add, {a.id(), b.id()}, std::move(out), [](const AdjointContext& c) {
    for (Tensor* g : c.grad_inputs)
      if (g) *g += c.grad_output;
  });
}

inline Var sub(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  detail::require_same_shape("subtract", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(OpKind::Subtract, {a.id(), b.id()}, std::move(out), [](const AdjointContext& c) {
    if (c.grad_inputs[0]) *c.grad_inputs[0] += c.grad_output;
    if (Tensor* g = c.grad_inputs[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= c.grad_output[i];
    }
  });
}

/// Elementwise product of equally shaped operands.
inline Var mul(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  detail::require_same_shape("multiply", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(OpKind::Multiply, {a.id(), b.id()}, std::move(out), [](const AdjointContext& c) {
    const Tensor& av = *c.inputs[0];
    const Tensor& bv = *c.inputs[1];
    if (Tensor* g = c.grad_inputs[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i] * bv[i];
    }
    if (Tensor* g = c.grad_inputs[1]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i] * av[i];
    }
  });
}

inline Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  return x.tape().record(OpKind::Scale, {x.id()}, std::move(out), [factor](const AdjointContext& c) {
    if (Tensor* g = c.grad_inputs[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += factor * c.grad_output[i];
    }
  });
}

/// (m, n) matrix times length-n vector.
inline Var matvec(Var matrix, Var vector) {
  Tape& tape = detail::same_tape(matrix, vector);
  detail::require_rank("matvec", matrix, 2);
  detail::require_rank("matvec", vector, 1);
  const std::size_t m = matrix.value().dim(0), n = matrix.value().dim(1);
  if (vector.value().dim(0) != n) {
    throw ShapeError("matvec: matrix " + shape_string(matrix.shape()) + " times vector " +
                     shape_string(vector.shape()));
  }
  Tensor out({m});
  detail::VectorMap(out.raw(), static_cast<long>(m)) =
      detail::ConstMatrixMap(matrix.value().raw(), static_cast<long>(m), static_cast<long>(n)) *
      detail::ConstVectorMap(vector.value().raw(), static_cast<long>(n));
  return tape.record(OpKind::MatVec, {matrix.id(), vector.id()}, std::move(out), [m, n](const AdjointContext& c) {
    const auto rows = static_cast<long>(m), cols = static_cast<long>(n);
    detail::ConstVectorMap g(c.grad_output.raw(), rows);
    if (Tensor* ga = c.grad_inputs[0]) {
      detail::MatrixMap(ga->raw(), rows, cols).noalias() +=
          g * detail::ConstVectorMap(c.inputs[1]->raw(), cols).transpose();
    }
    if (Tensor* gx = c.grad_inputs[1]) {
      detail::VectorMap(gx->raw(), cols).noalias() +=
          detail::ConstMatrixMap(c.inputs[0]->raw(), rows, cols).transpose() * g;
    }
  });
}

/// Matrix-vector product with a fixed matrix that is not itself on the tape.
inline Var matvec(std::shared_ptr<const Tensor> matrix, Var vector) {
  if (!matrix || matrix->rank() != 2) throw ShapeError("matvec: fixed operand must be a matrix");
  detail::require_rank("matvec", vector, 1);
  const std::size_t m = matrix->dim(0), n = matrix->dim(1);
  if (vector.value().dim(0) != n) {
    throw ShapeError("matvec: matrix " + shape_string(matrix->shape()) + " times vector " +
                     shape_string(vector.shape()));
  }
  Tensor out({m});
  detail::VectorMap(out.raw(), static_cast<long>(m)) =
      detail::ConstMatrixMap(matrix->raw(), static_cast<long>(m), static_cast<long>(n)) *
      detail::ConstVectorMap(vector.value().raw(), static_cast<long>(n));
  return vector.tape().record(
      OpKind::MatVec, {vector.id()}, std::move(out), [matrix = std::move(matrix), m, n](const AdjointContext& c) {
        if (Tensor* gx = c.grad_inputs[0]) {
          detail::VectorMap(gx->raw(), static_cast<long>(n)).noalias() +=
              detail::ConstMatrixMap(matrix->raw(), static_cast<long>(m), static_cast<long>(n)).transpose() *
              detail::ConstVectorMap(c.grad_output.raw(), static_cast<long>(m));
        }
      });
}

/**
 * Same-size 2-D convolution (cross-correlation), stride 1, zero padding
 * k/2. Input (C_in, H, W), weight (C_out, C_in, k, k) with odd k; output
 * (C_out, H, W). Lowered to a GEMM over an im2col buffer kept for backward.
 */
inline Var conv2d(Var input, Var weight) {
  Tape& tape = detail::same_tape(input, weight);
  detail::require_rank("conv2d", input, 3);
  detail::require_rank("conv2d", weight, 4);
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || w.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d: weight " + shape_string(w.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  }
  const std::size_t pad = k / 2, hw = h * wd, rows = cin * k * k;

  auto cols = std::make_shared<std::vector<double>>(rows * hw, 0.0);
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* dst = cols->data() + ((ci * k + ky) * k + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          const double* src = x.raw() + (ci * h + static_cast<std::size_t>(sy)) * wd;
          for (std::size_t xx = 0; xx < wd; ++xx) {
            const long sx = static_cast<long>(xx + kx) - static_cast<long>(pad);
            if (sx >= 0 && sx < static_cast<long>(wd)) dst[y * wd + xx] = src[sx];
          }
        }
      }
    }
  }

  Tensor out({cout, h, wd});
  const auto ecout = static_cast<long>(cout), erows = static_cast<long>(rows), ehw = static_cast<long>(hw);
  detail::MatrixMap(out.raw(), ecout, ehw).noalias() =
      detail::ConstMatrixMap(w.raw(), ecout, erows) * detail::ConstMatrixMap(cols->data(), erows, ehw);

  return tape.record(
      OpKind::Conv2d, {input.id(), weight.id()}, std::move(out),
      [cols, cin, cout, h, wd, k, pad, hw, rows](const AdjointContext& c) {
        const auto ecout = static_cast<long>(cout), erows = static_cast<long>(rows), ehw = static_cast<long>(hw);
        detail::ConstMatrixMap g(c.grad_output.raw(), ecout, ehw);
        if (Tensor* gw = c.grad_inputs[1]) {
          detail::MatrixMap(gw->raw(), ecout, erows).noalias() +=
              g * detail::ConstMatrixMap(cols->data(), erows, ehw).transpose();
        }
        if (Tensor* gx = c.grad_inputs[0]) {
          detail::RowMatrix dcols = detail::ConstMatrixMap(c.inputs[1]->raw(), ecout, erows).transpose() * g;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const double* src = dcols.data() + ((ci * k + ky) * k + kx) * hw;
                for (std::size_t y = 0; y < h; ++y) {
                  const long sy = static_cast<long>(y + ky) - static_cast<long>(pad);
                  if (sy < 0 || sy >= static_cast<long>(h)) continue;
                  double* dst = gx->raw() + (ci * h + static_cast<std::size_t>(sy)) * wd;
                  for (std::size_t xx = 0; xx < wd; ++xx) {
                    const long sx = static_cast<long>(xx + kx) - static_cast<long>(pad);
                    if (sx >= 0 && sx < static_cast<long>(wd)) dst[sx] += src[y * wd + xx];
                  }
                }
              }
            }
          }
        }
      });
}

/// (C, H, W) -> (C, 2H, 2W), each pixel replicated into a 2x2 block.
inline Var upsample_nearest_2x(Var x) {
  detail::require_rank("upsample-nearest-2x", x, 3);
  const Tensor& in = x.value();
  const std::size_t ch = in.dim(0), h = in.dim(1), w = in.dim(2);
  Tensor out({ch, 2 * h, 2 * w});
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        out[(c * 2 * h + y) * 2 * w + xx] = in[(c * h + y / 2) * w + xx / 2];
  return x.tape().record(OpKind::UpsampleNearest2x, {x.id()}, std::move(out), [ch, h, w](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    for (std::size_t cc = 0; cc < ch; ++cc)
      for (std::size_t y = 0; y < 2 * h; ++y)
        for (std::size_t xx = 0; xx < 2 * w; ++xx)
          (*g)[(cc * h + y / 2) * w + xx / 2] += c.grad_output[(cc * 2 * h + y) * 2 * w + xx];
  });
}

inline Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record(OpKind::Relu, {x.id()}, std::move(out), [](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    const Tensor& in = *c.inputs[0];
    for (std::size_t i = 0; i < g->size(); ++i)
      if (in[i] > 0.0) (*g)[i] += c.grad_output[i];
  });
}

inline Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = detail::stable_sigmoid(v);
  return x.tape().record(OpKind::Sigmoid, {x.id()}, std::move(out), [](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double s = c.output[i];
      (*g)[i] += c.grad_output[i] * s * (1.0 - s);
    }
  });
}

/// Scalar 0.5 * ||x||^2.
inline Var sum_of_squares(Var x) {
  const double half_norm = 0.5 * squared_norm(x.value());
  return x.tape().record(OpKind::SumOfSquares, {x.id()}, Tensor::scalar(half_norm), [](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    const double go = c.grad_output[0];
    const Tensor& in = *c.inputs[0];
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += go * in[i];
  });
}

/// Per-channel gamma * x + beta on a (C, ...) tensor.
inline Var channel_affine(Var x, Var gamma, Var beta) {
  Tape& tape = detail::same_tape(x, gamma);
  detail::same_tape(x, beta);
  const Tensor& in = x.value();
  if (in.rank() < 1) throw ShapeError("channel-affine: input needs a channel axis");
  const std::size_t ch = in.dim(0);
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch}) {
    throw ShapeError("channel-affine: gamma/beta must have shape (" + std::to_string(ch) + ")");
  }
  const std::size_t plane = in.size() / ch;
  Tensor out = in;
  for (std::size_t c = 0; c < ch; ++c) {
    const double gm = gamma.value()[c], bt = beta.value()[c];
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = gm * in[c * plane + i] + bt;
  }
  return tape.record(OpKind::ChannelAffine, {x.id(), gamma.id(), beta.id()}, std::move(out),
                     [ch, plane](const AdjointContext& c) {
                       const Tensor& in = *c.inputs[0];
                       const Tensor& gm = *c.inputs[1];
                       for (std::size_t cc = 0; cc < ch; ++cc) {
                         double dg = 0.0, db = 0.0;
                         for (std::size_t i = 0; i < plane; ++i) {
                           const double go = c.grad_output[cc * plane + i];
                           dg += go * in[cc * plane + i];
                           db += go;
                           if (c.grad_inputs[0]) (*c.grad_inputs[0])[cc * plane + i] += go * gm[cc];
                         }
                         if (c.grad_inputs[1]) (*c.grad_inputs[1])[cc] += dg;
                         if (c.grad_inputs[2]) (*c.grad_inputs[2])[cc] += db;
                       }
                     });
}

/// Pointwise complex product of two packed (2,H,W) fields.
inline Var complex_mul(Var a, Var b) {
  Tape& tape = detail::same_tape(a, b);
  detail::require_packed("complex-multiply", a);
  detail::require_same_shape("complex-multiply", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = av.size() / 2;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = av[i] * bv[i] - av[n + i] * bv[n + i];
    out[n + i] = av[i] * bv[n + i] + av[n + i] * bv[i];
  }
  // For a real loss with g = dL/dRe + i dL/dIm: grad_a = g * conj(b).
  return tape.record(OpKind::ComplexMultiply, {a.id(), b.id()}, std::move(out), [n](const AdjointContext& c) {
    const Tensor& g = c.grad_output;
    for (int side = 0; side < 2; ++side) {
      Tensor* ga = c.grad_inputs[side];
      if (!ga) continue;
      const Tensor& other = *c.inputs[1 - side];
      for (std::size_t i = 0; i < n; ++i) {
        (*ga)[i] += g[i] * other[i] + g[n + i] * other[n + i];
        (*ga)[n + i] += g[n + i] * other[i] - g[i] * other[n + i];
      }
    }
  });
}

/// (2,H,W) -> (H,W) with re^2 + im^2 per pixel.
inline Var squared_magnitude(Var field) {
  detail::require_packed("squared-magnitude", field);
  const Tensor& v = field.value();
  const std::size_t h = v.dim(1), w = v.dim(2), n = h * w;
  Tensor out({h, w});
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] * v[i] + v[n + i] * v[n + i];
  return field.tape().record(OpKind::SquaredMagnitude, {field.id()}, std::move(out), [n](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    const Tensor& v = *c.inputs[0];
    for (std::size_t i = 0; i < n; ++i) {
      (*g)[i] += 2.0 * v[i] * c.grad_output[i];
      (*g)[n + i] += 2.0 * v[n + i] * c.grad_output[i];
    }
  });
}

/// Unnormalized 2-D DFT of a packed field. Its adjoint is H*W times the
/// normalized inverse transform.
inline Var fft2(Var field) {
  detail::require_packed("fft2", field);
  Tensor out = fft::transform_packed(field.value(), false, 1.0);
  return field.tape().record(OpKind::Fft2, {field.id()}, std::move(out), [](const AdjointContext& c) {
    if (Tensor* g = c.grad_inputs[0]) *g += fft::transform_packed(c.grad_output, true, 1.0);
  });
}

/// Inverse 2-D DFT with 1/(H*W) scaling.
inline Var ifft2(Var field) {
  detail::require_packed("ifft2", field);
  const double inv_n = 1.0 / static_cast<double>(field.value().dim(1) * field.value().dim(2));
  Tensor out = fft::transform_packed(field.value(), true, inv_n);
  return field.tape().record(OpKind::Ifft2, {field.id()}, std::move(out), [inv_n](const AdjointContext& c) {
    if (Tensor* g = c.grad_inputs[0]) *g += fft::transform_packed(c.grad_output, false, inv_n);
  });
}

/// Packed complex field amplitude * exp(i * phase) from two (H,W) planes.
inline Var polar(Var amplitude, Var phase) {
  Tape& tape = detail::same_tape(amplitude, phase);
  detail::require_rank("polar", amplitude, 2);
  detail::require_same_shape("polar", amplitude, phase);
  const std::size_t h = amplitude.value().dim(0), w = amplitude.value().dim(1), n = h * w;
  Tensor out({2, h, w});
  for (std::size_t i = 0; i < n; ++i) {
    const double a = amplitude.value()[i], p = phase.value()[i];
    out[i] = a * std::cos(p);
    out[n + i] = a * std::sin(p);
  }
  return tape.record(OpKind::Polar, {amplitude.id(), phase.id()}, std::move(out), [n](const AdjointContext& c) {
    const Tensor& a = *c.inputs[0];
    const Tensor& p = *c.inputs[1];
    const Tensor& g = c.grad_output;
    for (std::size_t i = 0; i < n; ++i) {
      const double cs = std::cos(p[i]), sn = std::sin(p[i]);
      if (c.grad_inputs[0]) (*c.grad_inputs[0])[i] += g[i] * cs + g[n + i] * sn;
      if (c.grad_inputs[1]) (*c.grad_inputs[1])[i] += a[i] * (g[n + i] * cs - g[i] * sn);
    }
  });
}

inline Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(OpKind::Reshape, {x.id()}, std::move(out), [](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i];
  });
}

/// Plane `channel` of a (C,H,W) tensor as an (H,W) tensor.
inline Var select_channel(Var x, std::size_t channel) {
  detail::require_rank("select-channel", x, 3);
  const Tensor& in = x.value();
  if (channel >= in.dim(0)) {
    throw ShapeError("select-channel: channel " + std::to_string(channel) + " out of " + shape_string(in.shape()));
  }
  const std::size_t h = in.dim(1), w = in.dim(2), plane = h * w, offset = channel * plane;
  Tensor out({h, w});
  std::copy_n(in.data().begin() + static_cast<long>(offset), plane, out.data().begin());
  return x.tape().record(OpKind::SelectChannel, {x.id()}, std::move(out), [plane, offset](const AdjointContext& c) {
    Tensor* g = c.grad_inputs[0];
    if (!g) return;
    for (std::size_t i = 0; i < plane; ++i) (*g)[offset + i] += c.grad_output[i];
  });
}

inline Var detach(Var x) { return x.tape().detach(x); }

/// Place a fixed complex field on the tape as a packed constant.
inline Var constant(Tape& tape, const ComplexField& field) { return tape.constant(field.packed()); }

}  // namespace marecon::ad
