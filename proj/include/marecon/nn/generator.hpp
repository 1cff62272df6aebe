#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "marecon/diffcore/ops.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::nn {

struct GeneratorConfig {
  std::size_t output_height = 28;
  std::size_t output_width = 28;
  std::size_t output_channels = 1;  // 1 for intensity images, 2 for amplitude + phase
  std::size_t base_channels = 64;
  std::size_t num_upsample_blocks = 2;
  std::uint64_t seed = 0;

  std::size_t start_height() const { return output_height >> num_upsample_blocks; }
  std::size_t start_width() const { return output_width >> num_upsample_blocks; }

  void validate() const {
    if (output_channels == 0 || base_channels == 0) throw ConfigError("generator channel counts must be positive");
    if (num_upsample_blocks >= 16) throw ConfigError("too many upsample blocks");
    const std::size_t factor = std::size_t{1} << num_upsample_blocks;
    if (output_height == 0 || output_width == 0 || output_height % factor != 0 || output_width % factor != 0) {
      throw ConfigError("output " + std::to_string(output_height) + "x" + std::to_string(output_width) +
                        " is not divisible by 2^" + std::to_string(num_upsample_blocks));
    }
  }
};

/// First and second moment buffers of Adam, one pair per weight tensor.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  long step = 0;
};

/**
 * Latent input, trainable weights and optimizer state of the decoder.
 *
 * Weight layout: for each upsample block b, {kernel_b (C,C,3,3), gamma_b (C),
 * beta_b (C)}; then the head kernel (out_channels, C, 3, 3).
 */
struct GeneratorState {
  GeneratorConfig config;
  Tensor z;
  std::vector<Tensor> weights;
  AdamState adam;

  friend bool operator==(const GeneratorState& a, const GeneratorState& b) {
    return a.z == b.z && a.weights == b.weights && a.adam.first_moment == b.adam.first_moment &&
           a.adam.second_moment == b.adam.second_moment && a.adam.step == b.adam.step;
  }
};

namespace detail {

inline Tensor he_kernel(std::size_t out_ch, std::size_t in_ch, std::size_t k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in_ch * k * k)));
  Tensor w({out_ch, in_ch, k, k});
  for (double& v : w.data()) v = normal(rng);
  return w;
}

}  // namespace detail

inline GeneratorState init_generator(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  GeneratorState state;
  state.config = config;

  const std::size_t c = config.base_channels;
  state.z = Tensor({c, config.start_height(), config.start_width()});
  std::normal_distribution<double> standard(0.0, 1.0);
  for (double& v : state.z.data()) v = standard(rng);

  for (std::size_t b = 0; b < config.num_upsample_blocks; ++b) {
    state.weights.push_back(detail::he_kernel(c, c, 3, rng));
    state.weights.emplace_back(Shape{c}, 1.0);
    state.weights.emplace_back(Shape{c}, 0.0);
  }
  state.weights.push_back(detail::he_kernel(config.output_channels, c, 3, rng));

  for (const Tensor& w : state.weights) {
    state.adam.first_moment.emplace_back(w.shape());
    state.adam.second_moment.emplace_back(w.shape());
  }
  return state;
}

/// Generated image plus the leaf handles of the weights that produced it.
struct Generated {
  ad::Var image;
  std::vector<ad::Var> weights;
};

/// Record x = G(z; w) on `tape`. Output shape (out_channels, H, W), in (0,1).
inline Generated forward_generate(const GeneratorState& state, ad::Tape& tape) {
  Generated out;
  for (const Tensor& w : state.weights) out.weights.push_back(tape.leaf(w));

  ad::Var h = tape.constant(state.z);
  const std::size_t blocks = state.config.num_upsample_blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    h = ad::upsample_nearest_2x(h);
    h = ad::conv2d(h, out.weights[3 * b]);
    h = ad::channel_affine(h, out.weights[3 * b + 1], out.weights[3 * b + 2]);
    h = ad::relu(h);
  }
  out.image = ad::sigmoid(ad::conv2d(h, out.weights[3 * blocks]));
  return out;
}

/// Amplitude/phase read-out of a two-channel generator output: channel 0 is
/// the amplitude, channel 1 scaled by 2*pi is the phase. Returns the packed
/// object field a*exp(i*phi).
inline ad::Var object_field(ad::Var image) {
  if (image.value().rank() != 3 || image.value().dim(0) != 2) {
    throw ShapeError("object_field needs a (2,H,W) generator output, got " + shape_string(image.shape()));
  }
  ad::Var amplitude = ad::select_channel(image, 0);
  ad::Var phase = ad::scale(ad::select_channel(image, 1), 2.0 * std::numbers::pi);
  return ad::polar(amplitude, phase);
}

}  // namespace marecon::nn
