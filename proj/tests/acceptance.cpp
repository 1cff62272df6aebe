// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance                 all criteria
//   acceptance --only 1,2,3    a subset
//   acceptance --quick         criteria 5-7 on a reduced budget (smoke only)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "marecon/aggregation/loss.hpp"
#include "marecon/aggregation/train_step.hpp"
#include "marecon/aggregation/weights.hpp"
#include "marecon/diffcore.hpp"
#include "marecon/forward/candidates.hpp"
#include "marecon/harness/config.hpp"
#include "marecon/harness/experiment.hpp"
#include "marecon/metrics/quality.hpp"
#include "marecon/nn/generator.hpp"
#include "support/gradcheck.hpp"
#include "support/reference_metrics.hpp"

#ifndef MARECON_DATA_DIR
#define MARECON_DATA_DIR "data"
#endif

namespace {

using namespace marecon;
using ad::Tape;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: gradients -----------------------------------------------------------

// Relative error of the generator weight gradient of `loss(G(w))` against
// central differences, perturbing the state's weights in place.
double generator_composite_error(nn::GeneratorState state, const std::function<Var(Var)>& loss) {
  auto value = [&](const nn::GeneratorState& s) {
    Tape tape;
    return loss(nn::forward_generate(s, tape).image).value().item();
  };
  Tape tape;
  nn::Generated gen = nn::forward_generate(state, tape);
  auto grads = tape.backward(loss(gen.image));
  std::vector<Tensor> analytic, numeric;
  const double h = 1e-5;
  for (std::size_t k = 0; k < state.weights.size(); ++k) {
    analytic.push_back(grads.at(gen.weights[k].id()));
    Tensor g(state.weights[k].shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double saved = state.weights[k][i];
      state.weights[k][i] = saved + h;
      const double plus = value(state);
      state.weights[k][i] = saved - h;
      const double minus = value(state);
      state.weights[k][i] = saved;
      g[i] = (plus - minus) / (2 * h);
    }
    numeric.push_back(std::move(g));
  }
  return testing::max_relative_error(analytic, numeric);
}

// At initialization beta = 0, so a pixel whose receptive field is dead in
// every channel sits exactly on the ReLU kink and central differences
// average the two one-sided slopes. Random affine parameters move the check
// off the kink.
nn::GeneratorState off_kink(nn::GeneratorState state, std::mt19937_64& rng) {
  for (std::size_t b = 0; b < state.config.num_upsample_blocks; ++b) {
    state.weights[3 * b + 1] = random_tensor(state.weights[3 * b + 1].shape(), rng, 0.5, 1.5);
    state.weights[3 * b + 2] = random_tensor(state.weights[3 * b + 2].shape(), rng, -0.3, 0.3);
  }
  return state;
}

nn::GeneratorConfig small_generator(std::size_t channels, std::uint64_t seed) {
  nn::GeneratorConfig c;
  c.output_height = 8;
  c.output_width = 8;
  c.output_channels = channels;
  c.base_channels = 3;
  c.num_upsample_blocks = 2;
  c.seed = seed;
  return c;
}

// sum_i omega_i F_i with omega fixed from the starting point, so the
// finite differences see the same objective the tape differentiates.
std::function<Var(Var)> frozen_candidate_sum(const forward::CandidateSet& set, const Tensor& y,
                                             const std::vector<double>& omega) {
  return [&set, &y, omega](Var image) {
    Var signal = aggregation::generator_signal(image, set);
    return aggregation::aggregate_loss({omega}, aggregation::candidate_losses(signal, y, set));
  };
}

Verdict criterion_gradients() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  auto track = [&](double err) { worst = std::max(worst, err); };
  int seeds = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed, ++seeds) {
    std::mt19937_64 rng(seed);
    const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::add(x[0], x[1])); }, {a, b}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::sub(x[0], x[1])); }, {a, b}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::mul(x[0], x[1])); }, {a, b}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::scale(x[0], 1.3)); }, {a}));
    {
      // Detach: the tape gradient must match differences of the objective
      // with the detached factor frozen at its current value.
      Tape t;
      const Tensor frozen = ad::sigmoid(t.constant(a)).value();
      const auto live = testing::analytic_gradients(
          [](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::mul(ad::detach(ad::sigmoid(x[0])), x[0])); },
          {a});
      const auto fixed = testing::numeric_gradients(
          [&frozen](Tape& tp, const std::vector<Var>& x) { return ad::sum_of_squares(ad::mul(tp.constant(frozen), x[0])); },
          {a});
      track(testing::max_relative_error(live, fixed));
    }

    const Tensor m = random_tensor({5, 7}, rng), vec = random_tensor({7}, rng);
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::matvec(x[0], x[1])); },
                    {m, vec}));

    const Tensor img = random_tensor({3, 4, 5}, rng), w = random_tensor({2, 3, 3, 3}, rng);
    const Tensor gamma = random_tensor({3}, rng), beta = random_tensor({3}, rng);
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::conv2d(x[0], x[1])); },
                    {img, w}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::upsample_nearest_2x(x[0])); },
                    {img}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) {
      return ad::sum_of_squares(ad::channel_affine(x[0], x[1], x[2]));
    }, {img, gamma, beta}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::relu(x[0])); },
                    {testing::random_away_from_zero({4, 4}, rng)}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::sigmoid(x[0])); },
                    {random_tensor({4, 4}, rng, -4, 4)}));

    const Tensor za = random_tensor({2, 4, 8}, rng), zb = random_tensor({2, 4, 8}, rng);
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::complex_mul(x[0], x[1])); },
                    {za, zb}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::squared_magnitude(x[0])); },
                    {za}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) {
      return ad::sum_of_squares(ad::squared_magnitude(ad::fft2(x[0])));
    }, {za}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) {
      return ad::sum_of_squares(ad::squared_magnitude(ad::ifft2(x[0])));
    }, {za}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) { return ad::sum_of_squares(ad::polar(x[0], x[1])); },
                    {random_tensor({4, 4}, rng), random_tensor({4, 4}, rng, -3, 3)}));
    track(gradcheck([](Tape&, const std::vector<Var>& x) {
      return ad::sum_of_squares(ad::sigmoid(ad::select_channel(ad::reshape(x[0], {2, 3, 4}), 1)));
    }, {random_tensor({24}, rng)}));

    // Generator through each forward model, with weights fixed at the start.
    const auto cs_state = off_kink(nn::init_generator(small_generator(1, seed)), rng);
    const auto cs_set = forward::build_candidate_set(forward::sample_gaussian_matrix(12, 64, seed + 100), 3, seed);
    Tape tape;
    const Tensor cs_y = cs_set.measure(tape.constant(random_tensor({1, 8, 8}, rng, 0, 1)), cs_set.oracle_index()).value();
    track(generator_composite_error(cs_state, frozen_candidate_sum(cs_set, cs_y, {0.5, 0.3, 0.2})));

    const auto holo_state = off_kink(nn::init_generator(small_generator(2, seed + 1000)), rng);
    forward::HolographyParam optics;
    optics.grid = 8;
    optics.distance = 40.0;
    optics.pixel_pitch = 1.0;
    const auto holo_set = forward::build_candidate_set(optics, 3, seed, 10.0);
    const Tensor holo_y =
        holo_set.measure(tape.constant(random_tensor({2, 8, 8}, rng, -1, 1)), holo_set.oracle_index()).value();
    track(generator_composite_error(holo_state, frozen_candidate_sum(holo_set, holo_y, {0.2, 0.5, 0.3})));
  }
  const double elapsed = seconds_since(t0);
  v.detail << seeds << " seeds, 17 primitive checks + 2 generator composites each, max rel err " << worst << ", "
           << elapsed << " s";
  v.require(worst < 1e-4, "relative error < 1e-4");
  v.require(elapsed < 60.0, "runtime < 60 s");
  return v;
}

// ---- 2: stop-gradient -------------------------------------------------------

struct SmallProblem {
  forward::CandidateSet set;
  Tensor y;
};

SmallProblem small_cs_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto set = forward::build_candidate_set(forward::sample_gaussian_matrix(8, 16, seed + 7), 4, seed);
  Tape tape;
  Tensor y = set.measure(tape.constant(random_tensor({1, 4, 4}, rng, 0, 1)), set.oracle_index()).value();
  return {std::move(set), std::move(y)};
}

SmallProblem small_holo_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  forward::HolographyParam optics;
  optics.grid = 8;
  optics.distance = 30.0;
  optics.pixel_pitch = 1.0;
  auto set = forward::build_candidate_set(optics, 4, seed, 8.0);
  Tape tape;
  Tensor y = set.measure(tape.constant(random_tensor({2, 8, 8}, rng)), set.oracle_index()).value();
  return {std::move(set), std::move(y)};
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

// Sum_i omega_i(x) F_i(x), weights recomputed from x: the objective a
// version without the stop-gradient would be differentiating.
double coupled_objective(const SmallProblem& p, const Tensor& x, double temperature) {
  Tape tape;
  const auto losses = aggregation::candidate_losses(tape.constant(x), p.y, p.set);
  const auto w = aggregation::ma_weights(losses.detached, temperature);
  double total = 0.0;
  for (std::size_t i = 0; i < w.omega.size(); ++i) total += w.omega[i] * losses.detached[i];
  return total;
}

Verdict criterion_stop_gradient() {
  Verdict v;
  double worst = 0.0, smallest_gap = std::numeric_limits<double>::infinity();
  int problems = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (bool holo : {false, true}) {
      const SmallProblem p = holo ? small_holo_problem(seed) : small_cs_problem(seed);
      std::mt19937_64 rng(seed + 77);
      const Tensor x0 = holo ? random_tensor({2, 8, 8}, rng) : random_tensor({1, 4, 4}, rng, 0, 1);

      Tape tape;
      Var x = tape.leaf(x0);
      const auto losses = aggregation::candidate_losses(x, p.y, p.set);
      // Temperature at the loss scale keeps the weights away from one-hot.
      double mean_loss = 0.0;
      for (double f : losses.detached) mean_loss += f / static_cast<double>(losses.size());
      const double temperature = mean_loss;
      const auto w = aggregation::ma_weights(losses.detached, temperature);
      const Tensor g_ma = tape.backward(aggregation::aggregate_loss(w, losses)).at(x.id());

      Tensor g_sum(x0.shape());
      for (std::size_t i = 0; i < p.set.size(); ++i) {
        Tape t;
        Var xi = t.leaf(x0);
        const Tensor gi = t.backward(aggregation::candidate_losses(xi, p.y, p.set).values[i]).at(xi.id());
        for (std::size_t k = 0; k < g_sum.size(); ++k) g_sum[k] += w.omega[i] * gi[k];
      }
      worst = std::max(worst, max_abs_diff(g_ma, g_sum) / max_abs(g_sum));

      // Control: differentiate through the weights as well.
      Tensor g_coupled(x0.shape());
      const double h = 1e-6;
      for (std::size_t k = 0; k < x0.size(); ++k) {
        Tensor plus = x0, minus = x0;
        plus[k] += h;
        minus[k] -= h;
        g_coupled[k] = (coupled_objective(p, plus, temperature) - coupled_objective(p, minus, temperature)) / (2 * h);
      }
      smallest_gap = std::min(smallest_gap, max_abs_diff(g_ma, g_coupled) / max_abs(g_sum));
      ++problems;
    }
  }
  v.detail << problems << " problems (CS + holography), max rel |grad L_MA - sum w grad F| = " << worst
           << ", smallest rel gap to the non-detached control = " << smallest_gap;
  v.require(worst < 1e-10, "stop-gradient identity < 1e-10");
  v.require(smallest_gap > 1e-3, "control differs measurably (> 1e-3)");
  return v;
}

// ---- 3: weights -------------------------------------------------------------

Verdict criterion_weights() {
  Verdict v;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_loss(-6.0, 4.0);
  bool simplex = true, monotone = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> f(2 + trial % 12);
    for (double& x : f) x = std::pow(10.0, log_loss(rng));
    const double temperature = std::pow(10.0, log_loss(rng));
    const auto w = aggregation::ma_weights(f, temperature);
    double sum = 0.0;
    for (double o : w.omega) {
      simplex = simplex && o >= 0.0 && std::isfinite(o);
      sum += o;
    }
    simplex = simplex && std::abs(sum - 1.0) < 1e-12;
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t j = 0; j < f.size(); ++j)
        if (f[i] < f[j]) monotone = monotone && w.omega[i] >= w.omega[j];
  }
  v.require(simplex, "simplex");
  v.require(monotone, "monotone");

  std::vector<double> peaked(10, 1.0);
  peaked[0] = 1e-6;
  const double concentrated = aggregation::ma_weights(peaked).omega[0];
  v.require(concentrated > 1.0 - 1e-9, "concentration");

  bool robust = true;
  for (const std::vector<double>& f : {std::vector<double>{1e-20, 1.0}, std::vector<double>{1e-20, 1e-20},
                                       std::vector<double>{1e-20, 3e-20, 1.0}, std::vector<double>{0.0, 1e-20}}) {
    const auto w = aggregation::ma_weights(f);
    double sum = 0.0;
    for (double o : w.omega) {
      robust = robust && std::isfinite(o);
      sum += o;
    }
    robust = robust && std::abs(sum - 1.0) < 1e-12;
  }
  const auto tie = aggregation::ma_weights(std::vector<double>{1e-20, 1e-20});
  robust = robust && std::abs(tie.omega[0] - 0.5) < 1e-15;
  v.require(robust, "overflow robustness");

  const double two = aggregation::ma_weights(std::vector<double>{0.1, 1.0}).omega[0];
  const double independent = 1.0 / (1.0 + std::exp(1.0 - 10.0));
  v.require(std::abs(two - 0.99987660) < 1e-8, "omega_1(0.1, 1.0) = 0.99987660");
  v.require(std::abs(two - independent) < 1e-14, "matches 1/(1+e^-9)");
  v.detail.precision(12);
  v.detail << "500 random simplex/monotonicity draws, concentration omega_1 = " << concentrated
           << ", omega_1(0.1, 1.0) = " << two;
  return v;
}

// ---- 4: physics ---------------------------------------------------------------

Verdict criterion_physics() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  const forward::HolographyParam p;  // 64x64 defaults
  const std::size_t n = p.grid;

  const Tensor u = random_tensor({2, n, n}, rng), w = random_tensor({2, n, n}, rng);
  double adjoint = 0.0;
  for (bool inverse : {false, true}) {
    Tape tape;
    Var x = tape.leaf(u);
    Var y = inverse ? ad::ifft2(x) : ad::fft2(x);
    Var probe = ad::matvec(tape.constant(w.reshaped({1, w.size()})), ad::reshape(y, {w.size()}));
    const Tensor back = tape.backward(probe).at(x.id());
    adjoint = std::max(adjoint, std::abs(dot(y.value(), w) - dot(u, back)) / std::abs(dot(y.value(), w)));
  }
  const Tensor spectrum = fft::transform_packed(u, false, 1.0);
  const double parseval = std::abs(squared_norm(spectrum) / (static_cast<double>(n * n) * squared_norm(u)) - 1.0);

  forward::HolographyParam back = p;
  back.distance = -p.distance;
  Tape tape;
  Var there = forward::propagate(tape.constant(u), forward::build_transfer_function(p));
  const double round_trip =
      max_abs_diff(forward::propagate(there, forward::build_transfer_function(back)).value(), u);

  forward::HolographyParam d1 = p, d2 = p, d12 = p;
  d1.distance = 4700.0;
  d2.distance = 350.5;
  d12.distance = d1.distance + d2.distance;
  const ComplexField p1 = forward::build_transfer_function(d1), p2 = forward::build_transfer_function(d2),
                     p12 = forward::build_transfer_function(d12);
  double compose = 0.0;
  for (std::size_t ky = 0; ky < n; ++ky)
    for (std::size_t kx = 0; kx < n; ++kx) {
      if (!forward::is_propagating(p, ky, kx)) continue;
      const std::size_t i = ky * n + kx;
      const auto prod = std::complex<double>(p1.re[i], p1.im[i]) * std::complex<double>(p2.re[i], p2.im[i]);
      compose = std::max(compose, std::abs(prod - std::complex<double>(p12.re[i], p12.im[i])));
    }

  ComplexField obj{random_tensor({n, n}, rng), random_tensor({n, n}, rng)};
  ComplexField rotated = ComplexField::zeros(n, n);
  for (std::size_t i = 0; i < n * n; ++i) {
    const auto r = std::complex<double>(obj.re[i], obj.im[i]) * std::polar(1.0, 2.2);
    rotated.re[i] = r.real();
    rotated.im[i] = r.imag();
  }
  const double global_phase = max_abs_diff(forward::hologram(tape.constant(obj.packed()), p).value(),
                                           forward::hologram(tape.constant(rotated.packed()), p).value());
  const double elapsed = seconds_since(t0);

  v.detail << "64x64: adjoint " << adjoint << ", Parseval " << parseval << ", round trip " << round_trip
           << ", composition " << compose << ", global phase " << global_phase << ", " << elapsed << " s";
  v.require(adjoint < 1e-8 && parseval < 1e-8, "FFT adjoint/Parseval < 1e-8");
  v.require(round_trip < 1e-9, "round trip < 1e-9");
  v.require(compose < 1e-10, "composition < 1e-10");
  v.require(global_phase < 1e-10, "global phase invariance < 1e-10");
  v.require(elapsed < 60.0, "runtime < 60 s");
  return v;
}

// ---- 5-7: experiments --------------------------------------------------------

const harness::SummaryRow& row(const harness::Comparison& cmp, const char* name) {
  const harness::SummaryRow* r = cmp.row(name);
  if (!r) throw ContractError(std::string("missing row ") + name);
  return *r;
}

harness::Comparison run_cs(long iterations) {
  auto c = harness::ExperimentConfig::for_task(harness::Task::CompressiveSensing);
  c.idx_path = std::string(MARECON_DATA_DIR) + "/digits28-idx3-ubyte";
  c.m = 200;
  c.n_candidates = 10;
  c.iterations = iterations;
  c.strategies = {"oracle", "ma", "random"};
  return harness::run_comparison(c);
}

Verdict criterion_cs(const harness::Comparison& cmp, double wall) {
  Verdict v;
  const auto& oracle = row(cmp, "oracle");
  const auto& ma = row(cmp, "ma");
  const auto& random = row(cmp, "random");
  double slowest = 0.0;
  for (const auto& r : cmp.runs) slowest = std::max(slowest, r.total_seconds());
  v.detail.precision(4);
  v.detail << "oracle " << oracle.report.psnr << " dB, MA " << ma.report.psnr << " dB (delta " << ma.delta_psnr
           << "), random-fixed mean " << random.report.psnr << " dB, slowest strategy run " << slowest << " s, wall "
           << wall << " s";
  v.require(oracle.report.psnr >= 17.0, "oracle >= 17 dB");
  v.require(ma.delta_psnr <= 2.5, "MA within 2.5 dB of oracle");
  v.require(random.report.psnr <= 12.0, "random-fixed mean <= 12 dB");
  v.require(ma.report.psnr - random.report.psnr >= 4.0, "MA beats random-fixed by >= 4 dB");
  v.require(slowest < 15 * 60.0, "< 15 min per strategy");
  return v;
}

Verdict criterion_holography(long iterations) {
  Verdict v;
  auto c = harness::ExperimentConfig::for_task(harness::Task::Holography);
  if (iterations > 0) c.iterations = iterations;
  c.strategies = {"oracle", "ma", "alternating", "uniform"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto cmp = harness::run_comparison(c);
  const double wall = seconds_since(t0);
  const auto& oracle = row(cmp, "oracle");
  const auto& ma = row(cmp, "ma");
  const auto& alt = row(cmp, "alternating");
  const auto& uni = row(cmp, "uniform");
  double slowest = 0.0;
  for (const auto& r : cmp.runs) slowest = std::max(slowest, r.total_seconds());
  v.detail.precision(4);
  v.detail << "phase PSNR: oracle " << oracle.report.psnr << ", MA " << ma.report.psnr << " (delta " << ma.delta_psnr
           << "), alternating " << alt.report.psnr << " (delta " << alt.delta_psnr << "), uniform "
           << uni.report.psnr << " (delta " << uni.delta_psnr << "); " << c.iterations << " iterations, wall " << wall
           << " s";
  v.require(ma.delta_psnr <= 2.5, "MA within 2.5 dB of oracle");
  v.require(alt.delta_psnr >= 3.0, "alternating trails oracle by >= 3 dB");
  v.require(uni.delta_psnr >= 3.0, "uniform trails oracle by >= 3 dB");
  v.require(slowest < 30 * 60.0, "< 30 min per strategy");
  return v;
}

Verdict criterion_timing(const harness::Comparison& cmp) {
  Verdict v;
  const auto& oracle = row(cmp, "oracle");
  const auto& ma = row(cmp, "ma");
  const double nc = static_cast<double>(cmp.problem.candidates.size());
  const double per_iter = ma.mean_iteration_seconds / oracle.mean_iteration_seconds;
  const double total = ma.total_seconds / oracle.total_seconds;
  v.detail.precision(4);
  v.detail << "MA/oracle per-iteration " << per_iter << "x, total " << total << "x, n_c = " << nc << " ("
           << ma.mean_iteration_seconds * 1e3 << " vs " << oracle.mean_iteration_seconds * 1e3 << " ms/iter)";
  v.require(per_iter > 1.0 && per_iter < nc, "1 < per-iteration ratio < n_c");
  v.require(total < nc, "total ratio < n_c");
  return v;
}

// ---- 8: metrics ---------------------------------------------------------------

Verdict criterion_metrics() {
  Verdict v;
  std::mt19937_64 rng(8);
  double worst_psnr = 0.0, worst_ssim = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = 24 + 8 * static_cast<std::size_t>(trial % 3), w = 28 + 4 * static_cast<std::size_t>(trial % 4);
    const Tensor a = random_tensor({1, h, w}, rng, 0, 1);
    Tensor b = a;
    const Tensor noise = random_tensor({1, h, w}, rng, -0.25, 0.25);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::clamp(b[i] + noise[i], 0.0, 1.0);
    worst_psnr = std::max(worst_psnr, std::abs(metrics::psnr(a, b) - testing::reference_psnr(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(metrics::ssim(a, b) - testing::reference_ssim(a, b, h, w)));
  }
  // scikit-image structural_similarity(gaussian_weights=True, sigma=1.5,
  // use_sample_covariance=False, data_range=1) and peak_signal_noise_ratio.
  const std::size_t h = 32, w = 40;
  Tensor a({h, w}), b({h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      a[y * w + x] = 0.5 + 0.4 * std::sin(0.3 * fx + 0.2 * fy);
      b[y * w + x] = std::clamp(a[y * w + x] + 0.15 * std::cos(0.05 * fx * fy) - 0.05, 0.0, 1.0);
    }
  const double sk_ssim = std::abs(metrics::ssim(a, b) - 0.746162454450074);
  const double sk_psnr = std::abs(metrics::psnr(a, b) - 19.0807415364372);
  v.detail << "10 random pairs: max |PSNR - reference| " << worst_psnr << ", max |SSIM - brute force| " << worst_ssim
           << "; scikit-image pair: " << sk_psnr << " / " << sk_ssim;
  v.require(std::max(worst_psnr, sk_psnr) < 1e-6, "PSNR to 1e-6");
  v.require(std::max(worst_ssim, sk_ssim) < 1e-6, "SSIM to 1e-6");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  bool quick = false;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_flag("--quick", quick, "reduced iteration budget for criteria 5-7 (not a valid acceptance run)");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8} : std::set<int>(only.begin(), only.end());

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    if (!selected.count(id)) return;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    if (!v.pass) ++failures;
    std::printf("%s  %d  %-22s %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.str().c_str());
    std::fflush(stdout);
  };

  std::optional<harness::Comparison> cs;
  double cs_wall = 0.0;
  auto cs_run = [&]() -> const harness::Comparison& {
    if (!cs) {
      const auto t0 = std::chrono::steady_clock::now();
      cs = run_cs(quick ? 200 : 2000);
      cs_wall = seconds_since(t0);
    }
    return *cs;
  };

  report(1, "gradients", criterion_gradients);
  report(2, "stop-gradient", criterion_stop_gradient);
  report(3, "moment weights", criterion_weights);
  report(4, "physics", criterion_physics);
  report(5, "compressive sensing", [&] {
    const auto& c = cs_run();
    return criterion_cs(c, cs_wall);
  });
  report(6, "holography", [&] { return criterion_holography(quick ? 300 : 0); });
  report(7, "timing", [&] { return criterion_timing(cs_run()); });
  report(8, "metric oracles", criterion_metrics);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
