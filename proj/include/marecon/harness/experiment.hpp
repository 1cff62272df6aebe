#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "marecon/aggregation/loss.hpp"
#include "marecon/aggregation/train_step.hpp"
#include "marecon/dataio/idx.hpp"
#include "marecon/dataio/image.hpp"
#include "marecon/dataio/phantom.hpp"
#include "marecon/diffcore/ops.hpp"
#include "marecon/errors.hpp"
#include "marecon/forward/candidates.hpp"
#include "marecon/harness/config.hpp"
#include "marecon/metrics/phase.hpp"
#include "marecon/metrics/quality.hpp"
#include "marecon/nn/generator.hpp"

namespace marecon::harness {

/// Object transmittance of the holography ground truth: mild absorption
/// where the phase delay is large.
inline double ground_truth_amplitude(double pixel) { return 0.9 - 0.4 * pixel; }

/// Everything shared by the strategies of one comparison.
struct Problem {
  forward::CandidateSet candidates;
  Tensor measurement;
  Tensor truth;            // (1,H,W) image in [0,1]
  Tensor true_amplitude;   // holography only, (N,N)
  Tensor true_phase;       // holography only, (N,N) radians
  nn::GeneratorConfig generator;
  double temperature = 1.0;
  std::string source_id;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::size_t blocks_for(std::size_t side) {
  std::size_t blocks = 0;
  while (blocks < 3 && side % (std::size_t{1} << (blocks + 1)) == 0 && (side >> (blocks + 1)) >= 4) ++blocks;
  return blocks;
}

inline dataio::ImageSample load_sample(const ExperimentConfig& c) {
  if (c.dataset == "mnist") {
    if (c.idx_path.empty()) throw ConfigError("dataset 'mnist' needs idx_path");
    auto images = dataio::load_idx(c.idx_path);
    if (c.sample >= images.size()) {
      throw ConfigError("sample " + std::to_string(c.sample) + " out of range (" + std::to_string(images.size()) +
                        " images in " + c.idx_path + ")");
    }
    return std::move(images[c.sample]);
  }
  if (c.dataset == "image") {
    dataio::LoadOptions opts;
    if (c.task == Task::Holography) opts.size = c.grid;
    return dataio::load_grayscale_image(c.image_path, opts);
  }
  return dataio::make_phantom(dataio::parse_phantom_kind(c.phantom), c.grid, c.seeds.data).image;
}

}  // namespace detail

/**
 * Load the ground truth, form y from the precise parameter exactly once,
 * then build the shuffled candidate set around that parameter.
 */
inline Problem build_problem(const ExperimentConfig& c) {
  c.validate();
  dataio::ImageSample sample = detail::load_sample(c);
  const std::uint64_t precise_seed = detail::mix_seed(c.seeds.candidates, 0);
  const std::uint64_t shuffle_seed = detail::mix_seed(c.seeds.candidates, 1);
  ad::Tape tape;

  if (c.task == Task::CompressiveSensing) {
    const std::size_t h = sample.height(), w = sample.width(), n = h * w;
    if (c.m >= n) {
      throw ConfigError("m = " + std::to_string(c.m) + " is not below n = " + std::to_string(n) +
                        "; compressive sensing needs m < n");
    }
    const auto precise = forward::sample_gaussian_matrix(c.m, n, precise_seed);
    Tensor y = forward::apply_cs(tape.constant(sample.pixels), precise).value();
    nn::GeneratorConfig g;
    g.output_height = h;
    g.output_width = w;
    g.output_channels = 1;
    g.base_channels = c.base_channels;
    g.num_upsample_blocks = detail::blocks_for(std::min(h, w));
    g.seed = c.seeds.generator;
    g.validate();
    return {forward::build_candidate_set(precise, c.n_candidates, shuffle_seed),
            std::move(y),
            std::move(sample.pixels),
            {},
            {},
            g,
            c.temperature.value_or(static_cast<double>(c.m)),
            std::move(sample.source_id)};
  }

  Tensor pixels = std::move(sample.pixels);
  if (pixels.dim(1) != c.grid || pixels.dim(2) != c.grid) {
    if (pixels.dim(1) > c.grid || pixels.dim(2) > c.grid) {
      throw ConfigError("image " + std::to_string(pixels.dim(1)) + "x" + std::to_string(pixels.dim(2)) +
                        " does not fit the " + std::to_string(c.grid) + " grid");
    }
    pixels = dataio::pad_to(pixels, c.grid, c.grid);
  }
  const std::size_t n = c.grid;
  Tensor amplitude({n, n}), phase({n, n});
  ComplexField object = ComplexField::zeros(n, n);
  for (std::size_t i = 0; i < n * n; ++i) {
    amplitude[i] = ground_truth_amplitude(pixels[i]);
    phase[i] = dataio::kPhantomPhaseScale * pixels[i];
    object.re[i] = amplitude[i] * std::cos(phase[i]);
    object.im[i] = amplitude[i] * std::sin(phase[i]);
  }
  forward::HolographyParam precise{c.wavelength, c.distance, c.pixel_pitch, c.grid};
  precise.validate();
  Tensor y = forward::hologram(ad::constant(tape, object), precise).value();
  nn::GeneratorConfig g;
  g.output_height = n;
  g.output_width = n;
  g.output_channels = 2;
  g.base_channels = c.base_channels;
  g.num_upsample_blocks = detail::blocks_for(n);
  g.seed = c.seeds.generator;
  g.validate();
  return {forward::build_candidate_set(precise, c.n_candidates, shuffle_seed, c.distance_spread),
          std::move(y),
          std::move(pixels),
          std::move(amplitude),
          std::move(phase),
          g,
          c.temperature.value_or(static_cast<double>(n * n)),
          std::move(sample.source_id)};
}

/// Quality of a generator output: the image itself for CS, the phase
/// (and amplitude) of the object for holography.
struct Evaluation {
  metrics::MetricReport primary;
  std::optional<metrics::MetricReport> amplitude;
};

inline Evaluation evaluate_output(const Problem& p, const Tensor& image) {
  if (p.candidates.kind() == forward::ForwardKind::CompressiveSensing) {
    return {metrics::evaluate(image, p.truth), std::nullopt};
  }
  const std::size_t n = p.true_phase.dim(0);
  Tensor amp({n, n}), phase({n, n});
  for (std::size_t i = 0; i < n * n; ++i) {
    amp[i] = image[i];
    phase[i] = 2.0 * std::numbers::pi * image[n * n + i];
  }
  const auto r = metrics::compare_phase(amp, phase, p.true_amplitude, p.true_phase);
  return {r.phase, r.amplitude};
}

/// PSNR only; cheaper than evaluate_output for per-iteration tracking.
inline double output_psnr(const Problem& p, const Tensor& image) {
  if (p.candidates.kind() == forward::ForwardKind::CompressiveSensing) return metrics::psnr(image, p.truth);
  return evaluate_output(p, image).primary.psnr;
}

struct RunResult {
  std::string strategy;
  Tensor image;
  metrics::MetricReport report;
  std::optional<metrics::MetricReport> amplitude;
  std::vector<aggregation::MomentRecord> records;
  std::vector<double> wall_ms;  // per iteration, excluding metric tracking and logging-only passes
  double best_psnr = -std::numeric_limits<double>::infinity();
  long best_iteration = 0;
  bool failed = false;
  long failed_iteration = 0;
  std::string failure;

  double mean_iteration_seconds() const {
    if (wall_ms.empty()) return 0.0;
    double s = 0.0;
    for (double v : wall_ms) s += v;
    return s / 1000.0 / static_cast<double>(wall_ms.size());
  }
  double total_seconds() const { return mean_iteration_seconds() * static_cast<double>(wall_ms.size()); }
};

inline aggregation::Strategy make_strategy(aggregation::StrategyKind kind, const Problem& p, std::size_t fixed = 0) {
  switch (kind) {
    case aggregation::StrategyKind::MomentAggregation: return aggregation::Strategy::moment_aggregation(p.temperature);
    case aggregation::StrategyKind::UniformAggregation: return aggregation::Strategy::uniform();
    case aggregation::StrategyKind::Alternating: return aggregation::Strategy::alternating();
    case aggregation::StrategyKind::Oracle: return aggregation::Strategy::oracle();
    case aggregation::StrategyKind::RandomFixed: return aggregation::Strategy::random_fixed(fixed);
  }
  throw ContractError("unhandled strategy kind");
}

/// Called after every iteration with the freshly appended record.
using ProgressFn = std::function<void(const std::string& strategy, const aggregation::MomentRecord&)>;

/**
 * Train a fresh generator for `iterations` steps with one strategy. A
 * non-finite loss or gradient ends the run early with `failed` set.
 */
inline RunResult run_reconstruction(const ExperimentConfig& c, const Problem& p, const aggregation::Strategy& strategy,
                                    const ProgressFn& progress = {}) {
  RunResult r;
  r.strategy = strategy.name();
  nn::GeneratorState state = nn::init_generator(p.generator);
  double eval_ms = 0.0;
  const aggregation::ImageEvaluator evaluator = [&](const Tensor& image) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = output_psnr(p, image);
    eval_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return v;
  };
  r.records.reserve(static_cast<std::size_t>(c.iterations));
  r.wall_ms.reserve(static_cast<std::size_t>(c.iterations));
  for (long it = 0; it < c.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.records.push_back(aggregation::ma_train_step(state, p.measurement, p.candidates, strategy, c.lr, evaluator));
    } catch (const DivergenceError& e) {
      r.failed = true;
      r.failed_iteration = e.iteration();
      r.failure = e.what();
      break;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const auto& rec = r.records.back();
    r.wall_ms.push_back(ms - eval_ms - rec.monitor_ms);
    if (rec.psnr && *rec.psnr > r.best_psnr) {
      r.best_psnr = *rec.psnr;
      r.best_iteration = rec.iteration;
    }
    if (progress) progress(r.strategy, rec);
  }
  r.image = aggregation::generate_image(state);
  const Evaluation e = evaluate_output(p, r.image);
  r.report = e.primary;
  r.amplitude = e.amplitude;
  return r;
}

inline RunResult run_reconstruction(const ExperimentConfig& c, const aggregation::Strategy& strategy) {
  return run_reconstruction(c, build_problem(c), strategy);
}

/// One row of the comparison table.
struct SummaryRow {
  std::string strategy;
  metrics::MetricReport report;
  std::optional<metrics::MetricReport> amplitude;
  double delta_psnr = 0.0;  // oracle - strategy
  double delta_ssim = 0.0;
  double mean_iteration_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<std::size_t> runs;  // indices into Comparison::runs
  bool failed = false;
};

struct Comparison {
  ExperimentConfig config;
  Problem problem;
  std::vector<RunResult> runs;
  std::vector<SummaryRow> rows;

  const SummaryRow* row(std::string_view strategy) const {
    for (const auto& r : rows)
      if (r.strategy == strategy) return &r;
    return nullptr;
  }
  bool any_failed() const {
    for (const auto& r : runs)
      if (r.failed) return true;
    return false;
  }
};

/**
 * Run every requested strategy on one shared problem. "random" expands to
 * one fixed-candidate run per index and is summarized by the mean. Delta
 * columns need an oracle row; they are computed against a separate oracle
 * run when "oracle" was not requested.
 */
inline Comparison run_comparison(const ExperimentConfig& c, const ProgressFn& progress = {}) {
  Comparison cmp{c, build_problem(c), {}, {}};
  const Problem& p = cmp.problem;

  auto add_row = [&](const std::string& name, std::vector<std::size_t> indices) {
    SummaryRow row;
    row.strategy = name;
    row.runs = indices;
    const double k = static_cast<double>(indices.size());
    bool have_amp = true;
    metrics::MetricReport amp{0.0, 0.0};
    for (std::size_t i : indices) {
      const RunResult& r = cmp.runs[i];
      row.report.psnr += r.report.psnr / k;
      row.report.ssim += r.report.ssim / k;
      if (r.amplitude) {
        amp.psnr += r.amplitude->psnr / k;
        amp.ssim += r.amplitude->ssim / k;
      } else {
        have_amp = false;
      }
      row.mean_iteration_seconds += r.mean_iteration_seconds() / k;
      row.total_seconds += r.total_seconds() / k;
      row.failed = row.failed || r.failed;
    }
    if (have_amp) row.amplitude = amp;
    cmp.rows.push_back(std::move(row));
  };

  bool oracle_requested = false;
  for (const std::string& name : c.strategies) {
    const auto kind = aggregation::parse_strategy_kind(name);
    if (kind == aggregation::StrategyKind::Oracle) oracle_requested = true;
    if (kind == aggregation::StrategyKind::RandomFixed) {
      std::vector<std::size_t> indices;
      for (std::size_t i = 0; i < p.candidates.size(); ++i) {
        cmp.runs.push_back(run_reconstruction(c, p, make_strategy(kind, p, i), progress));
        indices.push_back(cmp.runs.size() - 1);
      }
      add_row("random", indices);
    } else {
      cmp.runs.push_back(run_reconstruction(c, p, make_strategy(kind, p), progress));
      add_row(std::string(aggregation::strategy_kind_name(kind)), {cmp.runs.size() - 1});
    }
  }

  std::optional<metrics::MetricReport> oracle;
  if (const SummaryRow* o = cmp.row("oracle")) {
    oracle = o->report;
  } else if (!oracle_requested) {
    oracle = run_reconstruction(c, p, aggregation::Strategy::oracle()).report;
  }
  for (auto& row : cmp.rows) {
    if (row.strategy == "oracle") {
      row.delta_psnr = row.delta_ssim = 0.0;
    } else if (oracle) {
      row.delta_psnr = oracle->psnr - row.report.psnr;
      row.delta_ssim = oracle->ssim - row.report.ssim;
    }
  }
  return cmp;
}

}  // namespace marecon::harness
