#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"
#include "marecon/dataio/image.hpp"
#include "marecon/errors.hpp"
#include "marecon/harness/config.hpp"
#include "marecon/harness/experiment.hpp"

namespace marecon::harness {

/// Finite numbers as numbers, infinities as the strings "inf"/"-inf".
inline nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline nlohmann::json metric_json(const metrics::MetricReport& m) { return {{"psnr", number(m.psnr)}, {"ssim", number(m.ssim)}}; }

inline nlohmann::json summary_json(const Comparison& cmp) {
  nlohmann::json j;
  j["config"] = to_json(cmp.config);
  j["source"] = cmp.problem.source_id;
  j["oracle_index"] = cmp.problem.candidates.oracle_index();
  j["temperature"] = cmp.problem.temperature;
  j["metric"] = cmp.problem.candidates.kind() == forward::ForwardKind::Holography ? "phase" : "image";
  nlohmann::json rows = nlohmann::json::array();
  for (const SummaryRow& row : cmp.rows) {
    nlohmann::json r;
    r["strategy"] = row.strategy;
    r["psnr"] = number(row.report.psnr);
    r["ssim"] = number(row.report.ssim);
    r["delta_psnr"] = number(row.delta_psnr);
    r["delta_ssim"] = number(row.delta_ssim);
    if (row.amplitude) r["amplitude"] = metric_json(*row.amplitude);
    r["mean_iteration_ms"] = row.mean_iteration_seconds * 1000.0;
    r["total_seconds"] = row.total_seconds;
    r["failed"] = row.failed;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i : row.runs) {
      const RunResult& run = cmp.runs[i];
      nlohmann::json e{{"name", run.strategy},
                       {"final", metric_json(run.report)},
                       {"best_psnr", number(run.best_psnr)},
                       {"best_iteration", run.best_iteration},
                       {"iterations_run", run.records.size()}};
      if (run.failed) e["failure"] = {{"iteration", run.failed_iteration}, {"message", run.failure}};
      if (!run.records.empty()) {
        e["final_weights"] = run.records.back().weights;
        e["final_selected"] = run.records.back().selected;
      }
      runs.push_back(std::move(e));
    }
    r["runs"] = std::move(runs);
    rows.push_back(std::move(r));
  }
  j["results"] = std::move(rows);
  return j;
}

/// Rows: one per (run, iteration); columns as in the header line.
inline void write_convergence_csv(const Comparison& cmp, std::ostream& out) {
  const std::size_t oracle = cmp.problem.candidates.oracle_index();
  out << "strategy,iteration,loss,f_min,f_oracle,omega_oracle,psnr,wall_ms\n";
  for (const RunResult& run : cmp.runs) {
    for (std::size_t k = 0; k < run.records.size(); ++k) {
      const auto& rec = run.records[k];
      const double f_min = *std::min_element(rec.losses.begin(), rec.losses.end());
      out << run.strategy << ',' << rec.iteration << ',' << csv_number(rec.loss) << ',' << csv_number(f_min) << ','
          << csv_number(rec.losses[oracle]) << ',' << csv_number(rec.weights[oracle]) << ','
          << (rec.psnr ? csv_number(*rec.psnr) : "") << ',' << csv_number(k < run.wall_ms.size() ? run.wall_ms[k] : 0.0)
          << '\n';
    }
  }
}

/// Per-iteration weights of the moment-aggregation run.
inline void write_weights_csv(const RunResult& run, std::ostream& out) {
  const std::size_t nc = run.records.empty() ? 0 : run.records.front().weights.size();
  out << "iteration";
  for (std::size_t i = 0; i < nc; ++i) out << ",omega_" << i;
  out << '\n';
  for (const auto& rec : run.records) {
    out << rec.iteration;
    for (double w : rec.weights) out << ',' << std::setprecision(17) << w;
    out << '\n';
  }
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void save_result_images(const Problem& p, const Tensor& image, const std::filesystem::path& dir,
                               const std::string& stem) {
  if (p.candidates.kind() == forward::ForwardKind::CompressiveSensing) {
    dataio::save_png(image, (dir / (stem + ".png")).string());
    return;
  }
  const std::size_t n = image.dim(1);
  Tensor amp({n, n}), phase({n, n});
  for (std::size_t i = 0; i < n * n; ++i) {
    amp[i] = image[i];
    phase[i] = image[n * n + i];
  }
  dataio::save_png(amp, (dir / (stem + "_amplitude.png")).string());
  dataio::save_png(phase, (dir / (stem + "_phase.png")).string());
}

}  // namespace detail

/**
 * summary.json, convergence.csv, weights.csv (when MA ran), the ground
 * truth and one reconstruction per run as PNG.
 */
inline void write_outputs(const Comparison& cmp, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  const fs::path root(dir);

  {
    auto out = detail::open_out(root / "summary.json");
    out << summary_json(cmp).dump(2) << '\n';
  }
  {
    auto out = detail::open_out(root / "convergence.csv");
    write_convergence_csv(cmp, out);
  }
  for (const RunResult& run : cmp.runs) {
    if (run.strategy == "ma") {
      auto out = detail::open_out(root / "weights.csv");
      write_weights_csv(run, out);
    }
    detail::save_result_images(cmp.problem, run.image, root, run.strategy);
  }
  if (cmp.problem.candidates.kind() == forward::ForwardKind::CompressiveSensing) {
    dataio::save_png(cmp.problem.truth, (root / "truth.png").string());
  } else {
    Tensor phase = cmp.problem.true_phase;
    for (double& v : phase.data()) v /= 2.0 * std::numbers::pi;
    dataio::save_png(cmp.problem.true_amplitude, (root / "truth_amplitude.png").string());
    dataio::save_png(phase, (root / "truth_phase.png").string());
  }
  for (const auto& file : {"summary.json", "convergence.csv"}) {
    if (!fs::exists(root / file)) throw IoError("failed to write " + (root / file).string());
  }
}

}  // namespace marecon::harness
