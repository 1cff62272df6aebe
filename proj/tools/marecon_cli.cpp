// marecon: reconstruct an image under forward-model uncertainty and compare
// aggregation strategies.
//
//   marecon cs   --m 200 --n-candidates 10 --strategy ma --strategy oracle --out runs/cs
//   marecon holo --phantom text-like --iterations 5000 --out runs/holo
//   marecon cs   --config experiment.json

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "marecon/errors.hpp"
#include "marecon/harness/config.hpp"
#include "marecon/harness/experiment.hpp"
#include "marecon/harness/output.hpp"

#ifndef MARECON_DATA_DIR
#define MARECON_DATA_DIR "data"
#endif

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Flags {
  marecon::harness::ExperimentConfig config;
  std::string config_file;
  std::vector<std::string> strategies;
  double temperature = 0.0;
  long log_every = 100;
};

void add_common(CLI::App* cmd, Flags& f) {
  auto& c = f.config;
  cmd->add_option("--config", f.config_file, "JSON config; its keys override flags")->check(CLI::ExistingFile);
  cmd->add_option("--dataset", c.dataset, "mnist | image | phantom")->capture_default_str();
  cmd->add_option("--idx-path", c.idx_path, "IDX image file for dataset mnist");
  cmd->add_option("--image-path", c.image_path, "8-bit grayscale PNG or PGM for dataset image");
  cmd->add_option("--sample", c.sample, "image index within the IDX file")->capture_default_str();
  cmd->add_option("--n-candidates", c.n_candidates, "size of the candidate set")->capture_default_str();
  cmd->add_option("--strategy", f.strategies, "ma | uniform | alternating | oracle | random (repeatable)");
  cmd->add_option("--iterations", c.iterations, "training iterations per strategy")->capture_default_str();
  cmd->add_option("--lr", c.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--data-seed", c.seeds.data, "phantom seed")->capture_default_str();
  cmd->add_option("--candidate-seed", c.seeds.candidates, "precise parameter and candidate draws")->capture_default_str();
  cmd->add_option("--generator-seed", c.seeds.generator, "generator initialization")->capture_default_str();
  cmd->add_option("--base-channels", c.base_channels, "generator width")->capture_default_str();
  cmd->add_option("--temperature", f.temperature, "MA temperature (default: number of measurements)");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--log-every", f.log_every, "progress line every N iterations, 0 for none")->capture_default_str();
}

void print_table(const marecon::harness::Comparison& cmp) {
  const bool holo = cmp.problem.candidates.kind() == marecon::forward::ForwardKind::Holography;
  std::printf("%-12s %10s %8s %10s %10s %12s%s\n", "strategy", holo ? "phasePSNR" : "PSNR", "SSIM", "dPSNR", "dSSIM",
              "ms/iter", holo ? "    ampPSNR" : "");
  for (const auto& row : cmp.rows) {
    std::printf("%-12s %10.3f %8.4f %10.3f %10.4f %12.2f", row.strategy.c_str(), row.report.psnr, row.report.ssim,
                row.delta_psnr, row.delta_ssim, row.mean_iteration_seconds * 1000.0);
    if (row.amplitude) std::printf(" %10.3f", row.amplitude->psnr);
    std::printf("%s\n", row.failed ? "  (diverged)" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-aggregation reconstruction with an untrained generator"};
  app.require_subcommand(1);

  Flags cs, holo;
  cs.config = marecon::harness::ExperimentConfig::for_task(marecon::harness::Task::CompressiveSensing);
  holo.config = marecon::harness::ExperimentConfig::for_task(marecon::harness::Task::Holography);

  CLI::App* cs_cmd = app.add_subcommand("cs", "Gaussian compressive sensing");
  add_common(cs_cmd, cs);
  cs_cmd->add_option("--m", cs.config.m, "number of measurements")->capture_default_str();

  CLI::App* holo_cmd = app.add_subcommand("holo", "in-line holography phase retrieval");
  add_common(holo_cmd, holo);
  holo_cmd->add_option("--phantom", holo.config.phantom, "blobs | rings | text-like")->capture_default_str();
  holo_cmd->add_option("--wavelength", holo.config.wavelength, "micrometers")->capture_default_str();
  holo_cmd->add_option("--distance", holo.config.distance, "precise propagation distance, micrometers")
      ->capture_default_str();
  holo_cmd->add_option("--pixel-pitch", holo.config.pixel_pitch, "micrometers")->capture_default_str();
  holo_cmd->add_option("--distance-spread", holo.config.distance_spread, "candidate distances z +- spread")
      ->capture_default_str();
  holo_cmd->add_option("--grid", holo.config.grid, "grid size N (power of two)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Flags& f = cs_cmd->parsed() ? cs : holo;
  const auto expected_task = cs_cmd->parsed() ? marecon::harness::Task::CompressiveSensing
                                              : marecon::harness::Task::Holography;
  try {
    if (!f.strategies.empty()) f.config.strategies = f.strategies;
    if (f.temperature > 0.0) f.config.temperature = f.temperature;
    if (!f.config_file.empty()) marecon::harness::apply_json(marecon::harness::read_json_file(f.config_file), f.config);
    if (f.config.task != expected_task) throw marecon::ConfigError("config file task does not match the subcommand");
    if (f.config.dataset == "mnist" && f.config.idx_path.empty()) {
      f.config.idx_path = std::string(MARECON_DATA_DIR) + "/digits28-idx3-ubyte";
    }
    f.config.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  marecon::harness::ProgressFn progress;
  if (f.log_every > 0) {
    progress = [&](const std::string& name, const marecon::aggregation::MomentRecord& r) {
      if (r.iteration % f.log_every == 0 || r.iteration == 1) {
        std::fprintf(stderr, "[%s] it %ld loss %.6g psnr %.3f\n", name.c_str(), r.iteration, r.loss,
                     r.psnr.value_or(0.0));
      }
    };
  }

  try {
    const auto cmp = marecon::harness::run_comparison(f.config, progress);
    marecon::harness::write_outputs(cmp, f.config.out);
    print_table(cmp);
    std::printf("outputs written to %s\n", f.config.out.c_str());
    if (cmp.any_failed()) {
      for (const auto& run : cmp.runs)
        if (run.failed) std::cerr << "diverged: " << run.strategy << ": " << run.failure << '\n';
      return kExitDivergence;
    }
  } catch (const marecon::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const marecon::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const marecon::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
