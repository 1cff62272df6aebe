// Moment aggregation against the oracle on one digit, with a candidate set
// of random measurement matrices of which only one produced y.
//
//   ma_compressive_sensing [sample] [iterations]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "marecon/harness/experiment.hpp"

#ifndef MARECON_DATA_DIR
#define MARECON_DATA_DIR "data"
#endif

int main(int argc, char** argv) {
  using namespace marecon;

  auto c = harness::ExperimentConfig::for_task(harness::Task::CompressiveSensing);
  c.idx_path = std::string(MARECON_DATA_DIR) + "/digits28-idx3-ubyte";
  c.sample = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 0;
  c.iterations = argc > 2 ? std::strtol(argv[2], nullptr, 10) : 600;
  c.m = 200;
  c.n_candidates = 5;

  try {
    const harness::Problem p = harness::build_problem(c);
    std::printf("%s, m = %zu, %zu candidates, precise matrix at index %zu\n", p.source_id.c_str(), c.m,
                p.candidates.size(), p.candidates.oracle_index());

    for (const auto& strategy : {aggregation::Strategy::oracle(), aggregation::Strategy::moment_aggregation(p.temperature)}) {
      const auto run = harness::run_reconstruction(c, p, strategy, [&](const std::string& name, const auto& rec) {
        if (rec.iteration % 100 != 0) return;
        std::printf("  %-6s it %4ld  loss %9.4f  psnr %6.2f  weight on precise %.3f\n", name.c_str(), rec.iteration,
                    rec.loss, rec.psnr.value_or(0.0), rec.weights[p.candidates.oracle_index()]);
      });
      std::printf("%-6s final PSNR %.2f dB, SSIM %.3f, %.2f ms/iteration\n", run.strategy.c_str(), run.report.psnr,
                  run.report.ssim, run.mean_iteration_seconds() * 1e3);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
