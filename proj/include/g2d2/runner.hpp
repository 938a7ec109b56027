#pragma once

#include <iosfwd>
#include <string>

#include "g2d2/config.hpp"

namespace g2d2 {

// One CSV row per (seed, variant). Column order is fixed:
//   seed,variant,T,inner_iters,gamma,eta_kl_base,lr_base,
//   psnr_db,mse,token_accuracy,final_loss,wall_ms
// Rows are ordered by seed (then variant); wall_ms is the only column that
// may differ between identical runs.
extern const char* kCsvHeader;

struct RunOptions {
  int workers = 0;          // 0: G2D2_WORKERS env var, else hardware threads
  std::uint64_t seed_offset = 0;
  std::string out_override;  // overrides config's out path when non-empty
};

// Runs the configured experiment over all seeds and writes the CSV.
// Returns the number of rows written.
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts,
                   std::ostream& log);

// Built-in verification suites on tiny fixed instances; each prints what it
// measured and returns true when every tolerance holds.
bool verify_theorem1(std::ostream& os);
bool verify_lemma_marginal(std::ostream& os);
bool verify_lemma_decomp(std::ostream& os);
bool verify_gradients(std::ostream& os);
bool verify_schedule(std::ostream& os);

// Runs the named suite; returns the process exit status (0 on pass).
int run_verify(const std::string& subcommand, std::ostream& os);

}  // namespace g2d2
