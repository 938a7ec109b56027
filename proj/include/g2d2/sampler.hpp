#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "g2d2/decoder.hpp"
#include "g2d2/objective.hpp"
#include "g2d2/operators.hpp"
#include "g2d2/prior.hpp"
#include "g2d2/schedule.hpp"

namespace g2d2 {

enum class Variant { kStar, kMarkov };

struct SolverConfig {
  int T = 100;
  int inner_iters = 30;
  double forget_gamma = 0.3;  // in [0, 1]
  double tau = 1.0;
  double eta_kl_base = 0.0003;
  double lr_base = 0.1;
  double lambda_lr = 0.0;
  double lambda_kl = 0.0;
  int n_mc = 1;
  std::uint64_t seed = 0;
  Variant variant = Variant::kStar;
  bool record_trajectory = true;
  bool carry_optimizer_state = false;  // keep RAdam moments across steps

  void validate() const;
};

// Test harness for the star-vs-Markov ablation: overwrite one dimension with
// a wrong unmasked token right after z_{at_t} is sampled.
struct ErrorInjection {
  int at_t;   // trajectory time index receiving the overwrite (usually T-1)
  int dim;    // dimension to corrupt
  int token;  // forced unmasked token
};

// One diffusion step's record: the state that step conditioned on, the
// optimized variational parameters and the inner loss curve.
struct StepRecord {
  int t = 0;
  TokenField z_t;           // state at time t (input to this step)
  CategoricalField alpha;   // optimized alpha_t, row-normalized
  std::vector<double> losses;
  double effective_lr = 0.0;
  double effective_eta_kl = 0.0;
  // Diagnostics for the reverse draw of z_{t-1}, counted before any error
  // injection: MASK draws over all dimensions, and re-masking events
  // (dimension unmasked at t, MASK at t-1).
  int mask_draws = 0;
  int remask_events = 0;
};

struct Trajectory {
  std::vector<StepRecord> steps;  // ordered t = T .. 1
  TokenField z0;

  int total_remask_events() const;
};

struct SolveResult {
  TokenField z0;
  Eigen::VectorXd x0;
  Trajectory trajectory;
};

// Forget-coefficient initialization of the step-t logits:
// gamma*log(prev_alpha) + (1-gamma)*log(prior_out), logs floored; without a
// previous step (t = T) just log(prior_out).
Eigen::MatrixXd init_alpha(const std::optional<CategoricalField>& prev_alpha,
                           const CategoricalField& prior_out, double gamma);

// Gradient-guided discrete diffusion with the star-shaped reverse kernel
// (cfg.variant must be kStar).
SolveResult g2d2_solve(const SolverConfig& cfg, const DenoisingPrior& prior,
                       const TransitionSchedule& s, const Codebook& cb,
                       const Decoder& dec, const LinearProblem& prob, Rng& rng,
                       const std::optional<ErrorInjection>& inject = {});

// Variant drawing z_{t-1} from the Markov-noise-process posterior mixed over
// the optimized alpha (cfg.variant must be kMarkov). Never re-masks.
SolveResult g2d2_markov_solve(const SolverConfig& cfg,
                              const DenoisingPrior& prior,
                              const TransitionSchedule& s, const Codebook& cb,
                              const Decoder& dec, const LinearProblem& prob,
                              Rng& rng,
                              const std::optional<ErrorInjection>& inject = {});

void write_trajectory(std::ostream& os, const Trajectory& traj);

}  // namespace g2d2
