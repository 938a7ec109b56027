#pragma once

#include <Eigen/Dense>

#include "g2d2/rng.hpp"
#include "g2d2/types.hpp"

namespace g2d2 {

struct ScheduleEndpoints {
  double alpha_bar_1;
  double alpha_bar_T;
  double gamma_bar_1;
  double gamma_bar_T;
};

// Mask-absorbing transition schedule over T steps and K unmasked tokens.
//
// Stored per step t (1-based):
//   alpha_bar(t)  cumulative keep-probability of the original token
//   beta_bar(t)   cumulative uniform-leak probability onto each other token
//   gamma_bar(t)  cumulative MASK probability
// with alpha_bar + K*beta_bar + gamma_bar == 1 exactly. beta_bar comes from
// the (K+1)-divisor formula applied to the linearly interpolated endpoints;
// the residual mass that formula leaves over is folded into gamma_bar when
// the schedule is built (see build_schedule). alpha_bar(0) = 1 and
// gamma_bar(0) = 0 describe the clean state.
class TransitionSchedule {
 public:
  TransitionSchedule(int T, int K, Eigen::VectorXd alpha_bar,
                     Eigen::VectorXd beta_bar, Eigen::VectorXd gamma_bar,
                     double mass_residual)
      : T_(T),
        K_(K),
        alpha_bar_(std::move(alpha_bar)),
        beta_bar_(std::move(beta_bar)),
        gamma_bar_(std::move(gamma_bar)),
        mass_residual_(mass_residual) {}

  int num_steps() const { return T_; }
  int codebook_size() const { return K_; }

  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[t - 1]; }
  double beta_bar(int t) const { return t == 0 ? 0.0 : beta_bar_[t - 1]; }
  double gamma_bar(int t) const { return t == 0 ? 0.0 : gamma_bar_[t - 1]; }

  // Largest per-step mass deficit absorbed into the MASK entry at build time.
  double mass_residual() const { return mass_residual_; }

  // True when the terminal distribution is effectively all-MASK, the regime
  // the samplers assume.
  bool terminal_effectively_masked() const { return gamma_bar(T_) >= 0.99; }

  void check_step(int t) const;

 private:
  int T_;
  int K_;
  Eigen::VectorXd alpha_bar_;
  Eigen::VectorXd beta_bar_;
  Eigen::VectorXd gamma_bar_;
  double mass_residual_;
};

// Builds the schedule by linear interpolation of alpha_bar and gamma_bar
// between their endpoints. Rejects endpoints outside (0,1), non-monotone
// endpoint pairs (for T >= 2), and any interpolated step whose leak
// probability would be non-positive.
TransitionSchedule build_schedule(int T, int K, const ScheduleEndpoints& ep);

// Closed-form distribution of z_t given a clean token: probability
// alpha_bar+beta_bar on the original token, beta_bar on each other unmasked
// token, gamma_bar on MASK. Valid for t in [0, T]; t = 0 returns the token
// itself. z0_token must be unmasked.
Eigen::VectorXd cumulative_forward_dist(const TransitionSchedule& s, int t,
                                        int z0_token);

// Per-step transition kernel Q_t as a column-stochastic (K+1)x(K+1) matrix:
// entry (i, j) is the probability of moving to state i+1 from state j+1.
// Per-step parameters are recovered from the cumulative ones as
//   alpha_t = alpha_bar(t)/alpha_bar(t-1)
//   gamma_t = 1 - (1-gamma_bar(t))/(1-gamma_bar(t-1))
//   beta_t  = (1 - alpha_t - gamma_t)/K
// so that Q_t ... Q_1 reproduces cumulative_forward_dist exactly. The MASK
// column is the MASK one-hot (absorbing state).
Eigen::MatrixXd single_step_matrix(const TransitionSchedule& s, int t);

// Per-step (alpha_t, beta_t, gamma_t) recovered as above; exposed for tests
// and for the Markov posterior.
struct StepParams {
  double alpha;
  double beta;
  double gamma;
};
StepParams per_step_params(const TransitionSchedule& s, int t);

// Samples z_t ~ q(z_t | z_0) dimension-wise from the closed form.
TokenField sample_zt_given_z0(const TransitionSchedule& s, int t,
                              const TokenField& z0, Rng& rng);

// Markov-noise-process posterior q(z_{t-1} | z_0, z_t) over the K+1 states,
// the normalized product of the step-t forward term and the cumulative term
// at t-1 divided by the cumulative term at t. Requires 2 <= t <= T and an
// unmasked z0_token. Never re-masks: if z_t is unmasked the MASK entry is 0.
Eigen::VectorXd markov_posterior(const TransitionSchedule& s, int t,
                                 int z0_token, int zt_token);

// Star-shaped reverse kernel: for each dimension i the mixture
//   sum_k alpha(i,k) q(z_{t-1} | z_0 = k),
// returned as a d_z x (K+1) matrix of row distributions. For t = 1 the
// "t-1 = 0 kernel" is the clean draw, i.e. alpha itself with zero MASK mass.
// Every row carries MASK mass exactly gamma_bar(t-1) regardless of alpha.
Eigen::MatrixXd star_reverse_kernel(const TransitionSchedule& s, int t,
                                    const CategoricalField& alpha);

}  // namespace g2d2
