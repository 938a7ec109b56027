#include "g2d2/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace g2d2 {

void TransitionSchedule::check_step(int t) const {
  if (t < 1 || t > T_)
    throw std::invalid_argument("step t=" + std::to_string(t) +
                                " outside [1, " + std::to_string(T_) + "]");
}

namespace {

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

TransitionSchedule build_schedule(int T, int K, const ScheduleEndpoints& ep) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (K < 2) throw std::invalid_argument("K must be >= 2");
  if (!in_open_unit(ep.alpha_bar_1) || !in_open_unit(ep.alpha_bar_T) ||
      !in_open_unit(ep.gamma_bar_1) || !in_open_unit(ep.gamma_bar_T))
    throw std::invalid_argument("schedule endpoints must lie in (0, 1)");
  if (T >= 2 && !(ep.alpha_bar_1 > ep.alpha_bar_T))
    throw std::invalid_argument("alpha_bar must decrease: alpha_bar_1 > alpha_bar_T");
  if (T >= 2 && !(ep.gamma_bar_1 < ep.gamma_bar_T))
    throw std::invalid_argument("gamma_bar must increase: gamma_bar_1 < gamma_bar_T");

  Eigen::VectorXd alpha_bar(T), beta_bar(T), gamma_bar(T);
  double max_residual = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double w = (T == 1) ? 0.0 : static_cast<double>(t - 1) / (T - 1);
    const double a = ep.alpha_bar_1 + w * (ep.alpha_bar_T - ep.alpha_bar_1);
    const double g_raw = ep.gamma_bar_1 + w * (ep.gamma_bar_T - ep.gamma_bar_1);
    const double slack = 1.0 - a - g_raw;
    if (slack <= 0.0)
      throw std::invalid_argument(
          "endpoints yield non-positive leak probability at t=" +
          std::to_string(t));
    const double b = slack / (K + 1);
    alpha_bar[t - 1] = a;
    beta_bar[t - 1] = b;
    // The (K+1) divisor leaves a mass deficit of exactly b per state vector;
    // fold it into the MASK entry so alpha + K*beta + gamma == 1.
    gamma_bar[t - 1] = g_raw + b;
    max_residual = std::max(max_residual, b);
  }
  return TransitionSchedule(T, K, std::move(alpha_bar), std::move(beta_bar),
                            std::move(gamma_bar), max_residual);
}

Eigen::VectorXd cumulative_forward_dist(const TransitionSchedule& s, int t,
                                        int z0_token) {
  const int K = s.codebook_size();
  if (t < 0 || t > s.num_steps())
    throw std::invalid_argument("step t outside [0, T]");
  if (z0_token < 1 || z0_token > K)
    throw std::invalid_argument("forward process starts from an unmasked token");
  Eigen::VectorXd p = Eigen::VectorXd::Constant(K + 1, s.beta_bar(t));
  p[token_index(z0_token)] += s.alpha_bar(t);
  p[K] = s.gamma_bar(t);
  return p;
}

StepParams per_step_params(const TransitionSchedule& s, int t) {
  s.check_step(t);
  const double alpha = s.alpha_bar(t) / s.alpha_bar(t - 1);
  const double gamma = 1.0 - (1.0 - s.gamma_bar(t)) / (1.0 - s.gamma_bar(t - 1));
  const double beta = (1.0 - alpha - gamma) / s.codebook_size();
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
    throw std::domain_error("recovered per-step parameters outside [0, 1] at t=" +
                            std::to_string(t));
  return {alpha, beta, gamma};
}

Eigen::MatrixXd single_step_matrix(const TransitionSchedule& s, int t) {
  const int K = s.codebook_size();
  const StepParams p = per_step_params(s, t);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int j = 0; j < K; ++j) {
    for (int i = 0; i < K; ++i) Q(i, j) = p.beta;
    Q(j, j) = p.alpha + p.beta;
    Q(K, j) = p.gamma;
  }
  Q(K, K) = 1.0;  // MASK is absorbing
  return Q;
}

TokenField sample_zt_given_z0(const TransitionSchedule& s, int t,
                              const TokenField& z0, Rng& rng) {
  const int K = s.codebook_size();
  if (!fully_unmasked(z0, K))
    throw std::invalid_argument("z0 must be fully unmasked");
  TokenField zt;
  zt.tokens.resize(z0.tokens.size());
  for (int i = 0; i < z0.size(); ++i) {
    const Eigen::VectorXd p = cumulative_forward_dist(s, t, z0[i]);
    zt[i] = rng.categorical(p) + 1;
  }
  return zt;
}

Eigen::VectorXd markov_posterior(const TransitionSchedule& s, int t,
                                 int z0_token, int zt_token) {
  const int K = s.codebook_size();
  if (t < 2 || t > s.num_steps())
    throw std::invalid_argument("markov_posterior requires 2 <= t <= T");
  if (z0_token < 1 || z0_token > K)
    throw std::invalid_argument("z0 must be unmasked");
  if (zt_token < 1 || zt_token > K + 1)
    throw std::invalid_argument("z_t token out of range");

  const Eigen::MatrixXd Q = single_step_matrix(s, t);
  const Eigen::VectorXd prev = cumulative_forward_dist(s, t - 1, z0_token);
  const double denom = cumulative_forward_dist(s, t, z0_token)[token_index(zt_token)];
  if (denom <= 0.0)
    throw std::domain_error("z_t unreachable from z0 under this schedule");

  Eigen::VectorXd post(K + 1);
  const int zt = token_index(zt_token);
  for (int m = 0; m <= K; ++m) post[m] = Q(zt, m) * prev[m] / denom;
  return post;
}

Eigen::MatrixXd star_reverse_kernel(const TransitionSchedule& s, int t,
                                    const CategoricalField& alpha) {
  const int K = s.codebook_size();
  if (t < 1 || t > s.num_steps())
    throw std::invalid_argument("step t outside [1, T]");
  if (alpha.cols() != K)
    throw std::invalid_argument("alpha must have K columns");
  check_categorical_field(alpha, 1e-8);

  const int d_z = static_cast<int>(alpha.rows());
  Eigen::MatrixXd kernel(d_z, K + 1);
  if (t == 1) {
    kernel.leftCols(K) = alpha;
    kernel.col(K).setZero();
    return kernel;
  }
  // Mixture over clean tokens of the closed-form row:
  //   beta_bar + alpha_bar * alpha(i, .) on unmasked entries,
  //   gamma_bar on MASK, for every alpha.
  kernel.leftCols(K) =
      (s.alpha_bar(t - 1) * alpha).array() + s.beta_bar(t - 1);
  kernel.col(K).setConstant(s.gamma_bar(t - 1));
  return kernel;
}

}  // namespace g2d2
