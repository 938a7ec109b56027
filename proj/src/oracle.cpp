#include "g2d2/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace g2d2 {

namespace {

// Log floor for enumerated probabilities inside oracle KL terms; only guards
// exact zeros so degenerate inputs stay finite.
constexpr double kOracleLogFloor = -700.0;

double safe_log(double p) {
  return p > 0.0 ? std::max(std::log(p), kOracleLogFloor) : kOracleLogFloor;
}

std::int64_t pow_int(int base, int exp) {
  std::int64_t n = 1;
  for (int i = 0; i < exp; ++i) n *= base;
  return n;
}

// Noisy-state index <-> token field over K+1 states (digits 0..K).
TokenField decode_state(std::int64_t index, int K, int d_z) {
  TokenField z;
  z.tokens.assign(d_z, 1);
  for (int i = d_z - 1; i >= 0; --i) {
    z[i] = static_cast<int>(index % (K + 1)) + 1;
    index /= K + 1;
  }
  return z;
}

// log q(y | z0) table over all clean fields.
Eigen::VectorXd loglik_table(const TabularJointPrior& prior, const Codebook& cb,
                             const Decoder& dec, const LinearProblem& prob) {
  const std::int64_t n = prior.support_size();
  Eigen::VectorXd ll(n);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z0 =
        decode_token_field(idx, prior.codebook_size(), prior.token_dims());
    ll[idx] = log_likelihood(prob, hard_decode(cb, dec, z0));
  }
  return ll;
}

// F(t): (K+1)^{d_z} x K^{d_z} matrix of q(z_t = state | z_0 = field).
Eigen::MatrixXd forward_field_matrix(const TransitionSchedule& s, int t,
                                     int d_z) {
  const int K = s.codebook_size();
  Eigen::MatrixXd per_token(K + 1, K);  // (state, clean token)
  for (int k = 1; k <= K; ++k) per_token.col(k - 1) = cumulative_forward_dist(s, t, k);
  const std::int64_t n_state = pow_int(K + 1, d_z);
  const std::int64_t n_clean = pow_int(K, d_z);
  Eigen::MatrixXd F(n_state, n_clean);
  for (std::int64_t sidx = 0; sidx < n_state; ++sidx) {
    const TokenField zt = decode_state(sidx, K, d_z);
    for (std::int64_t cidx = 0; cidx < n_clean; ++cidx) {
      const TokenField z0 = decode_token_field(cidx, K, d_z);
      double p = 1.0;
      for (int i = 0; i < d_z; ++i)
        p *= per_token(token_index(zt[i]), token_index(z0[i]));
      F(sidx, cidx) = p;
    }
  }
  return F;
}

// Columns are the exact conditionals q(z0 | z_t, y) (or q(z0 | z_t) when
// with_likelihood is false), one per noisy state.
Eigen::MatrixXd conditional_matrix(const Eigen::MatrixXd& F,
                                   const Eigen::VectorXd& prior_probs,
                                   const Eigen::VectorXd& ll,
                                   bool with_likelihood) {
  const std::int64_t n_state = F.rows();
  const std::int64_t n_clean = F.cols();
  Eigen::MatrixXd R(n_clean, n_state);
  for (std::int64_t sidx = 0; sidx < n_state; ++sidx) {
    Eigen::VectorXd logw(n_clean);
    double logmax = -std::numeric_limits<double>::infinity();
    for (std::int64_t cidx = 0; cidx < n_clean; ++cidx) {
      double lw = safe_log(F(sidx, cidx)) + safe_log(prior_probs[cidx]);
      if (with_likelihood) lw += ll[cidx];
      logw[cidx] = lw;
      logmax = std::max(logmax, lw);
    }
    double total = 0.0;
    for (std::int64_t cidx = 0; cidx < n_clean; ++cidx) {
      R(cidx, sidx) = std::exp(logw[cidx] - logmax);
      total += R(cidx, sidx);
    }
    R.col(sidx) /= total;
  }
  return R;
}

// Product-form probability of each clean field under mean-field rows.
Eigen::VectorXd product_field_probs(const CategoricalField& alpha, int K) {
  const int d_z = static_cast<int>(alpha.rows());
  const std::int64_t n = pow_int(K, d_z);
  Eigen::VectorXd p(n);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z0 = decode_token_field(idx, K, d_z);
    double v = 1.0;
    for (int i = 0; i < d_z; ++i) v *= alpha(i, token_index(z0[i]));
    p[idx] = v;
  }
  return p;
}

double kl_vectors(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - safe_log(q[i]));
  return kl;
}

void check_star_guard(const TabularJointPrior& prior,
                      const TransitionSchedule& s) {
  const std::int64_t n_state =
      pow_int(prior.codebook_size() + 1, prior.token_dims());
  if (n_state * s.num_steps() > kEnumerationGuard)
    throw std::invalid_argument(
        "noisy-state enumeration exceeds guard: " +
        std::to_string(n_state * s.num_steps()) + " states");
}

}  // namespace

CategoricalField enumerated_marginals(const EnumeratedPosterior& p) {
  CategoricalField m = CategoricalField::Zero(p.d_z, p.K);
  for (std::int64_t idx = 0; idx < p.probs.size(); ++idx) {
    const TokenField z = decode_token_field(idx, p.K, p.d_z);
    for (int i = 0; i < p.d_z; ++i) m(i, token_index(z[i])) += p.probs[idx];
  }
  return m;
}

EnumeratedPosterior enumerate_posterior(const TabularJointPrior& prior,
                                        const Codebook& cb, const Decoder& dec,
                                        const LinearProblem& prob) {
  if (prob.sigma_eta <= 0.0)
    throw std::invalid_argument("enumerate_posterior requires sigma_eta > 0");
  const std::int64_t n = prior.support_size();
  const Eigen::VectorXd ll = loglik_table(prior, cb, dec, prob);
  Eigen::VectorXd logw(n);
  double logmax = -std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < n; ++idx) {
    logw[idx] = ll[idx] + safe_log(prior.prob(idx));
    logmax = std::max(logmax, logw[idx]);
  }
  Eigen::VectorXd probs(n);
  for (std::int64_t idx = 0; idx < n; ++idx)
    probs[idx] = std::exp(logw[idx] - logmax);
  probs /= probs.sum();
  return {prior.codebook_size(), prior.token_dims(), std::move(probs)};
}

EnumeratedPosterior enumerate_star_decomp_marginal(
    const TabularJointPrior& prior, const TransitionSchedule& s,
    const Codebook& cb, const Decoder& dec, const LinearProblem& prob) {
  check_star_guard(prior, s);
  const int K = prior.codebook_size();
  const int d_z = prior.token_dims();
  const int T = s.num_steps();
  const EnumeratedPosterior target = enumerate_posterior(prior, cb, dec, prob);
  const Eigen::VectorXd ll = loglik_table(prior, cb, dec, prob);

  // Chain state m_t over noisy fields, started at the exact q(z_T | y).
  Eigen::VectorXd m = forward_field_matrix(s, T, d_z) * target.probs;

  for (int t = T; t >= 2; --t) {
    const Eigen::MatrixXd Ft = forward_field_matrix(s, t, d_z);
    const Eigen::MatrixXd Rt =
        conditional_matrix(Ft, prior.table(), ll, /*with_likelihood=*/true);
    const Eigen::MatrixXd Fprev = forward_field_matrix(s, t - 1, d_z);
    // One reverse step: z' ~ sum_{z_t} m(z_t) sum_{z0} q(z'|z0) q(z0|z_t, y).
    m = Fprev * (Rt * m);
  }

  const Eigen::MatrixXd F1 = forward_field_matrix(s, 1, d_z);
  const Eigen::MatrixXd R1 =
      conditional_matrix(F1, prior.table(), ll, /*with_likelihood=*/true);
  Eigen::VectorXd probs = R1 * m;
  probs /= probs.sum();
  return {K, d_z, std::move(probs)};
}

BoundSides check_theorem1(const TabularJointPrior& prior,
                          const TransitionSchedule& s, const Codebook& cb,
                          const Decoder& dec, const LinearProblem& prob,
                          const std::vector<CategoricalField>& alphas) {
  check_star_guard(prior, s);
  const int K = prior.codebook_size();
  const int d_z = prior.token_dims();
  const int T = s.num_steps();
  if (static_cast<int>(alphas.size()) != T)
    throw std::invalid_argument("check_theorem1 needs one alpha field per step");

  const EnumeratedPosterior target = enumerate_posterior(prior, cb, dec, prob);
  const Eigen::VectorXd ll = loglik_table(prior, cb, dec, prob);

  // Variational chain marginals n_t (t = T..1) and the bound terms.
  Eigen::VectorXd n_t = forward_field_matrix(s, T, d_z) * target.probs;
  double rhs = 0.0;
  for (int t = T; t >= 1; --t) {
    const CategoricalField& alpha_t = alphas[t - 1];
    if (alpha_t.rows() != d_z || alpha_t.cols() != K)
      throw std::invalid_argument("alpha field has wrong shape");
    const Eigen::VectorXd palpha = product_field_probs(alpha_t, K);
    const Eigen::MatrixXd Ft = forward_field_matrix(s, t, d_z);
    const Eigen::MatrixXd cond =
        conditional_matrix(Ft, prior.table(), ll, /*with_likelihood=*/true);
    for (Eigen::Index sidx = 0; sidx < n_t.size(); ++sidx)
      if (n_t[sidx] > 0.0) rhs += n_t[sidx] * kl_vectors(palpha, cond.col(sidx));
    // Advance the chain: n_{t-1}(z') = sum_{z_t} n_t(z_t) sum_{z0} q(z'|z0) palpha(z0),
    // and the reverse kernel does not depend on z_t.
    if (t >= 2) n_t = forward_field_matrix(s, t - 1, d_z) * palpha;
  }

  const EnumeratedPosterior decomp =
      enumerate_star_decomp_marginal(prior, s, cb, dec, prob);
  const Eigen::VectorXd p0 = product_field_probs(alphas.front(), K);
  return {kl_vectors(p0, decomp.probs), rhs};
}

DecompositionSides check_lemma1_decomposition(const CategoricalField& alpha,
                                              const TabularJointPrior& prior,
                                              const LinearProblem& prob,
                                              const Codebook& cb,
                                              const Decoder& dec,
                                              const TransitionSchedule& s,
                                              int t, const TokenField& zt) {
  const int K = prior.codebook_size();
  const int d_z = prior.token_dims();
  s.check_step(t);
  if (zt.size() != d_z || !in_token_range(zt, K))
    throw std::invalid_argument("z_t has wrong shape or out-of-range tokens");
  if (alpha.rows() != d_z || alpha.cols() != K)
    throw std::invalid_argument("alpha field has wrong shape");

  const std::int64_t n = prior.support_size();
  const Eigen::VectorXd ll = loglik_table(prior, cb, dec, prob);
  const Eigen::VectorXd palpha = product_field_probs(alpha, K);

  // Per-field forward probability q(z_t | z0) at the given z_t.
  Eigen::VectorXd fwd(n);
  Eigen::MatrixXd per_token(K + 1, K);
  for (int k = 1; k <= K; ++k) per_token.col(k - 1) = cumulative_forward_dist(s, t, k);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z0 = decode_token_field(idx, K, d_z);
    double p = 1.0;
    for (int i = 0; i < d_z; ++i)
      p *= per_token(token_index(zt[i]), token_index(z0[i]));
    fwd[idx] = p;
  }

  // q(z0 | z_t) and q(z0 | z_t, y), both normalized by enumeration.
  Eigen::VectorXd prior_cond(n), post_cond(n);
  {
    Eigen::VectorXd logw_prior(n), logw_post(n);
    double m1 = -std::numeric_limits<double>::infinity();
    double m2 = m1;
    for (std::int64_t idx = 0; idx < n; ++idx) {
      logw_prior[idx] = safe_log(fwd[idx]) + safe_log(prior.prob(idx));
      logw_post[idx] = logw_prior[idx] + ll[idx];
      m1 = std::max(m1, logw_prior[idx]);
      m2 = std::max(m2, logw_post[idx]);
    }
    for (std::int64_t idx = 0; idx < n; ++idx) {
      prior_cond[idx] = std::exp(logw_prior[idx] - m1);
      post_cond[idx] = std::exp(logw_post[idx] - m2);
    }
    prior_cond /= prior_cond.sum();
    post_cond /= post_cond.sum();
  }

  DecompositionSides out;
  out.lhs = kl_vectors(palpha, post_cond);

  double expected_ll = 0.0;
  for (std::int64_t idx = 0; idx < n; ++idx)
    if (palpha[idx] > 0.0) expected_ll += palpha[idx] * ll[idx];

  // log Z = log E_{q(z0|z_t)} [ q(y|z0) ], via a max shift.
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < n; ++idx)
    if (prior_cond[idx] > 0.0) lmax = std::max(lmax, ll[idx]);
  double z = 0.0;
  for (std::int64_t idx = 0; idx < n; ++idx)
    if (prior_cond[idx] > 0.0)
      z += prior_cond[idx] * std::exp(ll[idx] - lmax);
  out.log_normalizer = lmax + std::log(z);

  out.rhs = kl_vectors(palpha, prior_cond) - expected_ll + out.log_normalizer;
  return out;
}

CategoricalField project_conditional(const TabularJointPrior& prior,
                                     const TransitionSchedule& s,
                                     const Codebook& cb, const Decoder& dec,
                                     const LinearProblem& prob, int t,
                                     const TokenField& zt) {
  const int K = prior.codebook_size();
  const int d_z = prior.token_dims();
  const Eigen::VectorXd ll = loglik_table(prior, cb, dec, prob);
  Eigen::MatrixXd per_token(K + 1, K);
  for (int k = 1; k <= K; ++k) per_token.col(k - 1) = cumulative_forward_dist(s, t, k);

  const std::int64_t n = prior.support_size();
  Eigen::VectorXd logw(n);
  double logmax = -std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z0 = decode_token_field(idx, K, d_z);
    double lw = safe_log(prior.prob(idx)) + ll[idx];
    for (int i = 0; i < d_z; ++i)
      lw += safe_log(per_token(token_index(zt[i]), token_index(z0[i])));
    logw[idx] = lw;
    logmax = std::max(logmax, lw);
  }
  CategoricalField marg = CategoricalField::Zero(d_z, K);
  double total = 0.0;
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const double w = std::exp(logw[idx] - logmax);
    if (w == 0.0) continue;
    const TokenField z0 = decode_token_field(idx, K, d_z);
    for (int i = 0; i < d_z; ++i) marg(i, token_index(z0[i])) += w;
    total += w;
  }
  return marg / total;
}

}  // namespace g2d2
