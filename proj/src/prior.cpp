#include "g2d2/prior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace g2d2 {

std::int64_t enumerated_state_count(int K, int d_z) {
  std::int64_t n = 1;
  for (int i = 0; i < d_z; ++i) {
    n *= K;
    if (n > kEnumerationGuard) return n;
  }
  return n;
}

std::int64_t encode_token_field(const TokenField& z, int K) {
  std::int64_t idx = 0;
  for (int tok : z.tokens) {
    if (tok < 1 || tok > K)
      throw std::invalid_argument("encode_token_field: masked or out-of-range token");
    idx = idx * K + (tok - 1);
  }
  return idx;
}

TokenField decode_token_field(std::int64_t index, int K, int d_z) {
  TokenField z;
  z.tokens.assign(d_z, 1);
  for (int i = d_z - 1; i >= 0; --i) {
    z[i] = static_cast<int>(index % K) + 1;
    index /= K;
  }
  return z;
}

TabularJointPrior::TabularJointPrior(int K, int d_z, Eigen::VectorXd probs)
    : K_(K), d_z_(d_z), probs_(std::move(probs)) {
  const std::int64_t n = enumerated_state_count(K, d_z);
  if (n > kEnumerationGuard)
    throw std::invalid_argument("tabular prior support exceeds enumeration guard: " +
                                std::to_string(n) + " states");
  if (probs_.size() != n)
    throw std::invalid_argument("tabular prior table has wrong size");
  if (probs_.minCoeff() < 0.0)
    throw std::invalid_argument("tabular prior has negative entries");
  if (std::abs(probs_.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("tabular prior does not sum to 1");
}

double TabularJointPrior::logprob(const TokenField& z) const {
  const double p = prob(z);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

CategoricalField TabularJointPrior::marginals() const {
  CategoricalField m = CategoricalField::Zero(d_z_, K_);
  for (std::int64_t idx = 0; idx < probs_.size(); ++idx) {
    const TokenField z = decode_token_field(idx, K_, d_z_);
    for (int i = 0; i < d_z_; ++i) m(i, token_index(z[i])) += probs_[idx];
  }
  return m;
}

TokenField TabularJointPrior::sample(Rng& rng) const {
  return decode_token_field(rng.categorical(probs_), K_, d_z_);
}

TabularJointPrior make_independent_prior(const CategoricalField& rows) {
  check_categorical_field(rows);
  const int d_z = static_cast<int>(rows.rows());
  const int K = static_cast<int>(rows.cols());
  const std::int64_t n = enumerated_state_count(K, d_z);
  if (n > kEnumerationGuard)
    throw std::invalid_argument("independent prior support exceeds enumeration guard: " +
                                std::to_string(n) + " states");
  Eigen::VectorXd probs(n);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z = decode_token_field(idx, K, d_z);
    double p = 1.0;
    for (int i = 0; i < d_z; ++i) p *= rows(i, token_index(z[i]));
    probs[idx] = p;
  }
  return TabularJointPrior(K, d_z, probs / probs.sum());
}

TabularJointPrior make_uniform_prior(int K, int d_z) {
  return make_independent_prior(CategoricalField::Constant(d_z, K, 1.0 / K));
}

TabularJointPrior make_chain_prior(int K, int d_z, double coupling,
                                   const Eigen::VectorXd& initial) {
  if (coupling < 0.0 || coupling >= 1.0)
    throw std::invalid_argument("chain coupling must lie in [0, 1)");
  if (initial.size() != K || initial.minCoeff() < 0.0 ||
      std::abs(initial.sum() - 1.0) > 1e-8)
    throw std::invalid_argument("chain initial distribution invalid");
  const std::int64_t n = enumerated_state_count(K, d_z);
  if (n > kEnumerationGuard)
    throw std::invalid_argument("chain prior support exceeds enumeration guard");
  Eigen::VectorXd probs(n);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z = decode_token_field(idx, K, d_z);
    double p = initial[token_index(z[0])];
    for (int i = 1; i < d_z; ++i) {
      const double same = (z[i] == z[i - 1]) ? coupling : 0.0;
      p *= (1.0 - coupling) / K + same;
    }
    probs[idx] = p;
  }
  return TabularJointPrior(K, d_z, probs / probs.sum());
}

TabularJointPrior make_table_prior(int K, int d_z, Eigen::VectorXd probs,
                                   bool normalize) {
  if (normalize) {
    const double s = probs.sum();
    if (s <= 0.0) throw std::invalid_argument("table prior has zero mass");
    probs /= s;
  }
  return TabularJointPrior(K, d_z, std::move(probs));
}

CategoricalField exact_denoiser(const TabularJointPrior& prior,
                                const TransitionSchedule& s, int t,
                                const TokenField& zt) {
  const int K = prior.codebook_size();
  const int d_z = prior.token_dims();
  if (s.codebook_size() != K)
    throw std::invalid_argument("prior/schedule codebook size mismatch");
  if (zt.size() != d_z || !in_token_range(zt, K))
    throw std::invalid_argument("z_t has wrong shape or out-of-range tokens");
  s.check_step(t);

  // log q(z_{t,i} | z_{0,i} = k) for every dimension i and clean token k.
  Eigen::MatrixXd log_fwd(d_z, K);
  for (int k = 1; k <= K; ++k) {
    const Eigen::VectorXd col = cumulative_forward_dist(s, t, k);
    for (int i = 0; i < d_z; ++i)
      log_fwd(i, k - 1) = std::log(col[token_index(zt[i])]);
  }

  const std::int64_t n = prior.support_size();
  Eigen::VectorXd logw(n);
  double logmax = -std::numeric_limits<double>::infinity();
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TokenField z0 = decode_token_field(idx, K, d_z);
    double lw = prior.prob(idx) > 0.0 ? std::log(prior.prob(idx))
                                      : -std::numeric_limits<double>::infinity();
    for (int i = 0; i < d_z; ++i) lw += log_fwd(i, token_index(z0[i]));
    logw[idx] = lw;
    logmax = std::max(logmax, lw);
  }
  if (!std::isfinite(logmax))
    throw std::domain_error("exact_denoiser: joint posterior has no support");

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
