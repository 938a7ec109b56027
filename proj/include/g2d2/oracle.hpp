#pragma once

#include <Eigen/Dense>
#include <vector>

#include "g2d2/decoder.hpp"
#include "g2d2/operators.hpp"
#include "g2d2/prior.hpp"
#include "g2d2/schedule.hpp"

namespace g2d2 {

// Exact distribution over all K^{d_z} clean token fields, indexed by
// encode_token_field.
struct EnumeratedPosterior {
  int K = 0;
  int d_z = 0;
  Eigen::VectorXd probs;

  double prob(const TokenField& z) const { return probs[encode_token_field(z, K)]; }
};

// Per-dimension marginals of an enumerated distribution, d_z x K.
CategoricalField enumerated_marginals(const EnumeratedPosterior& p);

// Exact Bayes posterior over clean fields:
//   q(z0 | y) ~ exp(-||y - A hard_decode(z0)||^2 / (2 sigma^2)) q(z0),
// normalized by full enumeration. Requires sigma_eta > 0.
EnumeratedPosterior enumerate_posterior(const TabularJointPrior& prior,
                                        const Codebook& cb, const Decoder& dec,
                                        const LinearProblem& prob);

// Marginal of the chain-factorized surrogate: starts from the exact
// q(z_T | y), repeatedly applies the exact reverse conditional
// q(z_{t-1} | z_t, y) obtained by Bayes over the enumerated joint, and
// marginalizes down to z_0. Numerically executes the proof that this equals
// enumerate_posterior. Additionally guarded by (K+1)^{d_z} * T.
EnumeratedPosterior enumerate_star_decomp_marginal(
    const TabularJointPrior& prior, const TransitionSchedule& s,
    const Codebook& cb, const Decoder& dec, const LinearProblem& prob);

struct BoundSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Both sides of the variational KL bound for a full parameter set
// alphas[t-1] = alpha_t (t = 1..T, each d_z x K):
//   lhs: KL between the variational z0 marginal and the surrogate z0 marginal
//   rhs: sum over t of E_{z_t ~ p_alpha} KL(p_alpha(z0) || q(z0 | z_t, y)),
// everything by exact enumeration; the true conditionals are joints.
BoundSides check_theorem1(const TabularJointPrior& prior,
                          const TransitionSchedule& s, const Codebook& cb,
                          const Decoder& dec, const LinearProblem& prob,
                          const std::vector<CategoricalField>& alphas);

struct DecompositionSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double log_normalizer = 0.0;
};

// Both sides of the prior/likelihood decomposition of
// KL(p_alpha(z0) || q(z0 | z_t, y)) at one (t, z_t):
//   lhs: the KL by direct enumeration
//   rhs: KL(p_alpha || q(z0 | z_t)) - E_{p_alpha}[log q(y | z0)] + log Z,
// with log Z = log E_{q(z0|z_t)}[q(y | z0)] reported. lhs == rhs identically.
DecompositionSides check_lemma1_decomposition(const CategoricalField& alpha,
                                              const TabularJointPrior& prior,
                                              const LinearProblem& prob,
                                              const Codebook& cb,
                                              const Decoder& dec,
                                              const TransitionSchedule& s,
                                              int t, const TokenField& zt);

// Mean-field projection (per-dimension marginals) of the exact conditional
// q(z0 | z_t, y); used to evaluate the bound at the optimum.
CategoricalField project_conditional(const TabularJointPrior& prior,
                                     const TransitionSchedule& s,
                                     const Codebook& cb, const Decoder& dec,
                                     const LinearProblem& prob, int t,
                                     const TokenField& zt);

}  // namespace g2d2
