#pragma once

#include <Eigen/Dense>
#include <vector>

#include "g2d2/decoder.hpp"
#include "g2d2/operators.hpp"
#include "g2d2/rng.hpp"
#include "g2d2/types.hpp"

namespace g2d2 {

struct ObjectiveConfig {
  double eta_kl = 1.0;  // weight on the KL-to-prior term, >= 0
  double tau = 1.0;     // Gumbel-Softmax temperature, > 0
  int n_mc = 1;         // Monte-Carlo draws per evaluation, >= 1

  void validate() const;
};

// Gumbel noise shared between a loss evaluation and its gradient (common
// random numbers); one d_z x K matrix per Monte-Carlo draw.
using GumbelDraws = std::vector<Eigen::MatrixXd>;

GumbelDraws draw_gumbel(Rng& rng, int n_mc, int d_z, int K);

// sum_i sum_k p_ik (log p_ik - log q_ik) with 0 log 0 = 0 and q floored at
// exp(kLogFloor).
double kl_categorical_fields(const CategoricalField& p,
                             const CategoricalField& q);

// Per-step variational loss at fixed Gumbel noise:
//   eta_kl * KL(row_softmax(logits) || prior_out)
//     + mean over draws of || y - A soft_decode(log_row_softmax(logits), g, tau) ||^2.
double loss(const Eigen::MatrixXd& logits, const CategoricalField& prior_out,
            const LinearProblem& prob, const Codebook& cb, const Decoder& dec,
            const ObjectiveConfig& cfg, const GumbelDraws& draws);

// Analytic gradient of loss with respect to the logits, using the same
// Gumbel draws. Chains through row-softmax, the log-floor, the tempered
// softmax, the codebook weighted sum, the decoder and the operator.
Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& logits,
                              const CategoricalField& prior_out,
                              const LinearProblem& prob, const Codebook& cb,
                              const Decoder& dec, const ObjectiveConfig& cfg,
                              const GumbelDraws& draws);

struct LossValueAndGradient {
  double value;
  Eigen::MatrixXd gradient;
};

LossValueAndGradient loss_and_gradient(const Eigen::MatrixXd& logits,
                                       const CategoricalField& prior_out,
                                       const LinearProblem& prob,
                                       const Codebook& cb, const Decoder& dec,
                                       const ObjectiveConfig& cfg,
                                       const GumbelDraws& draws);

// Convenience overloads drawing fresh Gumbel noise from rng.
double loss(const Eigen::MatrixXd& logits, const CategoricalField& prior_out,
            const LinearProblem& prob, const Codebook& cb, const Decoder& dec,
            const ObjectiveConfig& cfg, Rng& rng);

}  // namespace g2d2
