#include "g2d2/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace g2d2 {

void ObjectiveConfig::validate() const {
  if (eta_kl < 0.0) throw std::invalid_argument("eta_kl must be >= 0");
  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
}

GumbelDraws draw_gumbel(Rng& rng, int n_mc, int d_z, int K) {
  GumbelDraws draws;
  draws.reserve(n_mc);
  for (int j = 0; j < n_mc; ++j) draws.push_back(sample_gumbel(rng, d_z, K));
  return draws;
}

double kl_categorical_fields(const CategoricalField& p,
                             const CategoricalField& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("KL: field shape mismatch");
  const Eigen::MatrixXd logq = clamped_log(q);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double pik = p(i, k);
      if (pik > 0.0) kl += pik * (std::log(pik) - logq(i, k));
    }
  return kl;
}

namespace {

struct Forward {
  CategoricalField alpha;     // row_softmax(logits)
  Eigen::MatrixXd log_alpha;  // log-row-softmax(logits), floored
};

Forward forward_alpha(const Eigen::MatrixXd& logits) {
  return {row_softmax(logits), log_row_softmax(logits)};
}

}  // namespace

double loss(const Eigen::MatrixXd& logits, const CategoricalField& prior_out,
            const LinearProblem& prob, const Codebook& cb, const Decoder& dec,
            const ObjectiveConfig& cfg, const GumbelDraws& draws) {
  cfg.validate();
  if (static_cast<int>(draws.size()) != cfg.n_mc)
    throw std::invalid_argument("loss: expected n_mc Gumbel draws");
  const Forward fwd = forward_alpha(logits);
  double value = cfg.eta_kl * kl_categorical_fields(fwd.alpha, prior_out);
  double lik = 0.0;
  for (const auto& g : draws) {
    const Eigen::VectorXd x0 = soft_decode(cb, dec, fwd.log_alpha, g, cfg.tau);
    lik += (prob.y - apply_operator(prob.op, x0)).squaredNorm();
  }
  return value + lik / cfg.n_mc;
}

LossValueAndGradient loss_and_gradient(const Eigen::MatrixXd& logits,
                                       const CategoricalField& prior_out,
                                       const LinearProblem& prob,
                                       const Codebook& cb, const Decoder& dec,
                                       const ObjectiveConfig& cfg,
                                       const GumbelDraws& draws) {
  cfg.validate();
  if (static_cast<int>(draws.size()) != cfg.n_mc)
    throw std::invalid_argument("loss_gradient: expected n_mc Gumbel draws");
  const Forward fwd = forward_alpha(logits);
  const int d_z = static_cast<int>(logits.rows());
  const int K = static_cast<int>(logits.cols());

  double value = 0.0;
  Eigen::MatrixXd grad_logits = Eigen::MatrixXd::Zero(d_z, K);

  // KL(alpha || prior_out) through the row-softmax: per row
  // grad = eta_kl * alpha .* (s - <alpha, s>), s_k = log alpha_k - log q_k.
  const Eigen::MatrixXd logq = clamped_log(prior_out);
  for (int i = 0; i < d_z; ++i) {
    double kl_row = 0.0;
    Eigen::RowVectorXd s(K);
    for (int k = 0; k < K; ++k) {
      const double a = fwd.alpha(i, k);
      s[k] = (a > 0.0 ? std::log(a) : kLogFloor) - logq(i, k);
      if (a > 0.0) kl_row += a * s[k];
    }
    const double mean_s = fwd.alpha.row(i).dot(s);
    for (int k = 0; k < K; ++k)
      grad_logits(i, k) = cfg.eta_kl * fwd.alpha(i, k) * (s[k] - mean_s);
    value += cfg.eta_kl * kl_row;
  }

  // Likelihood term, averaged over the shared Gumbel draws. The clamp on
  // log_alpha blocks the gradient where it is active.
  Eigen::MatrixXd grad_log_alpha_total = Eigen::MatrixXd::Zero(d_z, K);
  double lik = 0.0;
  for (const auto& g : draws) {
    const Eigen::MatrixXd zhat = soft_assignments(fwd.log_alpha, g, cfg.tau);
    const Eigen::MatrixXd Z = zhat * cb.vectors;
    const Eigen::VectorXd x0 = dec.decode(Z);
    const Eigen::VectorXd r = prob.y - apply_operator(prob.op, x0);
    lik += r.squaredNorm();

    const Eigen::VectorXd grad_x0 = -2.0 * (prob.op.matrix.transpose() * r);
    const Eigen::MatrixXd grad_Z = dec.pullback(Z, grad_x0);
    const Eigen::MatrixXd grad_zhat = grad_Z * cb.vectors.transpose();
    for (int i = 0; i < d_z; ++i) {
      const double inner = zhat.row(i).dot(grad_zhat.row(i));
      for (int k = 0; k < K; ++k) {
        const double gu = zhat(i, k) * (grad_zhat(i, k) - inner);
        grad_log_alpha_total(i, k) += gu / cfg.tau;
      }
    }
  }
  value += lik / cfg.n_mc;

  // Pull back through the floored log-row-softmax:
  // d log_alpha_k / d logit_j = [not clamped_k] * (delta_kj - alpha_j).
  for (int i = 0; i < d_z; ++i) {
    double row_sum = 0.0;
    for (int k = 0; k < K; ++k) {
      double gk = grad_log_alpha_total(i, k) / cfg.n_mc;
      if (fwd.log_alpha(i, k) <= kLogFloor) gk = 0.0;
      grad_log_alpha_total(i, k) = gk;
      row_sum += gk;
    }
    for (int k = 0; k < K; ++k)
      grad_logits(i, k) +=
          grad_log_alpha_total(i, k) - fwd.alpha(i, k) * row_sum;
  }

  return {value, std::move(grad_logits)};
}

Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& logits,
                              const CategoricalField& prior_out,
                              const LinearProblem& prob, const Codebook& cb,
                              const Decoder& dec, const ObjectiveConfig& cfg,
                              const GumbelDraws& draws) {
  return loss_and_gradient(logits, prior_out, prob, cb, dec, cfg, draws)
      .gradient;
}

double loss(const Eigen::MatrixXd& logits, const CategoricalField& prior_out,
            const LinearProblem& prob, const Codebook& cb, const Decoder& dec,
            const ObjectiveConfig& cfg, Rng& rng) {
  const GumbelDraws draws = draw_gumbel(rng, cfg.n_mc,
                                        static_cast<int>(logits.rows()),
                                        static_cast<int>(logits.cols()));
  return loss(logits, prior_out, prob, cb, dec, cfg, draws);
}

}  // namespace g2d2
