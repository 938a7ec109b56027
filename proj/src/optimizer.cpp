#include "g2d2/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace g2d2 {

RAdam::RAdam(int rows, int cols, RAdamParams params)
    : params_(params),
      m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)) {}

void RAdam::reset() {
  t_ = 0;
  m_.setZero();
  v_.setZero();
}

double RAdam::rectification_length(int t, double beta2) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double b2t = std::pow(beta2, t);
  return rho_inf - 2.0 * t * b2t / (1.0 - b2t);
}

void RAdam::step(Eigen::MatrixXd& x, const Eigen::MatrixXd& grad, double lr) {
  if (x.rows() != m_.rows() || x.cols() != m_.cols() ||
      grad.rows() != m_.rows() || grad.cols() != m_.cols())
    throw std::invalid_argument("RAdam: shape mismatch");
  if (!grad.allFinite())
    throw std::invalid_argument("RAdam: non-finite gradient");

  ++t_;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);

  const double m_corr = 1.0 - std::pow(b1, t_);
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t = rectification_length(t_, b2);

  if (rho_t > 4.0) {
    const double v_corr = 1.0 - std::pow(b2, t_);
    const double r_t = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                                 ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
    const Eigen::ArrayXXd denom =
        (v_.array() / v_corr).sqrt() + params_.epsilon;
    x.array() -= lr * r_t * (m_.array() / m_corr) / denom;
  } else {
    x.array() -= lr * m_.array() / m_corr;
  }
}

double schedule_weight(double t, double T, double lambda) {
  return std::pow(10.0, 0.5 * lambda * (2.0 * t / T - 1.0));
}

}  // namespace g2d2
