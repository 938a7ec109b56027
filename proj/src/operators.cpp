#include "g2d2/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace g2d2 {

LinearOperator make_identity_operator(int d) {
  if (d < 1) throw std::invalid_argument("identity: dimension must be >= 1");
  return {"identity", Eigen::MatrixXd::Identity(d, d)};
}

LinearOperator make_masking_operator(int d, const std::vector<int>& kept) {
  if (kept.empty())
    throw std::invalid_argument("masking: kept-set must be non-empty");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(kept.size()), d);
  for (int r = 0; r < static_cast<int>(kept.size()); ++r) {
    const int c = kept[r];
    if (c < 0 || c >= d)
      throw std::invalid_argument("masking: kept index out of range");
    A(r, c) = 1.0;
  }
  return {"masking", std::move(A)};
}

LinearOperator make_average_operator(int d, int factor) {
  if (factor < 1) throw std::invalid_argument("average: factor must be >= 1");
  if (d % factor != 0)
    throw std::invalid_argument("average: dimension not divisible by factor");
  const int dy = d / factor;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dy, d);
  for (int r = 0; r < dy; ++r)
    for (int j = 0; j < factor; ++j) A(r, r * factor + j) = 1.0 / factor;
  return {"average", std::move(A)};
}

Eigen::VectorXd gaussian_blur_kernel(int len, double sigma) {
  if (len < 1) throw std::invalid_argument("blur: kernel length must be >= 1");
  if (sigma <= 0.0) throw std::invalid_argument("blur: sigma must be > 0");
  Eigen::VectorXd k(len);
  const double c = 0.5 * (len - 1);
  for (int j = 0; j < len; ++j)
    k[j] = std::exp(-0.5 * (j - c) * (j - c) / (sigma * sigma));
  return k / k.sum();
}

LinearOperator make_blur_operator(int d, int len, double sigma) {
  const Eigen::VectorXd k = gaussian_blur_kernel(len, sigma);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  const int c = (len - 1) / 2;
  for (int r = 0; r < d; ++r)
    for (int j = 0; j < len; ++j) {
      const int col = r + j - c;
      if (col >= 0 && col < d) A(r, col) = k[j];
    }
  return {"blur", std::move(A)};
}

Eigen::VectorXd apply_operator(const LinearOperator& op,
                               const Eigen::VectorXd& x) {
  if (x.size() != op.matrix.cols())
    throw std::invalid_argument("operator/input dimension mismatch");
  return op.matrix * x;
}

LinearProblem simulate_measurement(const LinearOperator& op, double sigma_eta,
                                   const Eigen::VectorXd& x0_true, Rng& rng) {
  if (sigma_eta < 0.0) throw std::invalid_argument("sigma_eta must be >= 0");
  Eigen::VectorXd y = apply_operator(op, x0_true);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma_eta * rng.gaussian();
  return {op, std::move(y), sigma_eta};
}

double residual_norm(const LinearProblem& prob, const Eigen::VectorXd& x0) {
  return (prob.y - apply_operator(prob.op, x0)).norm();
}

double log_likelihood(const LinearProblem& prob, const Eigen::VectorXd& x0) {
  if (prob.sigma_eta <= 0.0)
    throw std::invalid_argument(
        "normalized log-likelihood requires sigma_eta > 0");
  const double r = residual_norm(prob, x0);
  return -r * r / (2.0 * prob.sigma_eta * prob.sigma_eta);
}

}  // namespace g2d2
