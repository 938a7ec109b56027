#include "g2d2/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace g2d2 {

double mse(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref) {
  if (x.size() != x_ref.size())
    throw std::invalid_argument("mse: length mismatch");
  return (x - x_ref).squaredNorm() / x.size();
}

double psnr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref,
            double peak) {
  if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be > 0");
  const double e = mse(x, x_ref);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("tv_distance: length mismatch");
  if (std::abs(p.sum() - 1.0) > 1e-6 || std::abs(q.sum() - 1.0) > 1e-6)
    throw std::invalid_argument("tv_distance: inputs must be normalized");
  return 0.5 * (p - q).cwiseAbs().sum();
}

double max_row_tv(const CategoricalField& p, const CategoricalField& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("max_row_tv: shape mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    worst = std::max(worst,
                     tv_distance(p.row(i).transpose(), q.row(i).transpose()));
  return worst;
}

double token_accuracy(const TokenField& z, const TokenField& z_ref) {
  if (z.size() != z_ref.size())
    throw std::invalid_argument("token_accuracy: length mismatch");
  if (z.size() == 0) return 1.0;
  int hits = 0;
  for (int i = 0; i < z.size(); ++i) hits += (z[i] == z_ref[i]) ? 1 : 0;
  return static_cast<double>(hits) / z.size();
}

}  // namespace g2d2
