#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "g2d2/rng.hpp"

namespace g2d2 {

// Named dense linear operator A: R^{d_x0} -> R^{d_y}. Desk-scale problems
// are small enough that an explicit matrix is the simplest exact
// representation and gives the adjoint for free.
struct LinearOperator {
  std::string name;
  Eigen::MatrixXd matrix;

  int output_dim() const { return static_cast<int>(matrix.rows()); }
  int input_dim() const { return static_cast<int>(matrix.cols()); }
};

LinearOperator make_identity_operator(int d);
// Keeps the listed coordinates (inpainting). Rejects an empty kept-set.
LinearOperator make_masking_operator(int d, const std::vector<int>& kept);
// Block-average downsampling by integer factor f; d must be divisible by f.
LinearOperator make_average_operator(int d, int factor);
// 1-D convolution with a normalized Gaussian kernel of length len and
// standard deviation sigma, zero-padded at the boundary (output length d).
LinearOperator make_blur_operator(int d, int len, double sigma);

Eigen::VectorXd gaussian_blur_kernel(int len, double sigma);

Eigen::VectorXd apply_operator(const LinearOperator& op,
                               const Eigen::VectorXd& x);

// Linear inverse problem y = A x_0 + eta with isotropic Gaussian noise.
struct LinearProblem {
  LinearOperator op;
  Eigen::VectorXd y;
  double sigma_eta = 0.0;
};

LinearProblem simulate_measurement(const LinearOperator& op, double sigma_eta,
                                   const Eigen::VectorXd& x0_true, Rng& rng);

double residual_norm(const LinearProblem& prob, const Eigen::VectorXd& x0);

// Normalized Gaussian log-likelihood with the constant dropped:
// -||y - A x0||^2 / (2 sigma^2). Rejects sigma_eta = 0.
double log_likelihood(const LinearProblem& prob, const Eigen::VectorXd& x0);

}  // namespace g2d2
