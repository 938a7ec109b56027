#pragma once

#include <Eigen/Dense>

#include "g2d2/types.hpp"

namespace g2d2 {

double mse(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref);

// 10 log10(peak^2 / MSE) in decibels; returns +infinity when the signals
// coincide exactly.
double psnr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref,
            double peak);

// Half L1 distance between two distribution vectors (each normalized within
// 1e-6).
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Largest per-row TV distance between two categorical fields.
double max_row_tv(const CategoricalField& p, const CategoricalField& q);

double token_accuracy(const TokenField& z, const TokenField& z_ref);

struct MetricReport {
  double psnr_db = 0.0;
  double mse = 0.0;
  double tv_distance = 0.0;
  double token_accuracy = 0.0;
};

}  // namespace g2d2
