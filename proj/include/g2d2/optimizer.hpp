#pragma once

#include <Eigen/Dense>

namespace g2d2 {

struct RAdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Rectified Adam. While the variance-rectification length rho_t stays at or
// below 4 (the first 4 steps with beta2 = 0.999) the update falls back to a
// bias-corrected momentum step without adaptive scaling.
class RAdam {
 public:
  RAdam(int rows, int cols, RAdamParams params = {});

  // One update in place; lr is the effective learning rate for this step.
  // Rejects non-finite gradients.
  void step(Eigen::MatrixXd& x, const Eigen::MatrixXd& grad, double lr);

  void reset();
  int step_count() const { return t_; }

  // Rectification length rho_t for the stored decay; exposed so tests can
  // evaluate the formula directly.
  static double rectification_length(int t, double beta2);

 private:
  RAdamParams params_;
  int t_ = 0;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
};

// Log-decay schedule weight 10^{(lambda/2)(2t/T - 1)}; equals 1 at t = T/2,
// 10^{lambda/2} at t = T and 10^{-lambda/2} at t = 0.
double schedule_weight(double t, double T, double lambda);

}  // namespace g2d2
