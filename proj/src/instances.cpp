#include "g2d2/instances.hpp"

#include <cmath>

namespace g2d2 {

ScheduleEndpoints random_endpoints(Rng& rng) {
  // Keep alpha + gamma strictly below 1 at both ends; linear interpolation
  // then keeps the leak positive everywhere in between.
  const double a1 = 0.5 + 0.45 * rng.uniform01();
  const double g1 = 0.001 + (1.0 - a1 - 0.01) * 0.5 * rng.uniform01();
  const double aT = 0.0001 + 0.05 * rng.uniform01();
  const double lo = g1 + 0.05;
  const double hi = 1.0 - aT - 0.005;
  const double gT = lo + (hi - lo) * (0.5 + 0.5 * rng.uniform01());
  return {a1, aT, g1, gT};
}

TabularJointPrior random_positive_prior(int K, int d_z, Rng& rng) {
  const std::int64_t n = enumerated_state_count(K, d_z);
  Eigen::VectorXd w(n);
  for (std::int64_t i = 0; i < n; ++i) w[i] = std::exp(1.5 * rng.gaussian());
  return make_table_prior(K, d_z, w, /*normalize=*/true);
}

CategoricalField random_field(int d_z, int K, Rng& rng, double spread) {
  Eigen::MatrixXd logits(d_z, K);
  for (int i = 0; i < d_z; ++i)
    for (int k = 0; k < K; ++k) logits(i, k) = spread * rng.gaussian();
  return row_softmax(logits);
}

LinearOperator pick_operator(int which, int d_x0, Rng& rng) {
  switch (which % 4) {
    case 0:
      return make_identity_operator(d_x0);
    case 1: {
      std::vector<int> keep;
      for (int i = 0; i < d_x0; ++i)
        if (rng.uniform01() < 0.5) keep.push_back(i);
      if (keep.empty()) keep.push_back(static_cast<int>(rng.raw() % d_x0));
      return make_masking_operator(d_x0, keep);
    }
    case 2: {
      int factor = 2;
      while (d_x0 % factor != 0) ++factor;
      return make_average_operator(d_x0, factor);
    }
    default:
      return make_blur_operator(d_x0, (rng.uniform01() < 0.5) ? 3 : 5,
                                0.5 + 1.5 * rng.uniform01());
  }
}

TestInstance random_small_instance(Rng& rng, int which_operator,
                                   bool mlp_decoder) {
  const int K = 2 + static_cast<int>(rng.raw() % 2);    // 2..3
  const int d_z = 1 + static_cast<int>(rng.raw() % 2);  // 1..2
  const int d_b = 2;
  const int d_x0 = 4;
  const int T = 1 + static_cast<int>(rng.raw() % 4);  // 1..4

  TabularJointPrior prior = random_positive_prior(K, d_z, rng);
  TransitionSchedule schedule = build_schedule(T, K, random_endpoints(rng));
  Codebook cb = random_codebook(K, d_b, rng);
  std::unique_ptr<Decoder> dec;
  if (mlp_decoder)
    dec = random_mlp_decoder(d_z, d_b, d_x0, 6, rng);
  else
    dec = random_linear_decoder(d_z, d_b, d_x0, rng);

  const LinearOperator op = pick_operator(which_operator, d_x0, rng);
  const TokenField z0_true = prior.sample(rng);
  const double sigma = 0.2 + 0.4 * rng.uniform01();
  LinearProblem prob =
      simulate_measurement(op, sigma, hard_decode(cb, *dec, z0_true), rng);

  return {K,  d_z,      d_b, d_x0, std::move(prior), std::move(schedule),
          std::move(cb), std::move(dec), std::move(prob)};
}

TestInstance point_mass_instance() {
  const int K = 2;
  const int d_z = 2;
  const int d_b = 1;
  const int d_x0 = 2;
  const int T = 3;

  TabularJointPrior prior = make_uniform_prior(K, d_z);
  TransitionSchedule schedule =
      build_schedule(T, K, {0.9, 0.01, 0.05, 0.9});

  Codebook cb{(Eigen::MatrixXd(2, 1) << -1.0, 1.0).finished()};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d_x0, d_z * d_b);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  auto dec = std::make_unique<LinearDecoder>(w, Eigen::VectorXd::Zero(d_x0),
                                             d_z, d_b);

  // Noiseless identity measurement of one field plus a tiny assumed sigma:
  // the posterior concentrates on the generating tokens to ~1e-40.
  const TokenField z0_true{{1, 2}};
  const Eigen::VectorXd x0 = hard_decode(cb, *dec, z0_true);
  LinearProblem prob{make_identity_operator(d_x0), x0, 0.05};

  return {K,  d_z,      d_b, d_x0, std::move(prior), std::move(schedule),
          std::move(cb), std::move(dec), std::move(prob)};
}

}  // namespace g2d2
