#pragma once

#include <memory>

#include "g2d2/decoder.hpp"
#include "g2d2/operators.hpp"
#include "g2d2/prior.hpp"
#include "g2d2/schedule.hpp"

namespace g2d2 {

// Randomized desk-scale problem instances for the verification suites and
// acceptance tests.
struct TestInstance {
  int K;
  int d_z;
  int d_b;
  int d_x0;
  TabularJointPrior prior;
  TransitionSchedule schedule;
  Codebook cb;
  std::unique_ptr<Decoder> dec;
  LinearProblem prob;
};

// Valid random schedule endpoints (all in (0,1), decreasing alpha_bar,
// increasing gamma_bar, positive leak everywhere).
ScheduleEndpoints random_endpoints(Rng& rng);

// Strictly positive random joint prior.
TabularJointPrior random_positive_prior(int K, int d_z, Rng& rng);

// One of identity / masking / average / blur, selected by index mod 4.
LinearOperator pick_operator(int which, int d_x0, Rng& rng);

// Random instance with K <= 3, d_z <= 2, T <= 4 and a measurement simulated
// from a prior draw; the family behind the enumeration-based checks.
TestInstance random_small_instance(Rng& rng, int which_operator,
                                   bool mlp_decoder = false);

// Deterministic instance whose posterior is effectively a point mass and
// whose exact conditionals are product-form: an exact-recovery stress case.
TestInstance point_mass_instance();

// Random strictly positive categorical field (rows on the simplex).
CategoricalField random_field(int d_z, int K, Rng& rng, double spread = 1.5);

}  // namespace g2d2
