#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "g2d2/instances.hpp"
#include "g2d2/metrics.hpp"
#include "g2d2/oracle.hpp"
#include "g2d2/sampler.hpp"

using namespace g2d2;

namespace {

struct Setup {
  TabularJointPrior prior;
  TransitionSchedule schedule;
  Codebook cb;
  std::unique_ptr<LinearDecoder> dec;
  LinearProblem prob;
  TokenField z0_true;
};

// Small coupled instance with a mid-mass schedule so both reverse kernels
// get exercised away from the corners.
Setup make_setup(int T, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  const int K = 3, d_z = 2, d_b = 2, d_x0 = 4;
  TabularJointPrior prior = make_chain_prior(
      K, d_z, 0.35, (Eigen::VectorXd(3) << 0.5, 0.3, 0.2).finished());
  TransitionSchedule schedule =
      build_schedule(T, K, {0.85, 0.005, 0.1, 0.99});
  Codebook cb = random_codebook(K, d_b, rng);
  auto dec = random_linear_decoder(d_z, d_b, d_x0, rng);
  TokenField z0_true = prior.sample(rng);
  LinearProblem prob = simulate_measurement(
      make_identity_operator(d_x0), sigma, hard_decode(cb, *dec, z0_true), rng);
  return {std::move(prior), std::move(schedule), std::move(cb), std::move(dec),
          std::move(prob), z0_true};
}

SolverConfig base_config(int T, Variant v, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.T = T;
  cfg.inner_iters = 25;
  cfg.forget_gamma = 0.3;
  cfg.tau = 0.3;
  cfg.eta_kl_base = 0.08;  // 2 sigma^2 for sigma = 0.2
  cfg.lr_base = 0.25;
  cfg.n_mc = 2;
  cfg.seed = seed;
  cfg.variant = v;
  return cfg;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("forget-coefficient initialization") {
    Rng rng(9);
    const CategoricalField prev = random_field(2, 3, rng);
    const CategoricalField prior_out = random_field(2, 3, rng);

    SUBCASE("gamma 0 restarts from the prior") {
      const Eigen::MatrixXd logits = init_alpha(prev, prior_out, 0.0);
      CHECK((row_softmax(logits) - prior_out).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("gamma 1 keeps the previous field") {
      const Eigen::MatrixXd logits = init_alpha(prev, prior_out, 1.0);
      CHECK((row_softmax(logits) - prev).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("no previous field falls back to the prior") {
      const Eigen::MatrixXd logits =
          init_alpha(std::nullopt, prior_out, 0.7);
      CHECK((row_softmax(logits) - prior_out).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("intermediate gamma is the normalized geometric blend") {
      const double gamma = 0.3;
      const Eigen::MatrixXd logits = init_alpha(prev, prior_out, gamma);
      const CategoricalField got = row_softmax(logits);
      // Element-wise power-product oracle.
      for (int i = 0; i < 2; ++i) {
        Eigen::RowVectorXd blend(3);
        for (int k = 0; k < 3; ++k)
          blend[k] = std::pow(prev(i, k), gamma) *
                     std::pow(prior_out(i, k), 1.0 - gamma);
        blend /= blend.sum();
        CHECK((got.row(i) - blend).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }

  TEST_CASE("deterministic given the seed") {
    const Setup su = make_setup(3, 0.2, 18);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    const SolverConfig cfg = base_config(3, Variant::kStar, 5);
    Rng r1(5), r2(5);
    const SolveResult a =
        g2d2_solve(cfg, denoiser, su.schedule, su.cb, *su.dec, su.prob, r1);
    const SolveResult b =
        g2d2_solve(cfg, denoiser, su.schedule, su.cb, *su.dec, su.prob, r2);
    CHECK(a.z0 == b.z0);
    CHECK((a.x0 - b.x0).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(a.trajectory.steps.size() == b.trajectory.steps.size());
    for (size_t i = 0; i < a.trajectory.steps.size(); ++i) {
      CHECK(a.trajectory.steps[i].z_t == b.trajectory.steps[i].z_t);
      CHECK((a.trajectory.steps[i].alpha - b.trajectory.steps[i].alpha)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK(a.trajectory.steps[i].losses == b.trajectory.steps[i].losses);
    }
  }

  TEST_CASE("variant dispatch is enforced") {
    const Setup su = make_setup(3, 0.2, 18);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    Rng rng(1);
    CHECK_THROWS_AS(g2d2_solve(base_config(3, Variant::kMarkov, 1), denoiser,
                               su.schedule, su.cb, *su.dec, su.prob, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(g2d2_markov_solve(base_config(3, Variant::kStar, 1),
                                      denoiser, su.schedule, su.cb, *su.dec,
                                      su.prob, rng),
                    std::invalid_argument);
  }

  TEST_CASE("T=1 reduces to one optimization and a clean draw") {
    const Setup su = make_setup(1, 0.2, 4);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    SolverConfig cfg = base_config(1, Variant::kStar, 2);
    Rng rng(2);
    const SolveResult res =
        g2d2_solve(cfg, denoiser, su.schedule, su.cb, *su.dec, su.prob, rng);
    CHECK(res.trajectory.steps.size() == 1);
    CHECK(res.trajectory.steps[0].t == 1);
    CHECK(fully_unmasked(res.z0, 3));
  }

  TEST_CASE("recorded alpha fields are row-normalized") {
    const Setup su = make_setup(4, 0.2, 91);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    Rng rng(7);
    const SolveResult res = g2d2_solve(base_config(4, Variant::kStar, 7),
                                       denoiser, su.schedule, su.cb, *su.dec,
                                       su.prob, rng);
    for (const auto& rec : res.trajectory.steps)
      for (Eigen::Index i = 0; i < rec.alpha.rows(); ++i)
        CHECK(std::abs(rec.alpha.row(i).sum() - 1.0) <= 1e-8);
  }

  TEST_CASE("star and markov share the stream until the reverse draw") {
    const Setup su = make_setup(4, 0.2, 33);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    Rng r1(12), r2(12);
    const SolveResult star =
        g2d2_solve(base_config(4, Variant::kStar, 12), denoiser, su.schedule,
                   su.cb, *su.dec, su.prob, r1);
    const SolveResult markov =
        g2d2_markov_solve(base_config(4, Variant::kMarkov, 12), denoiser,
                          su.schedule, su.cb, *su.dec, su.prob, r2);
    // Identical inputs at t = T: same z_T, same inner optimization, same
    // optimized field; the first divergence can only be the z_{T-1} draw.
    CHECK(star.trajectory.steps[0].z_t == markov.trajectory.steps[0].z_t);
    CHECK(star.trajectory.steps[0].losses == markov.trajectory.steps[0].losses);
    CHECK((star.trajectory.steps[0].alpha - markov.trajectory.steps[0].alpha)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  TEST_CASE("markov trajectories never re-mask; star trajectories do") {
    const Setup su = make_setup(5, 0.25, 55);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    int star_remask = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rs(seed), rm(seed);
      const SolveResult star =
          g2d2_solve(base_config(5, Variant::kStar, seed), denoiser,
                     su.schedule, su.cb, *su.dec, su.prob, rs);
      const SolveResult markov =
          g2d2_markov_solve(base_config(5, Variant::kMarkov, seed), denoiser,
                            su.schedule, su.cb, *su.dec, su.prob, rm);
      star_remask += star.trajectory.total_remask_events();
      CHECK(markov.trajectory.total_remask_events() == 0);
      // Explicit no-re-masking scan over consecutive states.
      const auto& steps = markov.trajectory.steps;
      for (size_t i = 0; i + 1 < steps.size(); ++i)
        for (int dim = 0; dim < 2; ++dim)
          if (!is_mask(steps[i].z_t[dim], 3))
            CHECK(!is_mask(steps[i + 1].z_t[dim], 3));
    }
    CHECK(star_remask > 0);
  }

  TEST_CASE("loss traces decrease on average over inner iterations") {
    const Setup su = make_setup(4, 0.2, 77);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    double first = 0.0, last = 0.0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const SolveResult res =
          g2d2_solve(base_config(4, Variant::kStar, seed), denoiser,
                     su.schedule, su.cb, *su.dec, su.prob, rng);
      for (const auto& rec : res.trajectory.steps) {
        first += rec.losses.front();
        last += rec.losses.back();
        ++n;
      }
    }
    CHECK(last / n <= first / n);
  }

  TEST_CASE("point-mass posterior is recovered almost always") {
    // Identity operator, noiseless measurement, prior concentrated on the
    // generating field: the posterior is a point mass.
    Rng setup_rng(62);
    const int K = 3, d_z = 2, d_b = 2, d_x0 = 4;
    const TokenField z_star{{2, 3}};
    CategoricalField rows = CategoricalField::Constant(d_z, K, 0.01);
    for (int i = 0; i < d_z; ++i) rows(i, token_index(z_star[i])) = 0.98;
    const TabularJointPrior prior = make_independent_prior(rows);
    const TransitionSchedule schedule =
        build_schedule(3, K, {0.85, 0.005, 0.1, 0.99});
    const Codebook cb = random_codebook(K, d_b, setup_rng);
    auto dec = random_linear_decoder(d_z, d_b, d_x0, setup_rng);
    const LinearProblem prob{make_identity_operator(d_x0),
                             hard_decode(cb, *dec, z_star), 0.0};
    const TabularDenoiser denoiser(prior, schedule);

    SolverConfig cfg = base_config(3, Variant::kStar, 0);
    cfg.eta_kl_base = 0.02;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      cfg.seed = seed;
      if (g2d2_solve(cfg, denoiser, schedule, cb, *dec, prob, rng).z0 == z_star)
        ++hits;
    }
    CHECK(hits >= 99);
  }

  TEST_CASE("dominant KL term reproduces the prior marginals") {
    // Zero operator: the likelihood contributes nothing, so the optimum of
    // every inner problem is the denoiser output and the chain samples the
    // unconditional reverse process.
    Setup su = make_setup(4, 0.3, 29);
    su.prob.op = LinearOperator{"zero", Eigen::MatrixXd::Zero(4, 4)};
    su.prob.y.setZero();
    const TabularDenoiser denoiser(su.prior, su.schedule);
    SolverConfig cfg = base_config(4, Variant::kStar, 0);
    cfg.eta_kl_base = 1.0;
    cfg.inner_iters = 15;

    CategoricalField counts = CategoricalField::Zero(2, 3);
    const int runs = 2000;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
      Rng rng(seed);
      cfg.seed = seed;
      const SolveResult res =
          g2d2_solve(cfg, denoiser, su.schedule, su.cb, *su.dec, su.prob, rng);
      for (int i = 0; i < 2; ++i) counts(i, token_index(res.z0[i])) += 1.0;
    }
    counts /= runs;
    CHECK(max_row_tv(counts, su.prior.marginals()) <= 0.1);
  }

  TEST_CASE("error injection forces the requested token") {
    const Setup su = make_setup(4, 0.2, 41);
    const TabularDenoiser denoiser(su.prior, su.schedule);
    const ErrorInjection inject{3, 1, 2};  // overwrite z_3, dimension 1
    Rng rng(3);
    const SolveResult res =
        g2d2_solve(base_config(4, Variant::kStar, 3), denoiser, su.schedule,
                   su.cb, *su.dec, su.prob, rng, inject);
    // Step t=4 draws z_3; the record at t=3 conditions on the forced state.
    for (const auto& rec : res.trajectory.steps)
      if (rec.t == 3) CHECK(rec.z_t[1] == 2);
  }

  TEST_CASE("non-finite loss aborts with a diagnostic") {
    Setup su = make_setup(3, 0.2, 51);
    su.prob.y[0] = std::nan("");
    const TabularDenoiser denoiser(su.prior, su.schedule);
    Rng rng(1);
    CHECK_THROWS_WITH_AS(
        g2d2_solve(base_config(3, Variant::kStar, 1), denoiser, su.schedule,
                   su.cb, *su.dec, su.prob, rng),
        doctest::Contains("non-finite"), std::runtime_error);
  }
}
