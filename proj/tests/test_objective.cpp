#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "g2d2/instances.hpp"
#include "g2d2/objective.hpp"

using namespace g2d2;

TEST_SUITE("objective") {
  TEST_CASE("categorical KL") {
    SUBCASE("identical fields give zero") {
      Rng rng(1);
      const CategoricalField p = random_field(3, 4, rng);
      CHECK(kl_categorical_fields(p, p) <= 1e-14);
    }
    SUBCASE("hand-evaluated two-state case") {
      CategoricalField p(1, 2), q(1, 2);
      p << 0.5, 0.5;
      q << 0.25, 0.75;
      const double want = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
      CHECK(kl_categorical_fields(p, q) ==
            doctest::Approx(want).epsilon(1e-12));
      CHECK(want == doctest::Approx(0.14384).epsilon(1e-4));
    }
    SUBCASE("additive over dimensions") {
      Rng rng(2);
      const CategoricalField p = random_field(4, 3, rng);
      const CategoricalField q = random_field(4, 3, rng);
      double sum = 0.0;
      for (int i = 0; i < 4; ++i)
        sum += kl_categorical_fields(p.row(i), q.row(i));
      CHECK(kl_categorical_fields(p, q) ==
            doctest::Approx(sum).epsilon(1e-12));
    }
    SUBCASE("zero p entries contribute nothing") {
      CategoricalField p(1, 3), q(1, 3);
      p << 0.0, 1.0, 0.0;
      q << 0.2, 0.5, 0.3;
      CHECK(kl_categorical_fields(p, q) ==
            doctest::Approx(-std::log(0.5)).epsilon(1e-12));
    }
    SUBCASE("non-negative on random fields") {
      Rng rng(3);
      for (int rep = 0; rep < 50; ++rep) {
        const CategoricalField p = random_field(2, 5, rng);
        const CategoricalField q = random_field(2, 5, rng);
        CHECK(kl_categorical_fields(p, q) >= -1e-12);
      }
    }
    SUBCASE("shape mismatch rejected") {
      CHECK_THROWS_AS(kl_categorical_fields(CategoricalField::Ones(1, 2),
                                            CategoricalField::Ones(2, 2)),
                      std::invalid_argument);
    }
  }

  TEST_CASE("loss composition") {
    Rng rng(10);
    const int d_z = 2, K = 3, d_b = 2, d_x0 = 4;
    const Codebook cb = random_codebook(K, d_b, rng);
    auto dec = random_linear_decoder(d_z, d_b, d_x0, rng);
    const LinearOperator op = make_identity_operator(d_x0);

    SUBCASE("zero KL weight and a perfect fit give zero loss") {
      Eigen::MatrixXd logits(d_z, K);
      for (int i = 0; i < d_z; ++i)
        for (int k = 0; k < K; ++k) logits(i, k) = rng.gaussian();
      ObjectiveConfig cfg;
      cfg.eta_kl = 0.0;
      cfg.n_mc = 1;
      const GumbelDraws draws = draw_gumbel(rng, 1, d_z, K);
      const Eigen::VectorXd x0 =
          soft_decode(cb, *dec, log_row_softmax(logits), draws[0], cfg.tau);
      const LinearProblem prob{op, apply_operator(op, x0), 0.1};
      const CategoricalField prior_out = random_field(d_z, K, rng);
      CHECK(loss(logits, prior_out, prob, cb, *dec, cfg, draws) <= 1e-18);
    }

    SUBCASE("matching prior and perfect fit give zero loss") {
      const CategoricalField prior_out = random_field(d_z, K, rng);
      const Eigen::MatrixXd logits = prior_out.array().log().matrix();
      ObjectiveConfig cfg;
      cfg.eta_kl = 2.5;
      const GumbelDraws draws = draw_gumbel(rng, 1, d_z, K);
      const Eigen::VectorXd x0 =
          soft_decode(cb, *dec, log_row_softmax(logits), draws[0], cfg.tau);
      const LinearProblem prob{op, x0, 0.1};
      CHECK(loss(logits, prior_out, prob, cb, *dec, cfg, draws) <= 1e-12);
    }

    SUBCASE("recomposes from independently coded pieces") {
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd logits(d_z, K);
        for (int i = 0; i < d_z; ++i)
          for (int k = 0; k < K; ++k) logits(i, k) = 1.3 * rng.gaussian();
        const CategoricalField prior_out = random_field(d_z, K, rng);
        Eigen::VectorXd y(d_x0);
        for (int i = 0; i < d_x0; ++i) y[i] = rng.gaussian();
        const LinearProblem prob{op, y, 0.2};
        ObjectiveConfig cfg;
        cfg.eta_kl = 0.7;
        cfg.tau = 0.9;
        const GumbelDraws draws = draw_gumbel(rng, 1, d_z, K);

        // Hand-composed path with explicit loops.
        double hand = 0.0;
        for (int i = 0; i < d_z; ++i) {
          double lse = 0.0;
          for (int k = 0; k < K; ++k) lse += std::exp(logits(i, k));
          for (int k = 0; k < K; ++k) {
            const double a = std::exp(logits(i, k)) / lse;
            hand += cfg.eta_kl * a * (std::log(a) - std::log(prior_out(i, k)));
          }
        }
        Eigen::MatrixXd soft(d_z, K);
        for (int i = 0; i < d_z; ++i) {
          double lse = 0.0;
          for (int k = 0; k < K; ++k) lse += std::exp(logits(i, k));
          double den = 0.0;
          for (int k = 0; k < K; ++k) {
            const double la = std::log(std::exp(logits(i, k)) / lse);
            soft(i, k) = std::exp((la + draws[0](i, k)) / cfg.tau);
            den += soft(i, k);
          }
          soft.row(i) /= den;
        }
        const Eigen::VectorXd x0 = dec->decode(soft * cb.vectors);
        hand += (y - x0).squaredNorm();

        CHECK(loss(logits, prior_out, prob, cb, *dec, cfg, draws) ==
              doctest::Approx(hand).epsilon(1e-10));
      }
    }

    SUBCASE("invariant to a per-row logit shift") {
      Eigen::MatrixXd logits(d_z, K);
      for (int i = 0; i < d_z; ++i)
        for (int k = 0; k < K; ++k) logits(i, k) = rng.gaussian();
      const CategoricalField prior_out = random_field(d_z, K, rng);
      Eigen::VectorXd y(d_x0);
      for (int i = 0; i < d_x0; ++i) y[i] = rng.gaussian();
      const LinearProblem prob{op, y, 0.2};
      ObjectiveConfig cfg;
      cfg.eta_kl = 1.3;
      const GumbelDraws draws = draw_gumbel(rng, 1, d_z, K);
      Eigen::MatrixXd shifted = logits;
      shifted.row(0).array() += 3.7;
      shifted.row(1).array() -= 1.2;
      CHECK(std::abs(loss(logits, prior_out, prob, cb, *dec, cfg, draws) -
                     loss(shifted, prior_out, prob, cb, *dec, cfg, draws)) <=
            1e-9);
    }

    SUBCASE("config validation") {
      ObjectiveConfig bad;
      bad.tau = 0.0;
      CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
      bad = ObjectiveConfig{};
      bad.n_mc = 0;
      CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
      bad = ObjectiveConfig{};
      bad.eta_kl = -1.0;
      CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
  }

  TEST_CASE("gradient behavior") {
    Rng rng(20);
    const int d_z = 2, K = 4, d_b = 2, d_x0 = 4;
    const Codebook cb = random_codebook(K, d_b, rng);
    auto dec = random_linear_decoder(d_z, d_b, d_x0, rng);

    SUBCASE("stationary at the KL-only optimum") {
      const CategoricalField prior_out = random_field(d_z, K, rng);
      const Eigen::MatrixXd logits = prior_out.array().log().matrix();
      // Zero operator switches the likelihood off entirely.
      const LinearOperator zero{"zero", Eigen::MatrixXd::Zero(d_x0, d_x0)};
      const LinearProblem prob{zero, Eigen::VectorXd::Zero(d_x0), 1.0};
      ObjectiveConfig cfg;
      cfg.eta_kl = 1.0;
      const GumbelDraws draws = draw_gumbel(rng, 1, d_z, K);
      const Eigen::MatrixXd grad =
          loss_gradient(logits, prior_out, prob, cb, *dec, cfg, draws);
      CHECK(grad.cwiseAbs().maxCoeff() <= 1e-8);
    }

    SUBCASE("affine in the KL weight") {
      Eigen::MatrixXd logits(d_z, K);
      for (int i = 0; i < d_z; ++i)
        for (int k = 0; k < K; ++k) logits(i, k) = rng.gaussian();
      const CategoricalField prior_out = random_field(d_z, K, rng);
      Eigen::VectorXd y(d_x0);
      for (int i = 0; i < d_x0; ++i) y[i] = rng.gaussian();
      const LinearProblem prob{make_identity_operator(d_x0), y, 0.2};
      const GumbelDraws draws = draw_gumbel(rng, 2, d_z, K);

      auto grad_at = [&](double eta) {
        ObjectiveConfig cfg;
        cfg.eta_kl = eta;
        cfg.n_mc = 2;
        return loss_gradient(logits, prior_out, prob, cb, *dec, cfg, draws);
      };
      const Eigen::MatrixXd g0 = grad_at(0.0);
      const Eigen::MatrixXd g1 = grad_at(1.0);
      const Eigen::MatrixXd g2 = grad_at(2.0);
      CHECK((g2 - g0 - 2.0 * (g1 - g0)).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("loss and gradient agree between entry points") {
      Eigen::MatrixXd logits(d_z, K);
      for (int i = 0; i < d_z; ++i)
        for (int k = 0; k < K; ++k) logits(i, k) = rng.gaussian();
      const CategoricalField prior_out = random_field(d_z, K, rng);
      Eigen::VectorXd y(d_x0);
      for (int i = 0; i < d_x0; ++i) y[i] = rng.gaussian();
      const LinearProblem prob{make_identity_operator(d_x0), y, 0.2};
      ObjectiveConfig cfg;
      cfg.n_mc = 3;
      const GumbelDraws draws = draw_gumbel(rng, 3, d_z, K);
      const LossValueAndGradient lg =
          loss_and_gradient(logits, prior_out, prob, cb, *dec, cfg, draws);
      CHECK(lg.value ==
            doctest::Approx(loss(logits, prior_out, prob, cb, *dec, cfg, draws))
                .epsilon(1e-14));
      CHECK((lg.gradient -
             loss_gradient(logits, prior_out, prob, cb, *dec, cfg, draws))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }

  TEST_CASE("monte-carlo standard error is consistent with per-draw variance") {
    Rng rng(30);
    const int d_z = 2, K = 3, d_b = 2, d_x0 = 4;
    const Codebook cb = random_codebook(K, d_b, rng);
    auto dec = random_linear_decoder(d_z, d_b, d_x0, rng);
    Eigen::MatrixXd logits(d_z, K);
    for (int i = 0; i < d_z; ++i)
      for (int k = 0; k < K; ++k) logits(i, k) = rng.gaussian();
    const CategoricalField prior_out = random_field(d_z, K, rng);
    Eigen::VectorXd y(d_x0);
    for (int i = 0; i < d_x0; ++i) y[i] = rng.gaussian();
    const LinearProblem prob{make_identity_operator(d_x0), y, 0.2};

    // Per-draw variance on the likelihood term.
    ObjectiveConfig one;
    one.eta_kl = 0.0;
    one.n_mc = 1;
    std::vector<double> singles;
    for (int rep = 0; rep < 4000; ++rep)
      singles.push_back(loss(logits, prior_out, prob, cb, *dec, one, rng));
    double mean = 0.0;
    for (double v : singles) mean += v;
    mean /= singles.size();
    double var = 0.0;
    for (double v : singles) var += (v - mean) * (v - mean);
    var /= singles.size() - 1;

    // Spread of n_mc = 1000 estimates.
    ObjectiveConfig big = one;
    big.n_mc = 1000;
    std::vector<double> means;
    for (int rep = 0; rep < 30; ++rep)
      means.push_back(loss(logits, prior_out, prob, cb, *dec, big, rng));
    double m2 = 0.0;
    for (double v : means) m2 += v;
    m2 /= means.size();
    double var_big = 0.0;
    for (double v : means) var_big += (v - m2) * (v - m2);
    var_big /= means.size() - 1;

    const double expected = var / 1000.0;
    CHECK(var_big >= expected / 3.0);
    CHECK(var_big <= expected * 3.0);
  }
}
