#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <vector>

#include "g2d2/instances.hpp"
#include "g2d2/metrics.hpp"
#include "g2d2/objective.hpp"
#include "g2d2/optimizer.hpp"
#include "g2d2/oracle.hpp"
#include "g2d2/runner.hpp"

namespace g2d2 {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

bool verify_schedule(std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(7101);
  double max_err = 0.0;
  double max_mass_err = 0.0;

  for (int K = 2; K <= 8; ++K) {
    for (int T = 2; T <= 20; ++T) {
      for (int draw = 0; draw < 2; ++draw) {
        const TransitionSchedule s = build_schedule(T, K, random_endpoints(rng));
        Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(K + 1, K + 1);
        for (int t = 1; t <= T; ++t) {
          prod = single_step_matrix(s, t) * prod;
          for (int z0 = 1; z0 <= K; ++z0) {
            const Eigen::VectorXd closed = cumulative_forward_dist(s, t, z0);
            max_err = std::max(
                max_err, (prod.col(token_index(z0)) - closed).cwiseAbs().maxCoeff());
            max_mass_err = std::max(max_mass_err, std::abs(closed.sum() - 1.0));
          }
          // MASK column stays the MASK one-hot under the product.
          Eigen::VectorXd mask_col = Eigen::VectorXd::Zero(K + 1);
          mask_col[K] = 1.0;
          max_err = std::max(max_err,
                             (prod.col(K) - mask_col).cwiseAbs().maxCoeff());
        }
      }
    }
  }

  bool weights_ok = true;
  for (int t = 0; t <= 10; ++t)
    if (std::abs(schedule_weight(t, 10, 0.0) - 1.0) > 1e-15) weights_ok = false;
  if (std::abs(schedule_weight(5, 10, 1.7) - 1.0) > 1e-12) weights_ok = false;

  const TransitionSchedule dflt =
      build_schedule(100, 16, {0.99999, 0.000009, 0.000009, 0.99999});
  const double elapsed = seconds_since(start);
  const bool ok = max_err <= 1e-12 && max_mass_err <= 1e-12 && weights_ok &&
                  dflt.terminal_effectively_masked();

  os << std::setprecision(3) << "schedule: closed-form vs per-step product, "
     << "K=2..8, T=2..20: max |err| = " << max_err
     << ", max |mass-1| = " << max_mass_err
     << "; lambda=0 weights all 1: " << (weights_ok ? "yes" : "NO")
     << "; default schedule mass residual = " << dflt.mass_residual() << " ("
     << elapsed << " s)\n"
     << (ok ? "schedule: PASS" : "schedule: FAIL") << "\n";
  return ok;
}

bool verify_lemma_marginal(std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  double max_tv = 0.0;
  const int n_instances = 20;
  for (int i = 0; i < n_instances; ++i) {
    const TestInstance inst = random_small_instance(rng, i);
    const EnumeratedPosterior direct =
        enumerate_posterior(inst.prior, inst.cb, *inst.dec, inst.prob);
    const EnumeratedPosterior chained = enumerate_star_decomp_marginal(
        inst.prior, inst.schedule, inst.cb, *inst.dec, inst.prob);
    max_tv = std::max(max_tv, tv_distance(chained.probs, direct.probs));
  }
  const double elapsed = seconds_since(start);
  const bool ok = max_tv <= 1e-10;
  os << std::setprecision(3) << "lemma_marginal: " << n_instances
     << " random instances: max TV(star-decomp marginal, posterior) = "
     << max_tv << " (" << elapsed << " s)\n"
     << (ok ? "lemma_marginal: PASS" : "lemma_marginal: FAIL") << "\n";
  return ok;
}

bool verify_theorem1(std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(31415);

  // Random variational parameters never violate the bound.
  double worst_violation = -1e300;
  int draws_checked = 0;
  const int n_instances = 10;
  const int draws_per_instance = 5;
  for (int i = 0; i < n_instances; ++i) {
    const TestInstance inst = random_small_instance(rng, i);
    const int T = inst.schedule.num_steps();
    for (int d = 0; d < draws_per_instance; ++d) {
      std::vector<CategoricalField> alphas;
      for (int t = 1; t <= T; ++t) {
        if (d == draws_per_instance - 1) {
          // Degenerate point-mass rows exercise the clamped boundary.
          CategoricalField a = CategoricalField::Zero(inst.d_z, inst.K);
          for (int row = 0; row < inst.d_z; ++row)
            a(row, static_cast<int>(rng.raw() % inst.K)) = 1.0;
          alphas.push_back(a);
        } else {
          alphas.push_back(random_field(inst.d_z, inst.K, rng));
        }
      }
      const BoundSides sides = check_theorem1(inst.prior, inst.schedule,
                                              inst.cb, *inst.dec, inst.prob,
                                              alphas);
      if (!std::isfinite(sides.lhs) || !std::isfinite(sides.rhs)) {
        os << "theorem1: non-finite bound sides\ntheorem1: FAIL\n";
        return false;
      }
      worst_violation = std::max(worst_violation, sides.lhs - sides.rhs);
      ++draws_checked;
    }
  }

  // At the exact conditionals of a product-form instance the bound is tight.
  const TestInstance pm = point_mass_instance();
  std::vector<CategoricalField> opt_alphas;
  TokenField all_mask;
  all_mask.tokens.assign(pm.d_z, mask_token(pm.K));
  for (int t = 1; t <= pm.schedule.num_steps(); ++t)
    opt_alphas.push_back(project_conditional(pm.prior, pm.schedule, pm.cb,
                                             *pm.dec, pm.prob, t, all_mask));
  const BoundSides tight = check_theorem1(pm.prior, pm.schedule, pm.cb,
                                          *pm.dec, pm.prob, opt_alphas);

  const double elapsed = seconds_since(start);
  const bool ok =
      worst_violation <= 1e-8 && tight.rhs <= 1e-10 && tight.lhs <= 1e-10;
  os << std::setprecision(3) << "theorem1: " << draws_checked
     << " random alpha draws: max(lhs - rhs) = " << worst_violation
     << "; exact conditionals: lhs = " << tight.lhs << ", rhs = " << tight.rhs
     << " (" << elapsed << " s)\n"
     << (ok ? "theorem1: PASS" : "theorem1: FAIL") << "\n";
  return ok;
}

bool verify_lemma_decomp(std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(9219);
  double max_gap = 0.0;
  const int n_instances = 20;
  for (int i = 0; i < n_instances; ++i) {
    const TestInstance inst = random_small_instance(rng, i);
    const int t = 1 + static_cast<int>(rng.raw() %
                                       inst.schedule.num_steps());
    const TokenField z0 = inst.prior.sample(rng);
    const TokenField zt = sample_zt_given_z0(inst.schedule, t, z0, rng);
    const CategoricalField alpha = random_field(inst.d_z, inst.K, rng);
    const DecompositionSides sides = check_lemma1_decomposition(
        alpha, inst.prior, inst.prob, inst.cb, *inst.dec, inst.schedule, t, zt);
    max_gap = std::max(max_gap, std::abs(sides.lhs - sides.rhs));
  }
  const double elapsed = seconds_since(start);
  const bool ok = max_gap <= 1e-9;
  os << std::setprecision(3) << "lemma_decomp: " << n_instances
     << " random instances: max |lhs - rhs| = " << max_gap << " (" << elapsed
     << " s)\n"
     << (ok ? "lemma_decomp: PASS" : "lemma_decomp: FAIL") << "\n";
  return ok;
}

bool verify_gradients(std::ostream& os) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(5150);
  double worst = 0.0;
  const int n_configs = 100;
  for (int c = 0; c < n_configs; ++c) {
    const int K = 2 + static_cast<int>(rng.raw() % 4);
    const int d_z = 1 + static_cast<int>(rng.raw() % 3);
    const int d_b = 1 + static_cast<int>(rng.raw() % 3);
    const int d_x0 = 4;
    const bool mlp = (c / 4) % 2 == 1;

    const Codebook cb = random_codebook(K, d_b, rng);
    std::unique_ptr<Decoder> dec;
    if (mlp)
      dec = random_mlp_decoder(d_z, d_b, d_x0, 6, rng);
    else
      dec = random_linear_decoder(d_z, d_b, d_x0, rng);
    const LinearOperator op = pick_operator(c, d_x0, rng);

    Eigen::VectorXd y(op.output_dim());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.gaussian();
    const LinearProblem prob{op, y, 0.1};

    ObjectiveConfig cfg;
    cfg.tau = (c % 3 == 0) ? 0.7 : ((c % 3 == 1) ? 1.0 : 1.5);
    cfg.eta_kl = (c % 3 == 0) ? 0.0 : ((c % 3 == 1) ? 0.5 : 2.0);
    cfg.n_mc = 1 + c % 3;

    Eigen::MatrixXd logits(d_z, K);
    for (int i = 0; i < d_z; ++i)
      for (int k = 0; k < K; ++k) logits(i, k) = 1.5 * rng.gaussian();
    const CategoricalField prior_out = random_field(d_z, K, rng);
    const GumbelDraws draws = draw_gumbel(rng, cfg.n_mc, d_z, K);

    const Eigen::MatrixXd grad =
        loss_gradient(logits, prior_out, prob, cb, *dec, cfg, draws);

    Eigen::MatrixXd fd(d_z, K);
    const double h = 1e-5;
    for (int i = 0; i < d_z; ++i)
      for (int k = 0; k < K; ++k) {
        Eigen::MatrixXd lp = logits, lm = logits;
        lp(i, k) += h;
        lm(i, k) -= h;
        fd(i, k) = (loss(lp, prior_out, prob, cb, *dec, cfg, draws) -
                    loss(lm, prior_out, prob, cb, *dec, cfg, draws)) /
                   (2.0 * h);
      }

    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (grad - fd).cwiseAbs().maxCoeff() / scale);
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst <= 1e-4;
  os << std::setprecision(3) << "gradients: " << n_configs
     << " random configurations (both decoders, all operators): max relative "
        "error vs central differences = "
     << worst << " (" << elapsed << " s)\n"
     << (ok ? "gradients: PASS" : "gradients: FAIL") << "\n";
  return ok;
}

}  // namespace g2d2
