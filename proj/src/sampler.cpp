#include "g2d2/sampler.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "g2d2/optimizer.hpp"

namespace g2d2 {

void SolverConfig::validate() const {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (inner_iters < 0) throw std::invalid_argument("inner_iters must be >= 0");
  if (forget_gamma < 0.0 || forget_gamma > 1.0)
    throw std::invalid_argument("forget coefficient must lie in [0, 1]");
  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
  if (eta_kl_base < 0.0) throw std::invalid_argument("eta_kl_base must be >= 0");
  if (lr_base <= 0.0) throw std::invalid_argument("lr_base must be > 0");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
}

int Trajectory::total_remask_events() const {
  int n = 0;
  for (const auto& rec : steps) n += rec.remask_events;
  return n;
}

Eigen::MatrixXd init_alpha(const std::optional<CategoricalField>& prev_alpha,
                           const CategoricalField& prior_out, double gamma) {
  const Eigen::MatrixXd log_prior = clamped_log(prior_out);
  if (!prev_alpha) return log_prior;
  if (prev_alpha->rows() != prior_out.rows() ||
      prev_alpha->cols() != prior_out.cols())
    throw std::invalid_argument("init_alpha: field shape mismatch");
  return gamma * clamped_log(*prev_alpha) + (1.0 - gamma) * log_prior;
}

namespace {

// Per-dimension reverse draw under the Markov-noise-process posterior:
// z_{t-1,i} ~ sum_k alpha(i,k) q_Markov(z_{t-1} | z_0 = k, z_t = zt_i).
Eigen::VectorXd markov_reverse_row(const TransitionSchedule& s, int t,
                                   const Eigen::RowVectorXd& alpha_row,
                                   int zt_token) {
  const int K = s.codebook_size();
  Eigen::VectorXd mix = Eigen::VectorXd::Zero(K + 1);
  for (int k = 1; k <= K; ++k) {
    const double w = alpha_row[k - 1];
    if (w <= 0.0) continue;
    mix += w * markov_posterior(s, t, k, zt_token);
  }
  const double total = mix.sum();
  if (total <= 0.0)
    throw std::domain_error("markov reverse kernel has no support");
  return mix / total;
}

SolveResult solve_impl(const SolverConfig& cfg, const DenoisingPrior& prior,
                       const TransitionSchedule& s, const Codebook& cb,
                       const Decoder& dec, const LinearProblem& prob, Rng& rng,
                       const std::optional<ErrorInjection>& inject) {
  cfg.validate();
  const int K = s.codebook_size();
  const int d_z = prior.token_dims();
  const int T = cfg.T;
  if (s.num_steps() != T)
    throw std::invalid_argument("schedule/solver step-count mismatch");
  if (prior.codebook_size() != K)
    throw std::invalid_argument("prior/schedule codebook size mismatch");
  if (cb.size() != K)
    throw std::invalid_argument("codebook/schedule size mismatch");

  SolveResult result;
  result.trajectory.steps.reserve(T);

  // z_T from the terminal forward distribution (effectively all-MASK when
  // gamma_bar(T) ~ 1); the conditioning token is irrelevant in that regime.
  TokenField z_t;
  z_t.tokens.assign(d_z, 1);
  z_t = sample_zt_given_z0(s, T, z_t, rng);

  std::optional<CategoricalField> prev_alpha;
  RAdam opt(d_z, K);

  for (int t = T; t >= 1; --t) {
    StepRecord rec;
    rec.t = t;
    rec.z_t = z_t;
    rec.effective_lr = cfg.lr_base * schedule_weight(t, T, cfg.lambda_lr);
    rec.effective_eta_kl =
        cfg.eta_kl_base * schedule_weight(t, T, cfg.lambda_kl);

    const CategoricalField prior_out = prior.denoise(z_t, t);
    Eigen::MatrixXd logits =
        (t == T) ? init_alpha(std::nullopt, prior_out, cfg.forget_gamma)
                 : init_alpha(prev_alpha, prior_out, cfg.forget_gamma);

    ObjectiveConfig obj;
    obj.eta_kl = rec.effective_eta_kl;
    obj.tau = cfg.tau;
    obj.n_mc = cfg.n_mc;

    if (!cfg.carry_optimizer_state) opt.reset();
    rec.losses.reserve(cfg.inner_iters);
    for (int it = 0; it < cfg.inner_iters; ++it) {
      const GumbelDraws draws = draw_gumbel(rng, cfg.n_mc, d_z, K);
      const LossValueAndGradient lg =
          loss_and_gradient(logits, prior_out, prob, cb, dec, obj, draws);
      if (!std::isfinite(lg.value))
        throw std::runtime_error("non-finite loss at t=" + std::to_string(t) +
                                 " iter=" + std::to_string(it));
      opt.step(logits, lg.gradient, rec.effective_lr);
      rec.losses.push_back(lg.value);
    }

    const CategoricalField alpha = row_softmax(logits);
    rec.alpha = alpha;

    // Reverse draw of z_{t-1}.
    TokenField z_prev;
    z_prev.tokens.assign(d_z, 0);
    if (cfg.variant == Variant::kStar || t == 1) {
      const Eigen::MatrixXd kernel = star_reverse_kernel(s, t, alpha);
      for (int i = 0; i < d_z; ++i)
        z_prev[i] = rng.categorical(kernel.row(i).transpose()) + 1;
    } else {
      for (int i = 0; i < d_z; ++i) {
        const Eigen::VectorXd row = markov_reverse_row(s, t, alpha.row(i), z_t[i]);
        z_prev[i] = rng.categorical(row) + 1;
      }
    }
    for (int i = 0; i < d_z; ++i) {
      if (is_mask(z_prev[i], K)) {
        ++rec.mask_draws;
        if (!is_mask(z_t[i], K)) ++rec.remask_events;
      }
    }
    if (inject && inject->at_t == t - 1) {
      if (inject->dim < 0 || inject->dim >= d_z ||
          inject->token < 1 || inject->token > K)
        throw std::invalid_argument("error injection out of range");
      z_prev[inject->dim] = inject->token;
    }

    prev_alpha = alpha;
    if (cfg.record_trajectory) result.trajectory.steps.push_back(std::move(rec));
    z_t = std::move(z_prev);
  }

  result.z0 = z_t;
  result.trajectory.z0 = result.z0;
  result.x0 = hard_decode(cb, dec, result.z0);
  return result;
}

}  // namespace

SolveResult g2d2_solve(const SolverConfig& cfg, const DenoisingPrior& prior,
                       const TransitionSchedule& s, const Codebook& cb,
                       const Decoder& dec, const LinearProblem& prob, Rng& rng,
                       const std::optional<ErrorInjection>& inject) {
  if (cfg.variant != Variant::kStar)
    throw std::invalid_argument("g2d2_solve requires the star variant");
  return solve_impl(cfg, prior, s, cb, dec, prob, rng, inject);
}

SolveResult g2d2_markov_solve(const SolverConfig& cfg,
                              const DenoisingPrior& prior,
                              const TransitionSchedule& s, const Codebook& cb,
                              const Decoder& dec, const LinearProblem& prob,
                              Rng& rng,
                              const std::optional<ErrorInjection>& inject) {
  if (cfg.variant != Variant::kMarkov)
    throw std::invalid_argument("g2d2_markov_solve requires the markov variant");
  return solve_impl(cfg, prior, s, cb, dec, prob, rng, inject);
}

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  for (const auto& rec : traj.steps) {
    os << "step t=" << rec.t << " lr=" << rec.effective_lr
       << " eta_kl=" << rec.effective_eta_kl << "\n";
    os << "  z_t =";
    for (int tok : rec.z_t.tokens) os << ' ' << tok;
    os << "\n  alpha =";
    for (Eigen::Index i = 0; i < rec.alpha.rows(); ++i) {
      os << " [";
      for (Eigen::Index k = 0; k < rec.alpha.cols(); ++k) {
        if (k) os << ' ';
        os << rec.alpha(i, k);
      }
      os << ']';
    }
    os << "\n  losses =";
    for (double l : rec.losses) os << ' ' << l;
    os << "\n";
  }
  os << "z0 =";
  for (int tok : traj.z0.tokens) os << ' ' << tok;
  os << "\n";
}

}  // namespace g2d2
