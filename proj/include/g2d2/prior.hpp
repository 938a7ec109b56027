#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>

#include "g2d2/rng.hpp"
#include "g2d2/schedule.hpp"
#include "g2d2/types.hpp"

namespace g2d2 {

// Guard for full enumeration of K^{d_z} token fields.
inline constexpr std::int64_t kEnumerationGuard = 1'000'000;

std::int64_t enumerated_state_count(int K, int d_z);

// Mixed-radix encoding of a fully unmasked token field: dimension 0 is the
// most significant digit. Inverse of decode_token_field.
std::int64_t encode_token_field(const TokenField& z, int K);
TokenField decode_token_field(std::int64_t index, int K, int d_z);

// Explicit joint distribution q(z_0) over all K^{d_z} unmasked token
// fields; the desk-scale stand-in for the data distribution behind a
// trained denoiser.
class TabularJointPrior {
 public:
  TabularJointPrior(int K, int d_z, Eigen::VectorXd probs);

  int codebook_size() const { return K_; }
  int token_dims() const { return d_z_; }
  std::int64_t support_size() const { return probs_.size(); }

  double prob(std::int64_t index) const { return probs_[index]; }
  double prob(const TokenField& z) const { return probs_[encode_token_field(z, K_)]; }
  double logprob(const TokenField& z) const;

  const Eigen::VectorXd& table() const { return probs_; }

  // Per-dimension marginals, d_z x K.
  CategoricalField marginals() const;

  TokenField sample(Rng& rng) const;

 private:
  int K_;
  int d_z_;
  Eigen::VectorXd probs_;
};

// Independent categorical prior from per-dimension rows (d_z x K).
TabularJointPrior make_independent_prior(const CategoricalField& rows);

// Uniform over all fields.
TabularJointPrior make_uniform_prior(int K, int d_z);

// Markov chain across dimensions: p(z) = p(z_1) prod_i p(z_{i+1}|z_i) with
// transition (1-coupling)/K + coupling*[same token]. coupling = 0 recovers
// the uniform independent prior; larger values correlate neighbours.
TabularJointPrior make_chain_prior(int K, int d_z, double coupling,
                                   const Eigen::VectorXd& initial);

// Arbitrary table (normalized on construction if asked).
TabularJointPrior make_table_prior(int K, int d_z, Eigen::VectorXd probs,
                                   bool normalize = false);

// Exact mean-field denoiser: enumerates q(z_0 | z_t) ~ q(z_t | z_0) q(z_0)
// and returns its per-dimension marginals (d_z x K). This is the projection
// a trained network approximates. Guarded by kEnumerationGuard.
CategoricalField exact_denoiser(const TabularJointPrior& prior,
                                const TransitionSchedule& s, int t,
                                const TokenField& zt);

// Pluggable clean-token predictor p(z_0 | z_t); rows cover unmasked tokens
// only.
class DenoisingPrior {
 public:
  virtual ~DenoisingPrior() = default;
  virtual CategoricalField denoise(const TokenField& zt, int t) const = 0;
  virtual int codebook_size() const = 0;
  virtual int token_dims() const = 0;
};

// Adapter delegating to exact_denoiser over a tabular joint.
class TabularDenoiser final : public DenoisingPrior {
 public:
  TabularDenoiser(TabularJointPrior prior, TransitionSchedule schedule)
      : prior_(std::move(prior)), schedule_(std::move(schedule)) {}

  CategoricalField denoise(const TokenField& zt, int t) const override {
    return exact_denoiser(prior_, schedule_, t, zt);
  }
  int codebook_size() const override { return prior_.codebook_size(); }
  int token_dims() const override { return prior_.token_dims(); }

  const TabularJointPrior& joint() const { return prior_; }

 private:
  TabularJointPrior prior_;
  TransitionSchedule schedule_;
};

// All-1/K rows regardless of z_t.
class UniformDenoiser final : public DenoisingPrior {
 public:
  UniformDenoiser(int K, int d_z) : K_(K), d_z_(d_z) {}
  CategoricalField denoise(const TokenField&, int) const override {
    return CategoricalField::Constant(d_z_, K_, 1.0 / K_);
  }
  int codebook_size() const override { return K_; }
  int token_dims() const override { return d_z_; }

 private:
  int K_;
  int d_z_;
};

// Returns its stored rows regardless of z_t.
class ProductMarginalsDenoiser final : public DenoisingPrior {
 public:
  explicit ProductMarginalsDenoiser(CategoricalField rows)
      : rows_(std::move(rows)) {
    check_categorical_field(rows_);
  }
  CategoricalField denoise(const TokenField&, int) const override {
    return rows_;
  }
  int codebook_size() const override { return static_cast<int>(rows_.cols()); }
  int token_dims() const override { return static_cast<int>(rows_.rows()); }

 private:
  CategoricalField rows_;
};

}  // namespace g2d2
