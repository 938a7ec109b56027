#pragma once

#include <Eigen/Dense>
#include <memory>

#include "g2d2/rng.hpp"
#include "g2d2/types.hpp"

namespace g2d2 {

// K embedding vectors of dimension d_b, one row per token.
struct Codebook {
  Eigen::MatrixXd vectors;  // K x d_b

  int size() const { return static_cast<int>(vectors.rows()); }
  int embed_dim() const { return static_cast<int>(vectors.cols()); }
};

Codebook random_codebook(int K, int d_b, Rng& rng, double scale = 1.0);

// Maps a d_z x d_b embedding matrix Z to signal space. Implementations must
// provide the pullback of a signal-space gradient for the analytic loss
// gradient. Row i of Z corresponds to dimension i; rows are stacked
// row-major into a vector of length d_z*d_b before the linear maps.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual int token_dims() const = 0;   // d_z
  virtual int embed_dim() const = 0;    // d_b
  virtual int output_dim() const = 0;   // d_x0
  virtual Eigen::VectorXd decode(const Eigen::MatrixXd& Z) const = 0;
  // Returns dL/dZ given dL/dx0.
  virtual Eigen::MatrixXd pullback(const Eigen::MatrixXd& Z,
                                   const Eigen::VectorXd& grad_x0) const = 0;
};

// Affine decoder x0 = W vec(Z) + b. Keeps the whole likelihood chain
// analytic.
class LinearDecoder final : public Decoder {
 public:
  LinearDecoder(Eigen::MatrixXd weight, Eigen::VectorXd bias, int d_z, int d_b);

  int token_dims() const override { return d_z_; }
  int embed_dim() const override { return d_b_; }
  int output_dim() const override { return static_cast<int>(weight_.rows()); }
  Eigen::VectorXd decode(const Eigen::MatrixXd& Z) const override;
  Eigen::MatrixXd pullback(const Eigen::MatrixXd& Z,
                           const Eigen::VectorXd& grad_x0) const override;

  const Eigen::MatrixXd& weight() const { return weight_; }
  const Eigen::VectorXd& bias() const { return bias_; }

 private:
  Eigen::MatrixXd weight_;  // d_x0 x (d_z*d_b)
  Eigen::VectorXd bias_;
  int d_z_;
  int d_b_;
};

// One hidden tanh layer; used to stress-test gradients against a
// non-linear decoding path.
class TanhMlpDecoder final : public Decoder {
 public:
  TanhMlpDecoder(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2,
                 Eigen::VectorXd b2, int d_z, int d_b);

  int token_dims() const override { return d_z_; }
  int embed_dim() const override { return d_b_; }
  int output_dim() const override { return static_cast<int>(w2_.rows()); }
  Eigen::VectorXd decode(const Eigen::MatrixXd& Z) const override;
  Eigen::MatrixXd pullback(const Eigen::MatrixXd& Z,
                           const Eigen::VectorXd& grad_x0) const override;

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd b2_;
  int d_z_;
  int d_b_;
};

std::unique_ptr<LinearDecoder> random_linear_decoder(int d_z, int d_b, int d_x0,
                                                     Rng& rng);
std::unique_ptr<TanhMlpDecoder> random_mlp_decoder(int d_z, int d_b, int d_x0,
                                                   int hidden, Rng& rng);

// Codebook assignment followed by decoding: x0 = D(Z), (Z)_i = b_{z0_i}.
// Rejects masked tokens.
Eigen::VectorXd hard_decode(const Codebook& cb, const Decoder& dec,
                            const TokenField& z0);

// i.i.d. standard Gumbel noise, d_z x K.
Eigen::MatrixXd sample_gumbel(Rng& rng, int d_z, int K);

// Per-dimension soft samples softmax((log_alpha + g)/tau); rows lie on the
// simplex. log_alpha is floored at kLogFloor first.
Eigen::MatrixXd soft_assignments(const Eigen::MatrixXd& log_alpha,
                                 const Eigen::MatrixXd& g, double tau);

// Gumbel-Softmax dequantization: soft samples weight the codebook rows and
// the weighted sum goes through the decoder. Differentiable in log_alpha.
Eigen::VectorXd soft_decode(const Codebook& cb, const Decoder& dec,
                            const Eigen::MatrixXd& log_alpha,
                            const Eigen::MatrixXd& g, double tau);

}  // namespace g2d2
