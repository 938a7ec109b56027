#include "g2d2/decoder.hpp"

#include <stdexcept>

namespace g2d2 {

namespace {

Eigen::VectorXd flatten_rows(const Eigen::MatrixXd& Z) {
  Eigen::VectorXd v(Z.size());
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    v.segment(i * Z.cols(), Z.cols()) = Z.row(i);
  return v;
}

Eigen::MatrixXd unflatten_rows(const Eigen::VectorXd& v, int rows, int cols) {
  Eigen::MatrixXd Z(rows, cols);
  for (int i = 0; i < rows; ++i) Z.row(i) = v.segment(i * cols, cols);
  return Z;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

}  // namespace

Codebook random_codebook(int K, int d_b, Rng& rng, double scale) {
  return {random_matrix(K, d_b, rng, scale)};
}

LinearDecoder::LinearDecoder(Eigen::MatrixXd weight, Eigen::VectorXd bias,
                             int d_z, int d_b)
    : weight_(std::move(weight)), bias_(std::move(bias)), d_z_(d_z), d_b_(d_b) {
  if (weight_.cols() != static_cast<Eigen::Index>(d_z) * d_b)
    throw std::invalid_argument("decoder weight must have d_z*d_b columns");
  if (bias_.size() != weight_.rows())
    throw std::invalid_argument("decoder bias/weight dimension mismatch");
}

Eigen::VectorXd LinearDecoder::decode(const Eigen::MatrixXd& Z) const {
  return weight_ * flatten_rows(Z) + bias_;
}

Eigen::MatrixXd LinearDecoder::pullback(const Eigen::MatrixXd& Z,
                                        const Eigen::VectorXd& grad_x0) const {
  (void)Z;
  return unflatten_rows(weight_.transpose() * grad_x0, d_z_, d_b_);
}

TanhMlpDecoder::TanhMlpDecoder(Eigen::MatrixXd w1, Eigen::VectorXd b1,
                               Eigen::MatrixXd w2, Eigen::VectorXd b2, int d_z,
                               int d_b)
    : w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)),
      d_z_(d_z),
      d_b_(d_b) {
  if (w1_.cols() != static_cast<Eigen::Index>(d_z) * d_b)
    throw std::invalid_argument("decoder w1 must have d_z*d_b columns");
  if (b1_.size() != w1_.rows() || w2_.cols() != w1_.rows() ||
      b2_.size() != w2_.rows())
    throw std::invalid_argument("decoder layer dimension mismatch");
}

Eigen::VectorXd TanhMlpDecoder::decode(const Eigen::MatrixXd& Z) const {
  const Eigen::VectorXd h = (w1_ * flatten_rows(Z) + b1_).array().tanh();
  return w2_ * h + b2_;
}

Eigen::MatrixXd TanhMlpDecoder::pullback(const Eigen::MatrixXd& Z,
                                         const Eigen::VectorXd& grad_x0) const {
  const Eigen::VectorXd pre = w1_ * flatten_rows(Z) + b1_;
  const Eigen::VectorXd dtanh = 1.0 - pre.array().tanh().square();
  const Eigen::VectorXd gh = (w2_.transpose() * grad_x0).cwiseProduct(dtanh);
  return unflatten_rows(w1_.transpose() * gh, d_z_, d_b_);
}

std::unique_ptr<LinearDecoder> random_linear_decoder(int d_z, int d_b, int d_x0,
                                                     Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_z) * d_b);
  return std::make_unique<LinearDecoder>(
      random_matrix(d_x0, d_z * d_b, rng, scale),
      random_matrix(d_x0, 1, rng, 0.1).col(0), d_z, d_b);
}

std::unique_ptr<TanhMlpDecoder> random_mlp_decoder(int d_z, int d_b, int d_x0,
                                                   int hidden, Rng& rng) {
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d_z) * d_b);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  return std::make_unique<TanhMlpDecoder>(
      random_matrix(hidden, d_z * d_b, rng, s1),
      random_matrix(hidden, 1, rng, 0.1).col(0),
      random_matrix(d_x0, hidden, rng, s2),
      random_matrix(d_x0, 1, rng, 0.1).col(0), d_z, d_b);
}

Eigen::VectorXd hard_decode(const Codebook& cb, const Decoder& dec,
                            const TokenField& z0) {
  const int K = cb.size();
  if (z0.size() != dec.token_dims())
    throw std::invalid_argument("token field/decoder dimension mismatch");
  if (!fully_unmasked(z0, K))
    throw std::invalid_argument("hard_decode requires fully unmasked tokens");
  Eigen::MatrixXd Z(z0.size(), cb.embed_dim());
  for (int i = 0; i < z0.size(); ++i) Z.row(i) = cb.vectors.row(token_index(z0[i]));
  return dec.decode(Z);
}

Eigen::MatrixXd sample_gumbel(Rng& rng, int d_z, int K) {
  Eigen::MatrixXd g(d_z, K);
  for (int i = 0; i < d_z; ++i)
    for (int k = 0; k < K; ++k) g(i, k) = rng.gumbel();
  return g;
}

Eigen::MatrixXd soft_assignments(const Eigen::MatrixXd& log_alpha,
                                 const Eigen::MatrixXd& g, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
  if (log_alpha.rows() != g.rows() || log_alpha.cols() != g.cols())
    throw std::invalid_argument("log_alpha/gumbel shape mismatch");
  const Eigen::MatrixXd u =
      (log_alpha.array().max(kLogFloor) + g.array()) / tau;
  return row_softmax(u);
}

Eigen::VectorXd soft_decode(const Codebook& cb, const Decoder& dec,
                            const Eigen::MatrixXd& log_alpha,
                            const Eigen::MatrixXd& g, double tau) {
  const Eigen::MatrixXd zhat = soft_assignments(log_alpha, g, tau);
  return dec.decode(zhat * cb.vectors);
}

}  // namespace g2d2
