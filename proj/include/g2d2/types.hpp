#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace g2d2 {

// Token convention: unmasked tokens are 1..K, the MASK symbol is K+1.
// Probability vectors over the K+1 states are indexed 0..K, entry j holding
// the mass of token j+1 (so the MASK entry is index K).

inline int mask_token(int K) { return K + 1; }
inline bool is_mask(int token, int K) { return token == K + 1; }
inline int token_index(int token) { return token - 1; }

// The discrete state z_t: d_z token indices.
struct TokenField {
  std::vector<int> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  int& operator[](int i) { return tokens[i]; }
  int operator[](int i) const { return tokens[i]; }
  bool operator==(const TokenField&) const = default;
};

inline bool fully_unmasked(const TokenField& z, int K) {
  for (int tok : z.tokens)
    if (tok < 1 || tok > K) return false;
  return true;
}

inline bool in_token_range(const TokenField& z, int K) {
  for (int tok : z.tokens)
    if (tok < 1 || tok > K + 1) return false;
  return true;
}

inline int count_masked(const TokenField& z, int K) {
  int n = 0;
  for (int tok : z.tokens) n += is_mask(tok, K) ? 1 : 0;
  return n;
}

// d_z independent categorical distributions over K unmasked tokens,
// one row per dimension. Used both for the variational parameter alpha_t
// and for denoiser outputs; rows never carry MASK mass.
using CategoricalField = Eigen::MatrixXd;

// Floor applied to log-probabilities before they enter softmax or KL terms;
// keeps zero-probability prior entries from producing -inf.
inline constexpr double kLogFloor = -30.0;

inline void check_categorical_field(const CategoricalField& f,
                                    double tol = 1e-8) {
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (f.row(i).minCoeff() < -tol)
      throw std::invalid_argument("categorical field has negative entries");
    if (std::abs(f.row(i).sum() - 1.0) > tol)
      throw std::invalid_argument("categorical field row is not normalized");
  }
}

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::RowVectorXd shifted =
        logits.row(i).array() - logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = shifted.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

// Row-wise log-softmax with entries floored at kLogFloor.
inline Eigen::MatrixXd log_row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = (logits.row(i).array() - lse).max(kLogFloor);
  }
  return out;
}

// Elementwise log with the kLogFloor clamp; probs may contain exact zeros.
inline Eigen::MatrixXd clamped_log(const Eigen::MatrixXd& probs) {
  return probs.array().max(std::exp(kLogFloor)).log();
}

}  // namespace g2d2
