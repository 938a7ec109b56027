#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace g2d2 {

// Seeded randomness source. All stochastic operations in the library draw
// from an explicitly passed Rng, one per worker. The variate recipes below
// (53-bit uniform, Box-Muller gaussian, inverse-CDF categorical) are spelled
// out instead of using <random> distributions so that a given seed produces
// the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1), endpoints clamped away.
  double uniform_open01() {
    double u = uniform01();
    if (u < 1e-16) u = 1e-16;
    if (u > 1.0 - 1e-16) u = 1.0 - 1e-16;
    return u;
  }

  // Standard normal via Box-Muller; the spare variate is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Standard Gumbel: -log(-log(u)).
  double gumbel() { return -std::log(-std::log(uniform_open01())); }

  // Inverse-CDF draw from an (approximately normalized) probability vector.
  // Returns a 0-based index.
  int categorical(const Eigen::VectorXd& probs) {
    const double total = probs.sum();
    double u = uniform01() * total;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      u -= probs[i];
      if (u < 0.0) return i;
    }
    return n - 1;  // guard against accumulated rounding
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace g2d2
