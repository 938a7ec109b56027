#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "g2d2/sampler.hpp"

namespace g2d2 {

// Flat key = value configuration file: one assignment per line, '#' starts a
// comment, nested settings use dotted keys. Parse errors and typed-getter
// failures report the offending line.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text,
                                     const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // Keys present in the file but never read; used to flag typos.
  std::vector<std::string> unused_keys() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::string origin_;
  std::map<std::string, Entry> entries_;

  const Entry& lookup(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

enum class RunVariant { kStar, kMarkov, kBoth };

enum class PriorKind { kUniform, kIndependent, kChain, kTable };
enum class DecoderKind { kLinear, kMlp };
enum class OperatorKind { kIdentity, kMasking, kAverage, kBlur };

// Everything needed to reproduce one experiment: problem dimensions,
// schedule endpoints, prior/codebook/decoder/operator settings, solver
// settings and the seed list.
struct ExperimentConfig {
  int K = 3;
  int d_z = 2;
  int d_b = 2;
  int d_x0 = 4;

  int T = 4;
  ScheduleEndpoints endpoints{0.99999, 0.000009, 0.000009, 0.99999};

  PriorKind prior_kind = PriorKind::kUniform;
  CategoricalField prior_rows;       // independent
  double prior_coupling = 0.0;       // chain
  Eigen::VectorXd prior_initial;     // chain
  Eigen::VectorXd prior_table;       // table

  std::uint64_t codebook_seed = 1;
  double codebook_scale = 1.0;
  DecoderKind decoder_kind = DecoderKind::kLinear;
  std::uint64_t decoder_seed = 2;
  int decoder_hidden = 8;

  OperatorKind operator_kind = OperatorKind::kIdentity;
  std::vector<int> mask_keep;
  int avg_factor = 2;
  int blur_len = 3;
  double blur_sigma = 1.0;
  double sigma_eta = 0.05;

  RunVariant variant = RunVariant::kStar;
  int inner_iters = 30;
  double forget_gamma = 0.3;
  double tau = 1.0;
  double eta_kl_base = 0.0003;
  double lr_base = 0.1;
  double lambda_lr = 0.0;
  double lambda_kl = 0.0;
  int n_mc = 1;

  bool inject_error = false;
  int inject_dim = 0;

  std::vector<std::uint64_t> seeds;
  std::string out_path = "results.csv";
  std::optional<double> psnr_peak;  // default: ground-truth dynamic range
  std::string trajectory_out;       // optional per-seed dump prefix
  std::string measurement_out;      // optional per-seed measurement dump

  static ExperimentConfig from_config(const KeyValueConfig& kv);
  void validate() const;

  TabularJointPrior build_prior() const;
  TransitionSchedule build_schedule_() const;
  Codebook build_codebook() const;
  std::unique_ptr<Decoder> build_decoder() const;
  LinearOperator build_operator() const;
  SolverConfig solver_config(Variant v, std::uint64_t seed) const;
};

}  // namespace g2d2
