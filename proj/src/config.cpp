#include "g2d2/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace g2d2 {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text,
                                            const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": empty key");
    if (cfg.entries_.count(key))
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": duplicate key '" + key + "'");
    cfg.entries_[key] = Entry{value, lineno, false};
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

const KeyValueConfig::Entry& KeyValueConfig::lookup(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end())
    throw std::runtime_error(origin_ + ": missing required key '" + key + "'");
  it->second.used = true;
  return it->second;
}

void KeyValueConfig::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const int line = it == entries_.end() ? 0 : it->second.line;
  throw std::runtime_error(origin_ + ":" + std::to_string(line) + ": key '" +
                           key + "': " + what);
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  return lookup(key).value;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& dflt) const {
  return has(key) ? get_string(key) : dflt;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string& v = lookup(key).value;
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + v + "'");
  }
}

double KeyValueConfig::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}

int KeyValueConfig::get_int(const std::string& key) const {
  const std::string& v = lookup(key).value;
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<int>(n);
  } catch (const std::exception&) {
    fail(key, "expected an integer, got '" + v + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key, int dflt) const {
  return has(key) ? get_int(key) : dflt;
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  std::string v = lookup(key).value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(key, "expected a boolean, got '" + v + "'");
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(lookup(key).value, ',')) {
    if (part.empty()) continue;
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      fail(key, "expected a comma-separated number list");
    }
  }
  return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& part : split(lookup(key).value, ',')) {
    if (part.empty()) continue;
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      fail(key, "expected a comma-separated integer list");
    }
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_)
    if (!entry.used) out.push_back(key);
  return out;
}

namespace {

CategoricalField parse_rows(const KeyValueConfig& kv, const std::string& key,
                            int d_z, int K) {
  const std::vector<std::string> rows = split(kv.get_string(key), ';');
  if (static_cast<int>(rows.size()) != d_z)
    throw std::runtime_error("key '" + key + "': expected " +
                             std::to_string(d_z) + " ';'-separated rows");
  CategoricalField f(d_z, K);
  for (int i = 0; i < d_z; ++i) {
    const std::vector<std::string> cells = split(rows[i], ',');
    if (static_cast<int>(cells.size()) != K)
      throw std::runtime_error("key '" + key + "': row " + std::to_string(i) +
                               " must have " + std::to_string(K) + " entries");
    for (int k = 0; k < K; ++k) f(i, k) = std::stod(cells[k]);
  }
  return f;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.K = kv.get_int("K");
  c.d_z = kv.get_int("d_z");
  c.d_b = kv.get_int("d_b", c.d_b);
  c.d_x0 = kv.get_int("d_x0");

  c.T = kv.get_int("T");
  c.endpoints.alpha_bar_1 = kv.get_double("schedule.alpha_bar_1", 0.99999);
  c.endpoints.alpha_bar_T = kv.get_double("schedule.alpha_bar_T", 0.000009);
  c.endpoints.gamma_bar_1 = kv.get_double("schedule.gamma_bar_1", 0.000009);
  c.endpoints.gamma_bar_T = kv.get_double("schedule.gamma_bar_T", 0.99999);

  const std::string prior = kv.get_string("prior.kind", "uniform");
  if (prior == "uniform") {
    c.prior_kind = PriorKind::kUniform;
  } else if (prior == "independent") {
    c.prior_kind = PriorKind::kIndependent;
    c.prior_rows = parse_rows(kv, "prior.rows", c.d_z, c.K);
  } else if (prior == "chain") {
    c.prior_kind = PriorKind::kChain;
    c.prior_coupling = kv.get_double("prior.coupling");
    if (kv.has("prior.initial")) {
      const std::vector<double> init = kv.get_double_list("prior.initial");
      c.prior_initial = Eigen::Map<const Eigen::VectorXd>(
          init.data(), static_cast<Eigen::Index>(init.size()));
    } else {
      c.prior_initial = Eigen::VectorXd::Constant(c.K, 1.0 / c.K);
    }
  } else if (prior == "table") {
    c.prior_kind = PriorKind::kTable;
    const std::vector<double> table = kv.get_double_list("prior.table");
    c.prior_table = Eigen::Map<const Eigen::VectorXd>(
        table.data(), static_cast<Eigen::Index>(table.size()));
  } else {
    throw std::runtime_error("unknown prior.kind '" + prior + "'");
  }

  c.codebook_seed = static_cast<std::uint64_t>(kv.get_int("codebook.seed", 1));
  c.codebook_scale = kv.get_double("codebook.scale", 1.0);
  const std::string dec = kv.get_string("decoder.kind", "linear");
  if (dec == "linear") {
    c.decoder_kind = DecoderKind::kLinear;
  } else if (dec == "mlp") {
    c.decoder_kind = DecoderKind::kMlp;
    c.decoder_hidden = kv.get_int("decoder.hidden", 8);
  } else {
    throw std::runtime_error("unknown decoder.kind '" + dec + "'");
  }
  c.decoder_seed = static_cast<std::uint64_t>(kv.get_int("decoder.seed", 2));

  const std::string op = kv.get_string("operator.name", "identity");
  if (op == "identity") {
    c.operator_kind = OperatorKind::kIdentity;
  } else if (op == "masking") {
    c.operator_kind = OperatorKind::kMasking;
    c.mask_keep = kv.get_int_list("operator.mask_keep");
  } else if (op == "average") {
    c.operator_kind = OperatorKind::kAverage;
    c.avg_factor = kv.get_int("operator.avg_factor", 2);
  } else if (op == "blur") {
    c.operator_kind = OperatorKind::kBlur;
    c.blur_len = kv.get_int("operator.blur_len", 3);
    c.blur_sigma = kv.get_double("operator.blur_sigma", 1.0);
  } else {
    throw std::runtime_error("unknown operator.name '" + op + "'");
  }
  c.sigma_eta = kv.get_double("sigma_eta", 0.05);

  const std::string variant = kv.get_string("variant", "star");
  if (variant == "star") c.variant = RunVariant::kStar;
  else if (variant == "markov") c.variant = RunVariant::kMarkov;
  else if (variant == "both") c.variant = RunVariant::kBoth;
  else throw std::runtime_error("unknown variant '" + variant + "'");

  c.inner_iters = kv.get_int("inner_iters", 30);
  c.forget_gamma = kv.get_double("gamma", 0.3);
  c.tau = kv.get_double("tau", 1.0);
  c.eta_kl_base = kv.get_double("eta_kl_base", 0.0003);
  c.lr_base = kv.get_double("lr_base", 0.1);
  c.lambda_lr = kv.get_double("lambda_lr", 0.0);
  c.lambda_kl = kv.get_double("lambda_kl", 0.0);
  c.n_mc = kv.get_int("n_mc", 1);

  c.inject_error = kv.get_bool("inject.enabled", false);
  c.inject_dim = kv.get_int("inject.dim", 0);

  for (int s : kv.get_int_list("seeds"))
    c.seeds.push_back(static_cast<std::uint64_t>(s));
  c.out_path = kv.get_string("out", "results.csv");
  if (kv.has("psnr_peak")) c.psnr_peak = kv.get_double("psnr_peak");
  c.trajectory_out = kv.get_string("trajectory_out", "");
  c.measurement_out = kv.get_string("measurement_out", "");

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (K < 2) throw std::runtime_error("K must be >= 2");
  if (d_z < 1 || d_b < 1 || d_x0 < 1)
    throw std::runtime_error("dimensions must be >= 1");
  if (seeds.empty()) throw std::runtime_error("seed list must be non-empty");
  if (inject_error && (inject_dim < 0 || inject_dim >= d_z))
    throw std::runtime_error("inject.dim out of range");
  if (operator_kind == OperatorKind::kMasking) {
    for (int idx : mask_keep)
      if (idx < 0 || idx >= d_x0)
        throw std::runtime_error("operator.mask_keep index out of range");
  }
  if (operator_kind == OperatorKind::kAverage && d_x0 % avg_factor != 0)
    throw std::runtime_error("d_x0 must be divisible by operator.avg_factor");
  solver_config(Variant::kStar, 0).validate();
}

TabularJointPrior ExperimentConfig::build_prior() const {
  switch (prior_kind) {
    case PriorKind::kUniform:
      return make_uniform_prior(K, d_z);
    case PriorKind::kIndependent:
      return make_independent_prior(prior_rows);
    case PriorKind::kChain:
      return make_chain_prior(K, d_z, prior_coupling, prior_initial);
    case PriorKind::kTable:
      return make_table_prior(K, d_z, prior_table, /*normalize=*/true);
  }
  throw std::logic_error("unreachable prior kind");
}

TransitionSchedule ExperimentConfig::build_schedule_() const {
  return build_schedule(T, K, endpoints);
}

Codebook ExperimentConfig::build_codebook() const {
  Rng rng(codebook_seed);
  return random_codebook(K, d_b, rng, codebook_scale);
}

std::unique_ptr<Decoder> ExperimentConfig::build_decoder() const {
  Rng rng(decoder_seed);
  if (decoder_kind == DecoderKind::kLinear)
    return random_linear_decoder(d_z, d_b, d_x0, rng);
  return random_mlp_decoder(d_z, d_b, d_x0, decoder_hidden, rng);
}

LinearOperator ExperimentConfig::build_operator() const {
  switch (operator_kind) {
    case OperatorKind::kIdentity:
      return make_identity_operator(d_x0);
    case OperatorKind::kMasking:
      return make_masking_operator(d_x0, mask_keep);
    case OperatorKind::kAverage:
      return make_average_operator(d_x0, avg_factor);
    case OperatorKind::kBlur:
      return make_blur_operator(d_x0, blur_len, blur_sigma);
  }
  throw std::logic_error("unreachable operator kind");
}

SolverConfig ExperimentConfig::solver_config(Variant v,
                                             std::uint64_t seed) const {
  SolverConfig s;
  s.T = T;
  s.inner_iters = inner_iters;
  s.forget_gamma = forget_gamma;
  s.tau = tau;
  s.eta_kl_base = eta_kl_base;
  s.lr_base = lr_base;
  s.lambda_lr = lambda_lr;
  s.lambda_kl = lambda_kl;
  s.n_mc = n_mc;
  s.seed = seed;
  s.variant = v;
  return s;
}

}  // namespace g2d2
