#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "g2d2/config.hpp"
#include "g2d2/runner.hpp"

using namespace g2d2;

namespace {

const char* kTinyConfig = R"(
# tiny experiment
K = 3
d_z = 2
d_b = 2
d_x0 = 4
T = 3
schedule.alpha_bar_1 = 0.85
schedule.alpha_bar_T = 0.005
schedule.gamma_bar_1 = 0.1
schedule.gamma_bar_T = 0.99
prior.kind = chain
prior.coupling = 0.3
operator.name = blur
operator.blur_len = 3
operator.blur_sigma = 1.0
sigma_eta = 0.2
variant = star
inner_iters = 8
gamma = 0.3
tau = 0.5
eta_kl_base = 0.08
lr_base = 0.25
n_mc = 1
seeds = 1,2,3
)";

// Strips the wall_ms column (the last one) from every line.
std::vector<std::string> rows_without_walltime(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    rows.push_back(line.substr(0, cut));
  }
  return rows;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("key-value parsing") {
    const KeyValueConfig kv = KeyValueConfig::parse_string(
        "a = 1\nb.c = 2.5  # trailing comment\n\n# full comment\nname = xy z\n"
        "flag = true\nlist = 1, 2, 3\n");
    CHECK(kv.get_int("a") == 1);
    CHECK(kv.get_double("b.c") == 2.5);
    CHECK(kv.get_string("name") == "xy z");
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_int_list("list") == std::vector<int>{1, 2, 3});
    CHECK(kv.get_int("missing", 7) == 7);
    CHECK(kv.unused_keys().empty());
  }

  TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse_string("x = 1\nbogus line\n"),
                         doctest::Contains(":2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse_string("x = 1\nx = 2\n"),
                         doctest::Contains("duplicate"), std::runtime_error);
    const KeyValueConfig kv = KeyValueConfig::parse_string("x = abc\n");
    CHECK_THROWS_WITH_AS(kv.get_int("x"), doctest::Contains(":1"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(kv.get_double("y"), doctest::Contains("missing"),
                         std::runtime_error);
  }

  TEST_CASE("unused keys are reported") {
    const KeyValueConfig kv =
        KeyValueConfig::parse_string("used = 1\nunused = 2\n");
    (void)kv.get_int("used");
    CHECK(kv.unused_keys() == std::vector<std::string>{"unused"});
  }

  TEST_CASE("experiment config round trip") {
    const ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    CHECK(cfg.K == 3);
    CHECK(cfg.T == 3);
    CHECK(cfg.prior_kind == PriorKind::kChain);
    CHECK(cfg.operator_kind == OperatorKind::kBlur);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.variant == RunVariant::kStar);
    CHECK(cfg.build_operator().output_dim() == 4);
    CHECK(cfg.build_prior().support_size() == 9);
    CHECK(cfg.build_schedule_().num_steps() == 3);
    CHECK(cfg.build_codebook().size() == 3);
    CHECK(cfg.build_decoder()->output_dim() == 4);
  }

  TEST_CASE("config validation failures") {
    auto patch = [&](const std::string& extra) {
      return ExperimentConfig::from_config(
          KeyValueConfig::parse_string(std::string(kTinyConfig) + extra));
    };
    CHECK_THROWS(patch("K = 1\n"));
    CHECK_THROWS(patch("seeds =\n"));
    CHECK_THROWS(patch("variant = quantum\n"));
    CHECK_THROWS(patch("operator.name = average\noperator.avg_factor = 3\n"));
    CHECK_THROWS(patch("inject.enabled = true\ninject.dim = 5\n"));
  }

  TEST_CASE("run writes one ordered row per seed plus a header") {
    const ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    RunOptions opts;
    opts.workers = 2;
    opts.out_override = "test_run_a.csv";
    std::ostringstream log;
    const int rows = run_experiment(cfg, opts, log);
    CHECK(rows == 3);
    const std::vector<std::string> got = rows_without_walltime("test_run_a.csv");
    REQUIRE(got.size() == 4);
    CHECK(got[0] + ",wall_ms" == std::string(kCsvHeader));
    CHECK(got[1].substr(0, 7) == "1,star,");
    CHECK(got[2].substr(0, 7) == "2,star,");
    CHECK(got[3].substr(0, 7) == "3,star,");
    std::remove("test_run_a.csv");
  }

  TEST_CASE("identical runs agree except for the wall-time column") {
    const ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    std::ostringstream log;
    RunOptions a;
    a.workers = 3;
    a.out_override = "test_run_b1.csv";
    RunOptions b;
    b.workers = 1;
    b.out_override = "test_run_b2.csv";
    run_experiment(cfg, a, log);
    run_experiment(cfg, b, log);
    CHECK(rows_without_walltime("test_run_b1.csv") ==
          rows_without_walltime("test_run_b2.csv"));
    std::remove("test_run_b1.csv");
    std::remove("test_run_b2.csv");
  }

  TEST_CASE("variant both produces paired rows; seed offset shifts seeds") {
    ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    cfg.variant = RunVariant::kBoth;
    RunOptions opts;
    opts.seed_offset = 10;
    opts.out_override = "test_run_c.csv";
    std::ostringstream log;
    const int rows = run_experiment(cfg, opts, log);
    CHECK(rows == 6);
    const std::vector<std::string> got = rows_without_walltime("test_run_c.csv");
    REQUIRE(got.size() == 7);
    CHECK(got[1].substr(0, 8) == "11,star,");
    CHECK(got[2].substr(0, 10) == "11,markov,");
    CHECK(got[3].substr(0, 8) == "12,star,");
    std::remove("test_run_c.csv");
  }

  TEST_CASE("paired early-error run favors the star variant") {
    ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    cfg.d_z = 4;
    cfg.d_x0 = 4;
    cfg.T = 5;
    cfg.endpoints = {0.75, 0.004, 0.2, 0.99};
    cfg.operator_kind = OperatorKind::kIdentity;
    cfg.sigma_eta = 0.15;
    cfg.eta_kl_base = 0.045;
    cfg.inner_iters = 25;
    cfg.variant = RunVariant::kBoth;
    cfg.inject_error = true;
    cfg.inject_dim = 0;
    cfg.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);

    RunOptions opts;
    opts.out_override = "test_run_paired.csv";
    std::ostringstream log;
    run_experiment(cfg, opts, log);

    std::ifstream in("test_run_paired.csv");
    std::string line;
    std::getline(in, line);  // header
    double star = 0.0, markov = 0.0;
    while (std::getline(in, line)) {
      // mse is column 9 (1-based).
      std::istringstream row(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(row, cell, ',')) cells.push_back(cell);
      if (cells[1] == "star") star += std::stod(cells[8]);
      else markov += std::stod(cells[8]);
    }
    CHECK(star <= markov);
    std::remove("test_run_paired.csv");
  }

  TEST_CASE("trajectory and measurement dumps are written on request") {
    ExperimentConfig cfg =
        ExperimentConfig::from_config(KeyValueConfig::parse_string(kTinyConfig));
    cfg.seeds = {3};
    cfg.trajectory_out = "test_traj";
    cfg.measurement_out = "test_meas";
    RunOptions opts;
    opts.out_override = "test_run_dump.csv";
    std::ostringstream log;
    run_experiment(cfg, opts, log);

    std::ifstream traj("test_traj_seed3_star.txt");
    REQUIRE(traj);
    std::stringstream buf;
    buf << traj.rdbuf();
    CHECK(buf.str().find("step t=3") != std::string::npos);
    CHECK(buf.str().find("z0 =") != std::string::npos);

    std::ifstream meas("test_meas_seed3.txt");
    REQUIRE(meas);
    int lines = 0;
    std::string line;
    while (std::getline(meas, line)) ++lines;
    CHECK(lines == 4);  // d_y = d_x0 for the blur operator

    std::remove("test_run_dump.csv");
    std::remove("test_traj_seed3_star.txt");
    std::remove("test_meas_seed3.txt");
  }

  TEST_CASE("verify subcommand dispatch") {
    std::ostringstream os;
    CHECK(run_verify("schedule", os) == 0);
    CHECK(run_verify("nonsense", os) == 2);
    CHECK(os.str().find("PASS") != std::string::npos);
  }
}
