#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diracrt/harness.hpp"

using namespace diracrt;

namespace {

ExperimentConfig tiny(const std::string& experiment) {
  ExperimentConfig c = default_config();
  c.experiment = experiment;
  c.eps = {0.25, 0.125, 0.0625};
  c.grid.base_points = 64;
  c.grid.base_eps = 0.25;
  c.ensemble = 8;
  c.solver.horizon = 0.2;
  c.solver.output_interval = 0.1;
  c.transport.x_points = 16;
  c.transport.xi_radius = 3.9;
  c.field.paths = 200;
  c.identity_points = 50;
  return c;
}

bool has_problem(const std::vector<std::string>& p, const std::string& needle) {
  for (const auto& s : p)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

const ResultRecord* find(const ResultSet& r, const std::string& metric, const std::string& params = "") {
  for (const auto& x : r.records)
    if (x.metric == metric && (params.empty() || x.params == params)) return &x;
  return nullptr;
}

}  // namespace

TEST_CASE("default config is valid and survives a JSON round trip") {
  const ExperimentConfig c = default_config();
  CHECK(c.validate().empty());
  std::vector<std::string> problems;
  const ExperimentConfig back = config_from_json(config_to_json(c), problems);
  CHECK(problems.empty());
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("partial configs fill defaults") {
  std::vector<std::string> problems;
  const auto c = config_from_json(nlohmann::json::parse(R"({"seed": 7, "transport": {"mode": "elastic"}})"), problems);
  CHECK(problems.empty());
  CHECK(c.seed == 7);
  CHECK(c.transport.mode == TransportMode::elastic);
  CHECK(c.ensemble == default_config().ensemble);
}

TEST_CASE("unknown keys and wrong types are reported by name") {
  std::vector<std::string> problems;
  (void)config_from_json(nlohmann::json::parse(R"({"sede": 1, "solver": {"dt": 0.1}, "ensemble": "many"})"), problems);
  CHECK(has_problem(problems, "'sede'"));
  CHECK(has_problem(problems, "solver: unknown key 'dt'"));
  CHECK(has_problem(problems, "config.ensemble"));
  problems.clear();
  (void)config_from_json(nlohmann::json::parse(R"({"packet": {"branch": "sideways"}})"), problems);
  CHECK(has_problem(problems, "packet.branch"));
  problems.clear();
  (void)config_from_json(nlohmann::json::parse(R"({"schema_version": 9})"), problems);
  CHECK(has_problem(problems, "schema_version"));
}

TEST_CASE("validation rejects inconsistent settings") {
  ExperimentConfig c = default_config();
  c.eps = {0.125, 0.125};
  CHECK(has_problem(c.validate(), "strictly decreasing"));

  c = default_config();
  c.experiment = "compare";
  c.eps = {0.125, 0.0625};
  CHECK(has_problem(c.validate(), "at least 3"));

  c = default_config();
  c.packet.momentum = Vec3(0, 0, 1.01);
  CHECK(has_problem(c.validate(), "momentum lattice"));

  c = default_config();
  c.eps = {0.125, 0.09};
  CHECK(has_problem(c.validate(), "even integer"));

  c = default_config();
  c.solver.horizon = 1.05;
  CHECK(has_problem(c.validate(), "multiple"));

  c = default_config();
  c.transport.xi_radius = 10.0;
  CHECK(has_problem(c.validate(), "xi_radius"));

  c = default_config();
  c.solver.alpha_time = 1.5;
  CHECK(has_problem(c.validate(), "alpha_time"));

  c = default_config();
  c.experiment = "bogus";
  CHECK(!c.validate().empty());
}

TEST_CASE("config hash depends on every field") {
  ExperimentConfig a = default_config(), b = default_config();
  CHECK(config_hash(a) == config_hash(b));
  b.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.spectrum.width = 0.6;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("wave grid scales with 1 / eps on the resolved axes only") {
  const ExperimentConfig c = default_config();
  const PeriodicGrid g = c.wave_grid(1.0 / 32);
  CHECK(g.points[2] == 1024);
  CHECK(g.points[0] == 1);
  CHECK(g.points[1] == 1);
}

TEST_CASE("log-log slope of a power law") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::isnan(loglog_slope({1.0}, {1.0})));
}

TEST_CASE("test battery") {
  const auto fs = test_battery(default_config());
  REQUIRE(fs.size() == 3);
  CHECK(fs[0].name == "one");
  CHECK(fs[0](Vec3(1, 2, 3), Vec3(4, 5, 6)) == 1.0);
  CHECK(fs[1](Vec3::Zero(), Vec3(0, 0, 1)) == doctest::Approx(1.0));
  CHECK(fs[2](Vec3(0, 0, 3.141592653589793), Vec3(0, 0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("identity suite passes") {
  const ResultSet r = run_identity_suite(tiny("verify"));
  CHECK(r.failures() == 0);
  CHECK(r.records.size() > 10);
}

TEST_CASE("tiny comparison: zero-field agreement and reproducibility") {
  ExperimentConfig c = tiny("compare");
  REQUIRE(c.validate().empty());
  const ResultSet a = run_limit_comparison(c);
  for (double eps : c.eps) {
    std::ostringstream p;
    p.precision(17);
    p << "eps=" << eps;
    const auto* free = find(a, "free_discrepancy", p.str());
    REQUIRE(free != nullptr);
    CHECK(free->value < 1e-3);
    const auto* gap = find(a, "initial_pairing_gap", p.str());
    REQUIRE(gap != nullptr);
    CHECK(gap->value < 1e-8);
  }
  const ResultSet b = run_limit_comparison(c);
  CHECK(results_csv(a) == results_csv(b));
  c.threads = 3;
  CHECK(results_csv(run_limit_comparison(c)) == results_csv(a));
  c.seed += 1;
  CHECK(results_csv(run_limit_comparison(c)) != results_csv(a));
}

TEST_CASE("tiny sweep reports every function and eps") {
  const ExperimentConfig c = tiny("sweep");
  const ResultSet r = run_cross_mode_sweep(c);
  std::size_t n = 0;
  for (const auto& x : r.records) n += x.metric == "cross_pairing" ? 1 : 0;
  CHECK(n == c.eps.size() * 3);
  const auto* oracle = find(r, "spectral_vs_dense_pairing");
  REQUIRE(oracle != nullptr);
  CHECK(oracle->pass == 1);
  for (const auto& x : r.records)
    if (x.metric == "cross_pairing_t0_plane_wave" || x.metric == "norm_drift_max") CHECK(x.pass == 1);
}

TEST_CASE("outputs: results, timings and manifest") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "diracrt_harness_out";
  fs::remove_all(dir);
  const ExperimentConfig c = tiny("field");
  const ResultSet r = run_experiment(c, dir.string());
  write_outputs(r, c, dir.string());
  std::ifstream in(dir / "results.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment,metric,params,value,error,pass,seed,version");
  CHECK(fs::exists(dir / "timings.csv"));
  std::ifstream mj(dir / "manifest.json");
  const auto m = nlohmann::json::parse(mj);
  CHECK(m["code_version"] == kCodeVersion);
  CHECK(m["config"]["seed"] == c.seed);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  fs::remove_all(dir);
}

TEST_CASE("transport demo writes its trajectory and kernels") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "diracrt_transport_out";
  fs::remove_all(dir);
  const ExperimentConfig c = tiny("transport");
  const ResultSet r = run_experiment(c, dir.string());
  CHECK(r.failures() == 0);
  CHECK(fs::exists(dir / "trajectory.csv"));
  const auto lat = TransportLattice::for_wave_grid(c.wave_grid(c.eps.front()), c.eps.front(),
                                                  c.transport.xi_radius, c.transport.x_points);
  const auto k = read_kernels((dir / "kernels.bin").string(), lat, c.constants);
  CHECK(k.k_minus.rows() == static_cast<long>(lat->nxi()));
  fs::remove_all(dir);
}

TEST_CASE("unknown experiment throws") {
  ExperimentConfig c = tiny("verify");
  c.experiment = "nope";
  CHECK_THROWS_AS(run_experiment(c, ""), std::invalid_argument);
}
