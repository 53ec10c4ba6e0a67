#pragma once

// Experiment configuration, orchestration and persistence. Every experiment
// produces a flat list of ResultRecords; records never carry wall time so
// result tables are byte-identical for identical (config, seed).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diracrt/dirac_algebra.hpp"
#include "diracrt/grid.hpp"
#include "diracrt/random_field.hpp"
#include "diracrt/transport.hpp"
#include "diracrt/wave_solver.hpp"
#include "diracrt/wigner.hpp"

namespace diracrt {

inline constexpr const char* kCodeVersion = "0.3.0";
inline constexpr int kConfigSchemaVersion = 1;

struct GridConfig {
  double length = 6.283185307179586;
  std::size_t base_points = 256;
  double base_eps = 0.125;
  bool scale_with_eps = true;  // N proportional to 1 / eps
  std::vector<int> axes{2};    // resolved axes; the others are degenerate
};

struct PacketConfig {
  Vec3 center{0.0, 0.0, 3.141592653589793};
  Vec3 momentum{0.0, 0.0, 1.0};
  double width = 0.4;
  Branch branch = Branch::plus;
  int polarization = 1;
};

struct SolverSettings {
  double dt_over_eps = 0.05;
  double horizon = 1.0;
  double output_interval = 0.1;
  double alpha_time = 1.0;
  double norm_tolerance = 1e-10;
};

struct TransportSettings {
  std::size_t x_points = 32;
  double xi_radius = 4.0;
  double dt = 0.01;
  TransportMode mode = TransportMode::inelastic;
  double shell_width = 0.0;  // 0: automatic
};

struct FieldDemoSettings {
  std::size_t paths = 10000;
  std::size_t points = 32;
  double eps = 0.25;
  double horizon = 4.0;
};

struct ExperimentConfig {
  std::string experiment = "verify";
  GridConfig grid;
  std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
  std::uint64_t seed = 20240611;
  std::size_t ensemble = 16;
  PhysicalConstants constants;
  SpectrumDescriptor spectrum;
  PacketConfig packet;
  SolverSettings solver;
  TransportSettings transport;
  FieldDemoSettings field;
  std::size_t identity_points = 1000;
  unsigned threads = 1;
  std::string output = "out";

  /// Returns human-readable problems; empty means valid.
  std::vector<std::string> validate() const;
  /// Wave grid at a given eps.
  PeriodicGrid wave_grid(double eps) const;
};

ExperimentConfig default_config();
nlohmann::json config_to_json(const ExperimentConfig& c);
/// Fills defaults for missing keys; unknown keys and type errors are
/// reported in `problems` (the return value is then unusable).
ExperimentConfig config_from_json(const nlohmann::json& j, std::vector<std::string>& problems);
/// FNV-1a 64 of the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& c);

struct ResultRecord {
  std::string experiment;
  std::string metric;
  std::string params;   // "key=value;..." in fixed order
  double value = 0.0;
  double error = 0.0;   // statistical error, 0 when exact
  int pass = -1;        // -1 informational, 0 fail, 1 pass
  std::uint64_t seed = 0;
};

struct Timing {
  std::string label;
  double seconds = 0.0;
};

struct ResultSet {
  std::vector<ResultRecord> records;
  std::vector<Timing> timings;

  void add(ResultRecord r) { records.push_back(std::move(r)); }
  void append(const ResultSet& o);
  bool all_pass() const;
  std::size_t failures() const;
};

/// The fixed test-function battery: "one", "xi_gauss" and "x_mod".
std::vector<TestFunction> test_battery(const ExperimentConfig& c);

ResultSet run_identity_suite(const ExperimentConfig& c);

/// Per-eps ensemble of wave runs with both cross-mode and band pairings.
struct EnsembleMember {
  std::vector<Mat4> cross_integral;            // per test function, time-integrated
  std::vector<std::vector<double>> alpha_plus;  // [function][output]
  std::vector<std::vector<double>> alpha_minus;
  double max_norm_drift = 0.0;
};

struct EpsEnsemble {
  double eps = 0.0;
  PeriodicGrid grid;
  std::vector<double> output_times;
  std::vector<EnsembleMember> members;
  EnsembleMember free_run;  // same data without field
  std::vector<std::vector<double>> transport_plus;  // [function][output]
  std::vector<std::vector<double>> transport_free;  // zero-kernel transport
  double cross_at_zero = 0.0;   // plane-wave cross pairing at t = 0
  double initial_gap = 0.0;     // |wave - transport| band pairing at t = 0
  double wave_mass = 0.0;       // |Psi|^2
};

std::vector<EpsEnsemble> run_wave_ensembles(const ExperimentConfig& c, ResultSet& timings);
ResultSet cross_mode_records(const ExperimentConfig& c, const std::vector<EpsEnsemble>& ens);
ResultSet limit_records(const ExperimentConfig& c, const std::vector<EpsEnsemble>& ens);

ResultSet run_cross_mode_sweep(const ExperimentConfig& c);
ResultSet run_limit_comparison(const ExperimentConfig& c);
/// Standalone kinetic solve; writes trajectory CSV and kernels when
/// out_dir is non-empty.
ResultSet run_transport_demo(const ExperimentConfig& c, const std::string& out_dir);
/// Spectrum estimation on synthetic paths.
ResultSet run_field_demo(const ExperimentConfig& c);

ResultSet run_experiment(const ExperimentConfig& c, const std::string& out_dir);

/// results.csv (deterministic), timings.csv, manifest.json.
void write_outputs(const ResultSet& r, const ExperimentConfig& c, const std::string& dir);
std::string results_csv(const ResultSet& r);

/// Least-squares slope of log(y) against log(x) over positive y.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace diracrt
