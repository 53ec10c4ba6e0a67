#include "diracrt/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "diracrt/parallel.hpp"
#include "diracrt/rng.hpp"

namespace diracrt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eps_param(double eps) { return "eps=" + fmt(eps); }

bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol * std::max(1.0, std::abs(v)); }

ResultRecord rec(const std::string& exp, const std::string& metric, const std::string& params,
                 double value, double error, int pass, std::uint64_t seed) {
  return ResultRecord{exp, metric, params, value, error, pass, seed};
}

int verdict(bool ok) { return ok ? 1 : 0; }

std::string branch_name(Branch b) { return b == Branch::plus ? "plus" : "minus"; }

// Mean and standard error of the mean.
std::pair<double, double> mean_sem(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s /= static_cast<double>(v.size() - 1);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Steps per unit so that output times are hit exactly.
struct StepPlan {
  double dt = 0.0;
  std::size_t per_output = 1;
  std::size_t outputs = 0;
};

StepPlan step_plan(const ExperimentConfig& c, double eps) {
  StepPlan p;
  const double target = c.solver.dt_over_eps * eps;
  p.per_output = static_cast<std::size_t>(std::ceil(c.solver.output_interval / target - 1e-9));
  p.dt = c.solver.output_interval / static_cast<double>(p.per_output);
  p.outputs = static_cast<std::size_t>(std::llround(c.solver.horizon / c.solver.output_interval));
  return p;
}

WavepacketSpec packet_spec(const ExperimentConfig& c) {
  WavepacketSpec s;
  s.center = c.packet.center;
  s.momentum = c.packet.momentum;
  s.width = c.packet.width;
  s.branch = c.packet.branch;
  s.polarization = c.packet.polarization;
  return s;
}

}  // namespace

// ---------------------------------------------------------------- config

PeriodicGrid ExperimentConfig::wave_grid(double e) const {
  PeriodicGrid g;
  g.points = {1, 1, 1};
  g.lengths = {1.0, 1.0, 1.0};
  const std::size_t n = grid.scale_with_eps
                            ? static_cast<std::size_t>(std::llround(grid.base_points * grid.base_eps / e))
                            : grid.base_points;
  for (int a : grid.axes) {
    g.points[a] = n;
    g.lengths[a] = grid.length;
  }
  return g;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> p;
  static const std::set<std::string> experiments{"verify", "sweep", "compare", "transport", "field"};
  if (!experiments.count(experiment)) p.push_back("experiment must be one of verify, sweep, compare, transport, field");
  if (eps.empty()) p.push_back("eps: list must not be empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) p.push_back("eps[" + std::to_string(i) + "] must be > 0");
    if (i > 0 && !(eps[i] < eps[i - 1])) p.push_back("eps: list must be strictly decreasing");
  }
  if ((experiment == "sweep" || experiment == "compare") && eps.size() < 3)
    p.push_back("eps: sweep and compare need at least 3 values");
  if ((experiment == "sweep" || experiment == "compare") && ensemble < 8)
    p.push_back("ensemble: sweep and compare need at least 8 members");
  if (ensemble < 1) p.push_back("ensemble must be >= 1");
  if (threads < 1) p.push_back("threads must be >= 1");
  if (!(grid.length > 0.0)) p.push_back("grid.length must be > 0");
  if (grid.axes.empty()) p.push_back("grid.axes must name at least one axis");
  std::set<int> seen;
  for (int a : grid.axes) {
    if (a < 0 || a > 2) p.push_back("grid.axes entries must be 0, 1 or 2");
    else if (!seen.insert(a).second) p.push_back("grid.axes entries must be distinct");
  }
  if (grid.base_points < 4 || grid.base_points % 2) p.push_back("grid.base_points must be even and >= 4");
  if (!(grid.base_eps > 0.0)) p.push_back("grid.base_eps must be > 0");
  try {
    constants.validate();
  } catch (const std::exception& e) {
    p.push_back(std::string("constants: ") + e.what());
  }
  try {
    spectrum.validate();
  } catch (const std::exception& e) {
    p.push_back(std::string("spectrum: ") + e.what());
  }
  if (!(solver.dt_over_eps > 0.0)) p.push_back("solver.dt_over_eps must be > 0");
  if (!(solver.horizon > 0.0) || !(solver.output_interval > 0.0))
    p.push_back("solver.horizon and solver.output_interval must be > 0");
  else if (!near_integer(solver.horizon / solver.output_interval))
    p.push_back("solver.horizon must be a multiple of solver.output_interval");
  if (!(solver.alpha_time > 0.0 && solver.alpha_time <= 1.0)) p.push_back("solver.alpha_time must lie in (0, 1]");
  if (!(solver.norm_tolerance > 0.0)) p.push_back("solver.norm_tolerance must be > 0");
  if (!(packet.width > 0.0)) p.push_back("packet.width must be > 0");
  if (packet.polarization != 1 && packet.polarization != 2) p.push_back("packet.polarization must be 1 or 2");
  if (transport.x_points < 1) p.push_back("transport.x_points must be >= 1");
  if (!(transport.xi_radius > 0.0)) p.push_back("transport.xi_radius must be > 0");
  if (!(transport.dt > 0.0)) p.push_back("transport.dt must be > 0");
  if (field.paths < 2 || field.points < 4 || field.points % 2 || !(field.eps > 0.0) || !(field.horizon > 0.0))
    p.push_back("field: paths >= 2, even points >= 4, eps > 0 and horizon > 0 required");
  if (!p.empty()) return p;

  // Commensurability of every lattice with every eps.
  for (double e : eps) {
    const std::string tag = " at eps=" + fmt(e);
    const double n = grid.scale_with_eps ? grid.base_points * grid.base_eps / e : grid.base_points;
    if (!near_integer(n) || std::llround(n) % 2)
      p.push_back("grid: base_points * base_eps / eps must be an even integer" + tag);
    const PeriodicGrid g = wave_grid(e);
    for (int a = 0; a < 3; ++a) {
      const bool resolved = !g.degenerate(a);
      if (!resolved && packet.momentum[a] != 0.0)
        p.push_back("packet.momentum must vanish on unresolved axes");
      if (resolved && !near_integer(packet.momentum[a] * grid.length / (kTwoPi * e)))
        p.push_back("packet.momentum is not on the momentum lattice 2 pi eps n / L" + tag);
      if (!resolved) continue;
      const double dp = kTwoPi * e / grid.length;
      if (2 * static_cast<long>(std::floor(spectrum.band_limit / dp + 1e-12)) >= static_cast<long>(g.points[a]))
        p.push_back("spectrum.band_limit exceeds the grid resolution" + tag);
      const double xi_max = kPi * e * static_cast<double>(g.points[a] / 2) / grid.length;
      if (transport.xi_radius >= xi_max) p.push_back("transport.xi_radius exceeds the Wigner lattice" + tag);
      if (transport.x_points > g.points[a] || (transport.x_points > 1 && transport.x_points % 2))
        p.push_back("transport.x_points must be 1 or even and not exceed the wave grid" + tag);
      if (packet.width < 2.0 * g.spacing(a)) p.push_back("packet.width is below two grid spacings" + tag);
    }
    const double max_energy = constants.c * std::sqrt(constants.mc() * constants.mc() +
        std::pow(kPi * e * static_cast<double>(g.points[grid.axes[0]]) / grid.length, 2) *
            static_cast<double>(grid.axes.size()));
    if (max_energy * solver.dt_over_eps > kPi) p.push_back("solver.dt_over_eps leaves the free phase above pi" + tag);
  }
  return p;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.spectrum.amplitude = {2.0, 2.0, 2.0, 2.0};
  c.spectrum.width = 0.5;
  c.spectrum.band_limit = 1.5;
  c.spectrum.jump_rate = 1.0;
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["experiment"] = c.experiment;
  j["grid"] = {{"length", c.grid.length},
               {"base_points", c.grid.base_points},
               {"base_eps", c.grid.base_eps},
               {"scale_with_eps", c.grid.scale_with_eps},
               {"axes", c.grid.axes}};
  j["eps"] = c.eps;
  j["seed"] = c.seed;
  j["ensemble"] = c.ensemble;
  j["constants"] = {{"m0", c.constants.m0}, {"c", c.constants.c}, {"e", c.constants.e}};
  j["spectrum"] = spectrum_to_json(c.spectrum);
  j["packet"] = {{"center", {c.packet.center[0], c.packet.center[1], c.packet.center[2]}},
                 {"momentum", {c.packet.momentum[0], c.packet.momentum[1], c.packet.momentum[2]}},
                 {"width", c.packet.width},
                 {"branch", branch_name(c.packet.branch)},
                 {"polarization", c.packet.polarization}};
  j["solver"] = {{"dt_over_eps", c.solver.dt_over_eps},
                 {"horizon", c.solver.horizon},
                 {"output_interval", c.solver.output_interval},
                 {"alpha_time", c.solver.alpha_time},
                 {"norm_tolerance", c.solver.norm_tolerance}};
  j["transport"] = {{"x_points", c.transport.x_points},
                    {"xi_radius", c.transport.xi_radius},
                    {"dt", c.transport.dt},
                    {"mode", c.transport.mode == TransportMode::inelastic ? "inelastic" : "elastic"},
                    {"shell_width", c.transport.shell_width}};
  j["field"] = {{"paths", c.field.paths},
                {"points", c.field.points},
                {"eps", c.field.eps},
                {"horizon", c.field.horizon}};
  j["identity_points"] = c.identity_points;
  j["threads"] = c.threads;
  j["output"] = c.output;
  return j;
}

namespace {

void check_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& allowed,
                std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back(where + " must be an object");
    return;
  }
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) problems.push_back(where + ": unknown key '" + k + "'");
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst, const std::string& where,
          std::vector<std::string>& problems) {
  if (!j.is_object() || !j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const std::exception&) {
    problems.push_back(where + "." + key + ": wrong type");
  }
}

void take_vec3(const nlohmann::json& j, const char* key, Vec3& dst, const std::string& where,
               std::vector<std::string>& problems) {
  std::array<double, 3> a{dst[0], dst[1], dst[2]};
  take(j, key, a, where, problems);
  dst = Vec3(a[0], a[1], a[2]);
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, std::vector<std::string>& problems) {
  ExperimentConfig c = default_config();
  check_keys(j, "config",
             {"schema_version", "experiment", "grid", "eps", "seed", "ensemble", "constants", "spectrum",
              "packet", "solver", "transport", "field", "identity_points", "threads", "output"},
             problems);
  if (!j.is_object()) return c;
  int version = kConfigSchemaVersion;
  take(j, "schema_version", version, "config", problems);
  if (version != kConfigSchemaVersion)
    problems.push_back("config.schema_version: expected " + std::to_string(kConfigSchemaVersion));
  take(j, "experiment", c.experiment, "config", problems);
  take(j, "eps", c.eps, "config", problems);
  take(j, "seed", c.seed, "config", problems);
  take(j, "ensemble", c.ensemble, "config", problems);
  take(j, "identity_points", c.identity_points, "config", problems);
  take(j, "threads", c.threads, "config", problems);
  take(j, "output", c.output, "config", problems);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, "grid", {"length", "base_points", "base_eps", "scale_with_eps", "axes"}, problems);
    take(g, "length", c.grid.length, "grid", problems);
    take(g, "base_points", c.grid.base_points, "grid", problems);
    take(g, "base_eps", c.grid.base_eps, "grid", problems);
    take(g, "scale_with_eps", c.grid.scale_with_eps, "grid", problems);
    take(g, "axes", c.grid.axes, "grid", problems);
  }
  if (j.contains("constants")) {
    const auto& k = j["constants"];
    check_keys(k, "constants", {"m0", "c", "e"}, problems);
    take(k, "m0", c.constants.m0, "constants", problems);
    take(k, "c", c.constants.c, "constants", problems);
    take(k, "e", c.constants.e, "constants", problems);
  }
  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    check_keys(s, "spectrum",
               {"schema", "profile", "amplitude", "width", "band_limit", "jump_rate", "table_radius", "table_value"},
               problems);
    try {
      nlohmann::json merged = spectrum_to_json(c.spectrum);
      for (const auto& [k, v] : s.items()) merged[k] = v;
      c.spectrum = spectrum_from_json(merged);
    } catch (const std::exception& e) {
      problems.push_back(std::string("spectrum: ") + e.what());
    }
  }
  if (j.contains("packet")) {
    const auto& p = j["packet"];
    check_keys(p, "packet", {"center", "momentum", "width", "branch", "polarization"}, problems);
    take_vec3(p, "center", c.packet.center, "packet", problems);
    take_vec3(p, "momentum", c.packet.momentum, "packet", problems);
    take(p, "width", c.packet.width, "packet", problems);
    take(p, "polarization", c.packet.polarization, "packet", problems);
    std::string b = branch_name(c.packet.branch);
    take(p, "branch", b, "packet", problems);
    if (b == "plus") c.packet.branch = Branch::plus;
    else if (b == "minus") c.packet.branch = Branch::minus;
    else problems.push_back("packet.branch must be plus or minus");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver", {"dt_over_eps", "horizon", "output_interval", "alpha_time", "norm_tolerance"}, problems);
    take(s, "dt_over_eps", c.solver.dt_over_eps, "solver", problems);
    take(s, "horizon", c.solver.horizon, "solver", problems);
    take(s, "output_interval", c.solver.output_interval, "solver", problems);
    take(s, "alpha_time", c.solver.alpha_time, "solver", problems);
    take(s, "norm_tolerance", c.solver.norm_tolerance, "solver", problems);
  }
  if (j.contains("transport")) {
    const auto& t = j["transport"];
    check_keys(t, "transport", {"x_points", "xi_radius", "dt", "mode", "shell_width"}, problems);
    take(t, "x_points", c.transport.x_points, "transport", problems);
    take(t, "xi_radius", c.transport.xi_radius, "transport", problems);
    take(t, "dt", c.transport.dt, "transport", problems);
    take(t, "shell_width", c.transport.shell_width, "transport", problems);
    std::string m = "inelastic";
    take(t, "mode", m, "transport", problems);
    if (m == "inelastic") c.transport.mode = TransportMode::inelastic;
    else if (m == "elastic") c.transport.mode = TransportMode::elastic;
    else problems.push_back("transport.mode must be inelastic or elastic");
  }
  if (j.contains("field")) {
    const auto& f = j["field"];
    check_keys(f, "field", {"paths", "points", "eps", "horizon"}, problems);
    take(f, "paths", c.field.paths, "field", problems);
    take(f, "points", c.field.points, "field", problems);
    take(f, "eps", c.field.eps, "field", problems);
    take(f, "horizon", c.field.horizon, "field", problems);
  }
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------- results

void ResultSet::append(const ResultSet& o) {
  records.insert(records.end(), o.records.begin(), o.records.end());
  timings.insert(timings.end(), o.timings.begin(), o.timings.end());
}

bool ResultSet::all_pass() const { return failures() == 0; }

std::size_t ResultSet::failures() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.pass == 0 ? 1 : 0;
  return n;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double d = static_cast<double>(n) * sxx - sx * sx;
  return (static_cast<double>(n) * sxy - sx * sy) / d;
}

std::vector<TestFunction> test_battery(const ExperimentConfig& c) {
  const Vec3 p0 = c.packet.momentum, x0 = c.packet.center;
  const int axis = c.grid.axes.front();
  const double len = c.grid.length;
  std::vector<TestFunction> fs(3);
  fs[0].name = "one";
  fs[0].terms.push_back({[](const Vec3&) { return 1.0; }, [](const Vec3&) { return 1.0; }, 1.0});
  fs[1].name = "xi_gauss";
  fs[1].terms.push_back({[](const Vec3&) { return 1.0; },
                         [p0](const Vec3& xi) { return std::exp(-(xi - p0).squaredNorm() / (2.0 * 0.25)); }, 1.0});
  fs[2].name = "x_mod";
  fs[2].terms.push_back({[x0, axis, len](const Vec3& x) { return std::cos(kTwoPi * (x[axis] - x0[axis]) / len); },
                         [p0](const Vec3& xi) { return std::exp(-(xi - p0).squaredNorm() / 2.0); }, 1.0});
  return fs;
}

// ---------------------------------------------------------------- identity suite

namespace {

Vec3 random_vec(CounterRng& rng, double scale) {
  return Vec3((2.0 * rng.uniform() - 1.0) * scale, (2.0 * rng.uniform() - 1.0) * scale,
              (2.0 * rng.uniform() - 1.0) * scale);
}

SpinorField random_band_limited(const PeriodicGrid& g, double eps, long reach, CounterRng& rng) {
  SpinorField s(g, eps, PhysicalConstants{});
  std::vector<cd> hat(4 * g.size(), cd(0.0, 0.0));
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto k = g.signed_index(f);
    if (std::abs(k[0]) > reach || std::abs(k[1]) > reach || std::abs(k[2]) > reach) continue;
    for (int comp = 0; comp < 4; ++comp)
      hat[comp * g.size() + f] = cd(rng.uniform() - 0.5, rng.uniform() - 0.5);
  }
  from_fourier(std::move(hat), s);
  return s;
}

}  // namespace

ResultSet run_identity_suite(const ExperimentConfig& c) {
  const std::string ex = "verify";
  ResultSet out;
  const auto t0 = Clock::now();
  const PhysicalConstants& pc = c.constants;
  const auto& g = gammas();

  // Exact relations over the Gaussian integers.
  std::size_t bad = 0;
  const GaussMat4 id = GaussMat4::identity();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      const GaussMat4 ac = g.gamma[m] * g.gamma[n] + g.gamma[n] * g.gamma[m];
      GaussMat4 expect = GaussMat4::zero();
      if (m == n) expect = m == 0 ? id + id : -(id + id);
      bad += ac == expect ? 0 : 1;
    }
  bad += g.gamma[0].adjoint() == g.gamma[0] ? 0 : 1;
  for (int k = 1; k <= 3; ++k) {
    bad += g.gamma[k].adjoint() == -g.gamma[k] ? 0 : 1;
    bad += g.g0gk[k].adjoint() == g.g0gk[k] ? 0 : 1;
    bad += g.g0gk[k] * g.g0gk[k] == id ? 0 : 1;
  }
  out.add(rec(ex, "gamma_relations_violations", "exact", static_cast<double>(bad), 0, verdict(bad == 0), c.seed));

  CounterRng rng(c.seed, 0x616c67);
  double q2 = 0, proj = 0, ortho = 0, eig = 0, wclosed = 0, wsum = 0, canc = 0;
  const std::size_t npts = std::max<std::size_t>(c.identity_points, 1);
  for (std::size_t i = 0; i < npts; ++i) {
    const Vec3 xi = random_vec(rng, 3.0), q = random_vec(rng, 3.0);
    const double lam = lambda_plus(xi, pc);
    const Mat4 Q = dispersion_matrix(xi, pc);
    q2 = std::max(q2, max_abs(Q * Q - lam * lam * Mat4::Identity()) / (lam * lam));
    const EigenSystem es = eigensystem(xi, pc);
    const Mat4 I = Mat4::Identity();
    proj = std::max({proj, max_abs(es.pi_plus * es.pi_plus - es.pi_plus), max_abs(es.pi_minus * es.pi_minus - es.pi_minus),
                     max_abs(es.pi_plus * es.pi_minus), max_abs(es.pi_plus + es.pi_minus - I),
                     max_abs(Q * es.pi_plus - lam * es.pi_plus) / lam, max_abs(Q * es.pi_minus + lam * es.pi_minus) / lam});
    const Mat4 b = es.basis();
    ortho = std::max(ortho, max_abs(b.adjoint() * b - I));
    Eigen::Vector4cd d(lam, lam, -lam, -lam);
    eig = std::max(eig, max_abs(Q * b - b * d.asDiagonal()) / lam);
    const ScatteringWeights w1 = scattering_weights(xi, q, pc), w2 = projector_trace_weights(xi, q, pc);
    for (int k = 0; k < 4; ++k) {
      wclosed = std::max({wclosed, std::abs(w1.omega[k] - w2.omega[k]), std::abs(w1.omega_tilde[k] - w2.omega_tilde[k])});
      wsum = std::max(wsum, std::abs(w1.omega[k] + w1.omega_tilde[k] - 1.0));
      const CancellationResult cr = cancellation_constant(k, xi, q, pc);
      const double scale = std::max(1.0, lam * lambda_plus(q, pc));
      canc = std::max({canc, cr.residual / scale,
                       std::abs(cr.value - cancellation_constant_closed_form(k, xi, q, pc)) / scale});
    }
  }
  const std::string np = "points=" + std::to_string(npts);
  auto add12 = [&](const char* m, double v) { out.add(rec(ex, m, np, v, 0, verdict(v < 1e-12), c.seed)); };
  add12("q_squared_residual", q2);
  add12("projector_residual", proj);
  add12("eigenbasis_orthonormality", ortho);
  add12("eigenvector_residual", eig);
  add12("omega_closed_vs_trace", wclosed);
  add12("omega_sum_residual", wsum);
  add12("cancellation_residual", canc);

  PhysicalConstants massless = pc;
  massless.m0 = 0.0;
  bool rejected = false;
  try {
    (void)eigensystem(Vec3(0.1, 0.2, 0.3), massless);
  } catch (const std::domain_error&) {
    rejected = true;
  }
  out.add(rec(ex, "massless_precondition_rejected", "m0c=0", rejected ? 1.0 : 0.0, 0, verdict(rejected), c.seed));
  out.timings.push_back({"verify.algebra", seconds_since(t0)});

  // Wigner identities on band-limited data.
  const auto t1 = Clock::now();
  CounterRng wr(c.seed, 0x776967);
  PeriodicGrid g2;
  g2.points = {16, 1, 16};
  g2.lengths = {kTwoPi, 1.0, kTwoPi};
  for (const PeriodicGrid& grid : {PeriodicGrid::line(128, kTwoPi), g2}) {
    const std::string gp = "grid=" + std::to_string(grid.points[0]) + "x" + std::to_string(grid.points[1]) + "x" +
                           std::to_string(grid.points[2]);
    const double eps = 0.125;
    const long quarter = static_cast<long>(grid.points[2] / 4);
    const SpinorField u = random_band_limited(grid, eps, quarter - 1, wr);
    const SpinorField v = random_band_limited(grid, eps, quarter - 1, wr);
    const WignerData w = wigner_transform(u, c.threads);
    double herm = 0.0, marg = 0.0, scale = 0.0;
    const std::size_t n = grid.size();
    for (std::size_t x = 0; x < n; ++x) {
      Mat4 s = Mat4::Zero();
      for (std::size_t j = 0; j < n; ++j) {
        herm = std::max(herm, max_abs(w.at(x, j) - w.at(x, j).adjoint()));
        scale = std::max(scale, max_abs(w.at(x, j)));
        s += w.at(x, j);
      }
      marg = std::max(marg, max_abs(s * w.xi_cell() - u.spinor(x) * u.spinor(x).adjoint()));
    }
    const double direct = std::pow(kTwoPi * eps, -0.5 * grid.effective_dims()) * u.norm2();
    out.add(rec(ex, "wigner_hermiticity", gp, herm / scale, 0, verdict(herm / scale < 1e-10), c.seed));
    out.add(rec(ex, "wigner_marginal", gp, marg, 0, verdict(marg < 1e-10), c.seed));
    const double nrel = std::abs(w.norm() - direct) / direct;
    out.add(rec(ex, "wigner_norm_identity", gp, nrel, 0, verdict(nrel < 1e-10), c.seed));

    const SpinorField us = random_band_limited(grid, eps, quarter / 2 - 1, wr);
    const SpinorField vs = random_band_limited(grid, eps, quarter / 2 - 1, wr);
    AffineSymbol sym;
    auto rmat = [&] {
      Mat4 m;
      for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = cd(wr.uniform() - 0.5, wr.uniform() - 0.5);
      return m;
    };
    sym.m0 = rmat();
    for (auto& m : sym.m) m = rmat();
    LatticeMultiplier vm;
    vm.modes = {{0, 0, 0}, {0, 0, 1}, {0, 0, -2}};
    for (std::size_t r = 0; r < vm.modes.size(); ++r) vm.vhat.push_back(rmat());
    const PseudoDiffReport pd = verify_pseudodiff_identities(us, vs, sym, vm);
    out.add(rec(ex, "pseudo_symbol_left", gp, pd.symbol_left, 0, verdict(pd.symbol_left < 1e-10), c.seed));
    out.add(rec(ex, "pseudo_symbol_right", gp, pd.symbol_right, 0, verdict(pd.symbol_right < 1e-10), c.seed));
    out.add(rec(ex, "pseudo_multiplier_left", gp, pd.multiplier_left, 0, verdict(pd.multiplier_left < 1e-10), c.seed));
    out.add(rec(ex, "pseudo_multiplier_right", gp, pd.multiplier_right, 0, verdict(pd.multiplier_right < 1e-10), c.seed));
    bool alias = false;
    try {
      (void)verify_pseudodiff_identities(u, v, sym, vm);
    } catch (const std::invalid_argument&) {
      alias = true;
    }
    out.add(rec(ex, "pseudo_aliasing_rejected", gp, alias ? 1.0 : 0.0, 0, verdict(alias), c.seed));
  }
  out.timings.push_back({"verify.wigner", seconds_since(t1)});
  return out;
}

// ---------------------------------------------------------------- wave ensembles

namespace {

struct MemberJob {
  std::size_t eps_index = 0;
  long member = -1;  // -1: free run
};

EnsembleMember run_member(const ExperimentConfig& c, double eps, const PeriodicGrid& grid,
                          const SpectralPairing& pairing, std::shared_ptr<const ModeLattice> lattice,
                          std::uint64_t seed, bool with_field) {
  const StepPlan plan = step_plan(c, eps);
  SpinorField psi = make_wavepacket(packet_spec(c), grid, eps, c.constants);
  const double n0 = psi.norm2();
  const std::size_t nf = pairing.functions().size();
  EnsembleMember m;
  m.cross_integral.assign(nf, Mat4::Zero());
  m.alpha_plus.assign(nf, {});
  m.alpha_minus.assign(nf, {});

  std::unique_ptr<FieldProvider> field;
  if (with_field) {
    const double tau_horizon = c.solver.horizon / std::pow(eps, c.solver.alpha_time);
    auto path = std::make_shared<FieldPath>(sample_path(c.spectrum, lattice, tau_horizon, seed));
    field = std::make_unique<PathField>(path, c.solver.alpha_time);
  } else {
    field = std::make_unique<ZeroField>();
  }
  SolverConfig sc;
  sc.dt = plan.dt;
  sc.alpha_time = c.solver.alpha_time;
  sc.norm_tolerance = c.solver.norm_tolerance;

  std::vector<Mat4> prev;
  double prev_t = 0.0;
  std::size_t step = 0;
  auto observe = [&](double t, const SpinorField& s) {
    const std::vector<Mat4> cur = pairing.evaluate(s);
    if (!prev.empty())
      for (std::size_t f = 0; f < nf; ++f) m.cross_integral[f] += 0.5 * (t - prev_t) * (cur[f] + prev[f]);
    if (step % plan.per_output == 0)
      for (std::size_t f = 0; f < nf; ++f) {
        m.alpha_plus[f].push_back(alpha_plus_of(cur[f]));
        m.alpha_minus[f].push_back(alpha_minus_of(cur[f]));
      }
    m.max_norm_drift = std::max(m.max_norm_drift, std::abs(s.norm2() - n0) / n0);
    prev = cur;
    prev_t = t;
    ++step;
  };
  run(psi, sc, *field, c.solver.horizon, plan.dt, observe);
  return m;
}

}  // namespace

std::vector<EpsEnsemble> run_wave_ensembles(const ExperimentConfig& c, ResultSet& timings) {
  const auto battery = test_battery(c);
  std::vector<EpsEnsemble> ens(c.eps.size());
  std::vector<std::unique_ptr<SpectralPairing>> pairings(c.eps.size());
  std::vector<std::shared_ptr<const ModeLattice>> lattices(c.eps.size());
  for (std::size_t e = 0; e < c.eps.size(); ++e) {
    const double eps = c.eps[e];
    EpsEnsemble& E = ens[e];
    E.eps = eps;
    E.grid = c.wave_grid(eps);
    const StepPlan plan = step_plan(c, eps);
    for (std::size_t o = 0; o <= plan.outputs; ++o)
      E.output_times.push_back(static_cast<double>(o) * c.solver.output_interval);
    pairings[e] = std::make_unique<SpectralPairing>(E.grid, eps, c.constants, battery);
    lattices[e] = ModeLattice::build(E.grid, eps, c.spectrum.band_limit);
    E.members.resize(c.ensemble);
  }

  // Wave runs: every (eps, member) cell is independent.
  std::vector<MemberJob> jobs;
  for (std::size_t e = 0; e < c.eps.size(); ++e) {
    jobs.push_back({e, -1});
    for (std::size_t m = 0; m < c.ensemble; ++m) jobs.push_back({e, static_cast<long>(m)});
  }
  std::vector<double> job_time(jobs.size(), 0.0);
  parallel_for(jobs.size(), c.threads, [&](std::size_t i) {
    const auto t0 = Clock::now();
    const MemberJob& jb = jobs[i];
    EpsEnsemble& E = ens[jb.eps_index];
    const std::uint64_t seed =
        derive_seed(derive_seed(c.seed, jb.eps_index + 1), static_cast<std::uint64_t>(std::max(0L, jb.member)));
    EnsembleMember res = run_member(c, E.eps, E.grid, *pairings[jb.eps_index], lattices[jb.eps_index], seed, jb.member >= 0);
    if (jb.member < 0) E.free_run = std::move(res);
    else E.members[static_cast<std::size_t>(jb.member)] = std::move(res);
    job_time[i] = seconds_since(t0);
  });
  for (std::size_t e = 0; e < c.eps.size(); ++e) {
    double t = 0.0;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].eps_index == e) t += job_time[i];
    timings.timings.push_back({"wave." + eps_param(c.eps[e]), t});
  }

  // Transport and t = 0 checks per eps.
  for (std::size_t e = 0; e < c.eps.size(); ++e) {
    const auto t0 = Clock::now();
    EpsEnsemble& E = ens[e];
    const SpinorField psi0 = make_wavepacket(packet_spec(c), E.grid, E.eps, c.constants);
    E.wave_mass = psi0.norm2();
    WavepacketSpec pw = packet_spec(c);
    pw.width = std::numeric_limits<double>::infinity();
    const auto plane = pairings[e]->evaluate(make_wavepacket(pw, E.grid, E.eps, c.constants));
    for (const Mat4& m : plane) E.cross_at_zero = std::max(E.cross_at_zero, cross_magnitude(m));

    const auto lat = TransportLattice::for_wave_grid(E.grid, E.eps, c.transport.xi_radius, c.transport.x_points);
    const auto bands = band_densities(psi0, c.constants, c.threads);
    const TransportState s0 = initial_state_from_bands(lat, E.grid, E.eps, bands);
    TransportConfig tc;
    tc.dt = c.transport.dt;
    tc.horizon = c.solver.horizon;
    tc.output_interval = c.solver.output_interval;

    auto solve = [&](const SpectrumDescriptor& spec, std::vector<std::vector<double>>& dst) {
      dst.assign(battery.size(), {});
      TransportState s = s0;
      auto obs = [&](const TransportState& st) {
        for (std::size_t f = 0; f < battery.size(); ++f) dst[f].push_back(pair_state(st, battery[f])[0]);
      };
      if (c.transport.mode == TransportMode::inelastic) {
        KernelOptions ko;
        ko.threads = c.threads;
        const auto k = build_kernels(spec, lat, c.constants, ko);
        integrate(s, tc, TransportMode::inelastic, &k, nullptr, obs);
      } else {
        const auto k = build_elastic_kernels(spec, lat, c.constants, c.transport.shell_width, c.threads);
        integrate(s, tc, TransportMode::elastic, nullptr, &k, obs);
      }
    };
    solve(c.spectrum, E.transport_plus);
    SpectrumDescriptor zero = c.spectrum;
    zero.amplitude = {0.0, 0.0, 0.0, 0.0};
    zero.profile = SpectrumDescriptor::Profile::gaussian;
    solve(zero, E.transport_free);
    for (std::size_t f = 0; f < battery.size(); ++f)
      E.initial_gap = std::max(E.initial_gap, std::abs(E.free_run.alpha_plus[f][0] - E.transport_plus[f][0]));
    timings.timings.push_back({"transport." + eps_param(E.eps), seconds_since(t0)});
  }
  return ens;
}

ResultSet cross_mode_records(const ExperimentConfig& c, const std::vector<EpsEnsemble>& ens) {
  const std::string ex = "sweep";
  ResultSet out;
  const auto battery = test_battery(c);
  for (const auto& E : ens) {
    out.add(rec(ex, "cross_pairing_t0_plane_wave", eps_param(E.eps), E.cross_at_zero, 0,
                verdict(E.cross_at_zero < 1e-10), c.seed));
    double drift = 0.0;
    for (const auto& m : E.members) drift = std::max(drift, m.max_norm_drift);
    const double allowed = c.solver.norm_tolerance * c.solver.horizon;
    out.add(rec(ex, "norm_drift_max", eps_param(E.eps), drift, 0, verdict(drift <= allowed), c.seed));
  }
  for (std::size_t f = 0; f < battery.size(); ++f) {
    std::vector<double> eps, mean, ratio, err;
    for (const auto& E : ens) {
      std::vector<double> v;
      for (const auto& m : E.members) v.push_back(cross_magnitude(m.cross_integral[f]));
      const auto [mu, se] = mean_sem(v);
      const std::string p = eps_param(E.eps) + ";f=" + battery[f].name;
      out.add(rec(ex, "cross_pairing", p, mu, se, -1, c.seed));
      out.add(rec(ex, "cross_pairing_rel", p, mu / E.wave_mass, se / E.wave_mass, -1, c.seed));
      out.add(rec(ex, "cross_ratio_sqrt_eps", p, mu / std::sqrt(E.eps), se / std::sqrt(E.eps), -1, c.seed));
      eps.push_back(E.eps);
      mean.push_back(mu);
      ratio.push_back(mu / std::sqrt(E.eps));
      err.push_back(se / std::sqrt(E.eps));
    }
    bool ok = true;
    for (std::size_t i = 1; i < ratio.size(); ++i) {
      const bool step_ok = ratio[i] <= ratio[i - 1] + std::hypot(err[i], err[i - 1]);
      ok &= step_ok;
      out.add(rec(ex, "cross_ratio_step_nonincreasing", eps_param(eps[i]) + ";f=" + battery[f].name,
                  ratio[i] - ratio[i - 1], std::hypot(err[i], err[i - 1]), verdict(step_ok), c.seed));
    }
    out.add(rec(ex, "cross_ratio_nonincreasing", "f=" + battery[f].name, ok ? 1.0 : 0.0, 0, verdict(ok), c.seed));
    // Boundedness by C sqrt(eps) with slack 0.2 on the fitted exponent.
    const double slope = loglog_slope(eps, mean);
    out.add(rec(ex, "cross_loglog_slope", "f=" + battery[f].name, slope, 0, verdict(slope >= 0.3), c.seed));
  }
  return out;
}

ResultSet limit_records(const ExperimentConfig& c, const std::vector<EpsEnsemble>& ens) {
  const std::string ex = "compare";
  ResultSet out;
  const auto battery = test_battery(c);
  std::vector<double> eps, D, Derr, V, Verr, Drel, Vrel;
  for (const auto& E : ens) {
    const std::size_t n = E.members.size();
    double d = -1.0, de = 0.0, v = -1.0, d0 = 0.0;
    for (std::size_t f = 0; f < battery.size(); ++f)
      for (std::size_t o = 0; o < E.output_times.size(); ++o) {
        std::vector<double> x;
        for (const auto& m : E.members) x.push_back(m.alpha_plus[f][o]);
        const auto [mu, se] = mean_sem(x);
        const double gap = std::abs(mu - E.transport_plus[f][o]);
        if (gap > d) {
          d = gap;
          de = se;
        }
        v = std::max(v, sample_variance(x));
        d0 = std::max(d0, std::abs(E.free_run.alpha_plus[f][o] - E.transport_free[f][o]));
      }
    const double ve = v * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(n, 2) - 1));
    const std::string p = eps_param(E.eps);
    out.add(rec(ex, "discrepancy_D", p, d, de, -1, c.seed));
    out.add(rec(ex, "variance_V", p, v, ve, -1, c.seed));
    out.add(rec(ex, "discrepancy_D_rel", p, d / E.wave_mass, de / E.wave_mass, -1, c.seed));
    out.add(rec(ex, "variance_V_rel", p, v / (E.wave_mass * E.wave_mass), ve / (E.wave_mass * E.wave_mass), -1, c.seed));
    out.add(rec(ex, "free_discrepancy", p, d0, 0, verdict(d0 < 1e-3), c.seed));
    out.add(rec(ex, "initial_pairing_gap", p, E.initial_gap, 0, verdict(E.initial_gap < 1e-8), c.seed));
    for (std::size_t f = 0; f < battery.size(); ++f)
      for (std::size_t o = 0; o < E.output_times.size(); ++o) {
        std::vector<double> x;
        for (const auto& m : E.members) x.push_back(m.alpha_plus[f][o]);
        const auto [mu, se] = mean_sem(x);
        const std::string q = p + ";f=" + battery[f].name + ";t=" + fmt(E.output_times[o]);
        out.add(rec(ex, "wave_alpha_plus_mean", q, mu, se, -1, c.seed));
        out.add(rec(ex, "transport_alpha_plus", q, E.transport_plus[f][o], 0, -1, c.seed));
      }
    eps.push_back(E.eps);
    D.push_back(d);
    Derr.push_back(de);
    V.push_back(v);
    Verr.push_back(ve);
    Drel.push_back(d / E.wave_mass);
    Vrel.push_back(v / (E.wave_mass * E.wave_mass));
  }
  auto trend = [&](const char* name, const std::vector<double>& y, const std::vector<double>& err, bool gate) {
    bool ok = true;
    for (std::size_t i = 1; i < y.size(); ++i) ok &= y[i] <= y[i - 1] + std::hypot(err[i], err[i - 1]);
    out.add(rec(ex, name, "eps_sweep", ok ? 1.0 : 0.0, 0, gate ? verdict(ok) : -1, c.seed));
  };
  trend("D_decreasing", D, Derr, true);
  trend("V_decreasing", V, Verr, true);
  std::vector<double> drel_err, vrel_err;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    drel_err.push_back(Derr[i] / ens[i].wave_mass);
    vrel_err.push_back(Verr[i] / (ens[i].wave_mass * ens[i].wave_mass));
  }
  trend("D_rel_decreasing", Drel, drel_err, false);
  trend("V_rel_decreasing", Vrel, vrel_err, false);
  out.add(rec(ex, "D_loglog_slope", "eps_sweep", loglog_slope(eps, D), 0, -1, c.seed));
  out.add(rec(ex, "V_loglog_slope", "eps_sweep", loglog_slope(eps, V), 0, -1, c.seed));
  return out;
}

ResultSet run_cross_mode_sweep(const ExperimentConfig& c) {
  ResultSet out;
  auto ens = run_wave_ensembles(c, out);
  out.append(cross_mode_records(c, ens));

  // Fourier-side pairing against a dense Wigner sum on a free run at eps = 1.
  const auto t0 = Clock::now();
  ExperimentConfig small = c;
  const PeriodicGrid g = PeriodicGrid::line(64, c.grid.length);
  const double eps = 1.0;
  WavepacketSpec ps = packet_spec(c);
  ps.momentum = Vec3::Zero();
  ps.momentum[2] = kTwoPi * eps / c.grid.length;
  ps.center = Vec3(0, 0, 0.5 * c.grid.length);
  ps.width = std::max(c.packet.width, 4.0 * g.spacing(2));
  // Both bands so every block of the pairing matrix is populated.
  SpinorField psi = make_wavepacket(ps, g, eps, c.constants);
  ps.branch = Branch::minus;
  ps.center[2] += 0.1 * c.grid.length;
  const SpinorField other = make_wavepacket(ps, g, eps, c.constants);
  for (std::size_t i = 0; i < psi.psi.size(); ++i) psi.psi[i] += other.psi[i];
  const auto battery = test_battery(c);
  const SpectralPairing sp(g, eps, c.constants, battery);
  std::vector<std::vector<double>> fs;
  for (const auto& f : battery) fs.push_back(f.sample(g, eps));
  std::vector<double> times;
  std::vector<std::vector<Mat4>> fast(battery.size()), dense(battery.size());
  SolverConfig sc;
  sc.dt = 0.01;
  ZeroField zf;
  run(psi, sc, zf, 0.5, 0.05, [&](double t, const SpinorField& s) {
    times.push_back(t);
    const auto m = sp.evaluate(s);
    const WignerData w = wigner_transform(s);
    for (std::size_t f = 0; f < battery.size(); ++f) {
      Mat4 acc = Mat4::Zero();
      for (std::size_t p = 0; p < w.w.size(); ++p) {
        const Mat4 b = eigenbasis(w.xi(p % g.size()), c.constants);
        acc += fs[f][p] * (b.adjoint() * w.w[p] * b);
      }
      fast[f].push_back(m[f]);
      dense[f].push_back(acc * w.phase_cell());
    }
  });
  double worst = 0.0;
  for (std::size_t f = 0; f < battery.size(); ++f)
    for (int r = 0; r < 4; ++r)
      for (int q = 0; q < 4; ++q) {
        std::vector<cd> a, b;
        for (std::size_t i = 0; i < times.size(); ++i) {
          a.push_back(fast[f][i](r, q));
          b.push_back(dense[f][i](r, q));
        }
        double scale = 0.0;
        for (const auto& m : dense[f]) scale = std::max(scale, max_abs(m));
        worst = std::max(worst, std::abs(time_integral(a, times) - time_integral(b, times)) / scale);
      }
  double cross = 0.0;
  for (const auto& m : dense[0]) cross = std::max(cross, cross_magnitude(m));
  out.add(rec("sweep", "spectral_vs_dense_pairing", "eps=1;free;both_bands", worst, 0,
              verdict(worst < 1e-10 && cross > 1e-3), c.seed));
  out.timings.push_back({"sweep.oracle", seconds_since(t0)});
  return out;
}

ResultSet run_limit_comparison(const ExperimentConfig& c) {
  ResultSet out;
  auto ens = run_wave_ensembles(c, out);
  out.append(limit_records(c, ens));
  return out;
}

// ---------------------------------------------------------------- transport demo

ResultSet run_transport_demo(const ExperimentConfig& c, const std::string& out_dir) {
  const std::string ex = "transport";
  ResultSet out;
  const auto t0 = Clock::now();
  const double eps = c.eps.front();
  const PeriodicGrid wg = c.wave_grid(eps);
  const auto lat = TransportLattice::for_wave_grid(wg, eps, c.transport.xi_radius, c.transport.x_points);
  TransportState s(lat);
  const std::size_t n = lat->nxi();
  for (std::size_t x = 0; x < lat->nx(); ++x) {
    const Vec3 pos = lat->xgrid.position(x);
    double r2 = 0.0;
    for (int a : c.grid.axes) {
      double d = pos[a] - c.packet.center[a];
      d -= c.grid.length * std::round(d / c.grid.length);
      r2 += d * d;
    }
    for (std::size_t i = 0; i < n; ++i)
      s.alpha_plus[x * n + i] = std::exp(-r2 / (2.0 * c.packet.width * c.packet.width)) *
                                std::exp(-(lat->xi[i] - c.packet.momentum).squaredNorm() / (2.0 * 0.09));
  }
  TransportConfig tc;
  tc.dt = c.transport.dt;
  tc.horizon = c.solver.horizon;
  tc.output_interval = c.solver.output_interval;
  const std::string p = eps_param(eps) + ";mode=" + (c.transport.mode == TransportMode::inelastic ? "inelastic" : "elastic");
  TransportTrajectory tr;
  if (c.transport.mode == TransportMode::inelastic) {
    KernelOptions ko;
    ko.threads = c.threads;
    const auto k = build_kernels(c.spectrum, lat, c.constants, ko);
    out.add(rec(ex, "kernel_symmetry_residual", p, k.symmetry_residual(), 0, verdict(k.symmetry_residual() < 1e-12), c.seed));
    TransportState st = s;
    tr = integrate(st, tc, TransportMode::inelastic, &k, nullptr);
    if (!out_dir.empty()) write_kernels(k, (std::filesystem::path(out_dir) / "kernels.bin").string());
    double rise = 0.0;
    for (std::size_t i = 1; i < tr.steps.size(); ++i)
      rise = std::max(rise, (tr.steps[i].l2 - tr.steps[i - 1].l2) / tr.steps.front().l2);
    out.add(rec(ex, "l2_max_step_increase", p, rise, 0, verdict(rise <= 1e-10), c.seed));
  } else {
    const auto k = build_elastic_kernels(c.spectrum, lat, c.constants, c.transport.shell_width, c.threads);
    TransportState st = s;
    tr = integrate(st, tc, TransportMode::elastic, nullptr, &k);
    double shell = 0.0;
    for (const auto& r : tr.steps) shell = std::max(shell, r.shell_drift);
    out.add(rec(ex, "shell_mass_drift_max", p, shell, 0, verdict(shell < 1e-8), c.seed));
    // The + band must not see the - band at all.
    TransportState a = s, b = s;
    for (std::size_t i = 0; i < b.alpha_minus.size(); ++i) b.alpha_minus[i] = 0.5 + 0.25 * std::sin(0.1 * static_cast<double>(i));
    integrate(a, tc, TransportMode::elastic, nullptr, &k);
    integrate(b, tc, TransportMode::elastic, nullptr, &k);
    const bool same = a.alpha_plus == b.alpha_plus;
    out.add(rec(ex, "band_decoupling_exact", p, same ? 1.0 : 0.0, 0, verdict(same), c.seed));
  }
  double drift = 0.0, minv = 0.0;
  for (const auto& r : tr.steps) {
    drift = std::max(drift, std::abs(r.mass - tr.steps.front().mass) / tr.steps.front().mass);
    minv = std::min(minv, r.min_value);
  }
  out.add(rec(ex, "mass_drift_max", p, drift, 0, verdict(drift < 1e-8), c.seed));
  out.add(rec(ex, "min_alpha", p, minv, 0, -1, c.seed));
  out.add(rec(ex, "final_l2", p, tr.steps.back().l2, 0, -1, c.seed));
  if (!out_dir.empty()) write_trajectory_csv(tr, (std::filesystem::path(out_dir) / "trajectory.csv").string());
  out.timings.push_back({"transport.demo", seconds_since(t0)});
  return out;
}

// ---------------------------------------------------------------- field demo

ResultSet run_field_demo(const ExperimentConfig& c) {
  const std::string ex = "field";
  ResultSet out;
  const auto t0 = Clock::now();
  const auto lat = ModeLattice::build(PeriodicGrid::line(c.field.points, c.grid.length), c.field.eps, c.spectrum.band_limit);
  std::vector<FieldPath> paths(c.field.paths);
  parallel_for(paths.size(), c.threads, [&](std::size_t i) {
    paths[i] = sample_path(c.spectrum, lat, c.field.horizon, derive_seed(c.seed, 0x6669656c64ULL + i));
  });
  double imag = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(paths.size(), 32); ++i)
    imag = std::max(imag, synthesize_field(paths[i], 0.5 * c.field.horizon, lat->grid).max_imag);
  out.add(rec(ex, "synthesis_max_imag", "paths=32", imag, 0, verdict(imag < 1e-12), c.seed));

  std::vector<CorrelationLag> lags;
  const double tmax = std::min(2.0 / c.spectrum.jump_rate, c.field.horizon);
  for (int i = 0; i <= 8; ++i) lags.push_back({tmax * i / 8.0, {0, 0, 0}});
  const auto est = estimate_correlation(paths, lags, {0.0});
  const std::string np = "paths=" + std::to_string(paths.size());
  for (int k = 0; k < 4; ++k) {
    if (c.spectrum.amplitude[k] <= 0.0) continue;
    std::vector<double> ts, mean, se;
    for (std::size_t l = 0; l < lags.size(); ++l) {
      ts.push_back(lags[l].t);
      mean.push_back(est.mean[l][k][k]);
      se.push_back(est.std_error[l][k][k]);
    }
    const DecayFit fit = fit_exponential_decay(ts, mean, se);
    out.add(rec(ex, "decay_rate", np + ";k=" + std::to_string(k), fit.rate, fit.rate_error,
                verdict(std::abs(fit.rate - c.spectrum.jump_rate) <= 0.1), c.seed));
  }
  // Equal-time cross-correlations gate; other lags are reported only.
  double equal_time = 0.0, any_lag = 0.0;
  for (std::size_t l = 0; l < lags.size(); ++l)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        if (m == n) continue;
        const double z = std::abs(est.mean[l][m][n]) / std::max(est.std_error[l][m][n], 1e-300);
        any_lag = std::max(any_lag, z);
        if (l == 0) equal_time = std::max(equal_time, z);
      }
  out.add(rec(ex, "cross_correlation_max_sigma", np + ";lag=0", equal_time, 0, verdict(equal_time <= 3.0), c.seed));
  out.add(rec(ex, "cross_correlation_max_sigma_all_lags", np, any_lag, 0, -1, c.seed));
  out.timings.push_back({"field.demo", seconds_since(t0)});
  return out;
}

ResultSet run_experiment(const ExperimentConfig& c, const std::string& out_dir) {
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  if (c.experiment == "verify") return run_identity_suite(c);
  if (c.experiment == "sweep") return run_cross_mode_sweep(c);
  if (c.experiment == "compare") return run_limit_comparison(c);
  if (c.experiment == "transport") return run_transport_demo(c, out_dir);
  if (c.experiment == "field") return run_field_demo(c);
  throw std::invalid_argument("unknown experiment " + c.experiment);
}

// ---------------------------------------------------------------- persistence

std::string results_csv(const ResultSet& r) {
  std::ostringstream os;
  os << "experiment,metric,params,value,error,pass,seed,version\n";
  for (const auto& x : r.records)
    os << x.experiment << ',' << x.metric << ',' << x.params << ',' << fmt(x.value) << ',' << fmt(x.error) << ','
       << (x.pass < 0 ? "na" : x.pass ? "pass" : "fail") << ',' << x.seed << ',' << kCodeVersion << '\n';
  return os.str();
}

void write_outputs(const ResultSet& r, const ExperimentConfig& c, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "results.csv");
    if (!os) throw std::runtime_error("cannot write results in " + dir);
    os << results_csv(r);
  }
  {
    std::ofstream os(fs::path(dir) / "timings.csv");
    os << "label,seconds\n";
    for (const auto& t : r.timings) os << t.label << ',' << fmt(t.seconds) << '\n';
  }
  nlohmann::json m;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  m["schema"] = "diracrt.manifest/1";
  m["code_version"] = kCodeVersion;
  m["config_hash"] = hash;
  m["experiment"] = c.experiment;
  m["records"] = r.records.size();
  m["failures"] = r.failures();
  m["config"] = config_to_json(c);
  std::ofstream os(fs::path(dir) / "manifest.json");
  os << m.dump(2) << '\n';
}

}  // namespace diracrt
