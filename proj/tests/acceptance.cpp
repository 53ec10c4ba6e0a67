// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Runs the full default ensemble (minutes).

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "diracrt/harness.hpp"

using namespace diracrt;

namespace {

constexpr double kPi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

bool starts_with(const std::string& s, const char* p) { return s.rfind(p, 0) == 0; }

// All gated records selected by pred pass (and there is at least one);
// second is the number of gated records.
template <class Pred>
std::pair<bool, std::size_t> gate(const ResultSet& r, Pred pred) {
  bool ok = true;
  std::size_t n = 0;
  for (const auto& x : r.records)
    if (pred(x) && x.pass >= 0) {
      ok &= x.pass == 1;
      ++n;
    }
  return {ok && n > 0, n};
}

double rel_diff(const SpinorField& a, const SpinorField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) {
    num += std::norm(a.psi[i] - b.psi[i]);
    den += std::norm(b.psi[i]);
  }
  return std::sqrt(num / den);
}

void criteria_1_2(const ExperimentConfig& base) {
  const ResultSet r = run_identity_suite(base);
  double t_alg = 0, t_wig = 0;
  for (const auto& t : r.timings) {
    if (t.label == "verify.algebra") t_alg = t.seconds;
    if (t.label == "verify.wigner") t_wig = t.seconds;
  }
  auto is_wigner = [](const ResultRecord& x) { return starts_with(x.metric, "wigner_") || starts_with(x.metric, "pseudo_"); };
  const auto [alg_ok, alg_n] = gate(r, [&](const ResultRecord& x) { return !is_wigner(x); });
  const auto [wig_ok, wig_n] = gate(r, is_wigner);
  double alg_worst = 0.0, wig_worst = 0.0;
  for (const auto& x : r.records) {
    if (x.metric == "gamma_relations_violations" || x.metric.find("rejected") != std::string::npos) continue;
    double& w = is_wigner(x) ? wig_worst : alg_worst;
    w = std::max(w, x.value);
  }
  report(1, alg_ok && t_alg < 10.0,
         std::to_string(alg_n) + " checks over " + std::to_string(base.identity_points) + " points, worst residual " +
             sci(alg_worst) + ", " + sci(t_alg) + " s");
  report(2, wig_ok && t_wig < 60.0,
         std::to_string(wig_n) + " checks, worst residual " + sci(wig_worst) + ", " + sci(t_wig) + " s");
}

void criterion_3(const ExperimentConfig& base) {
  const PhysicalConstants pc = base.constants;
  bool ok = true;
  std::ostringstream d;

  // Norm drift per unit time under a random field.
  {
    const double eps = 1.0 / 32.0, T = 1.0;
    const PeriodicGrid g = PeriodicGrid::line(1024, 2.0 * kPi);
    WavepacketSpec ws;
    ws.center = Vec3(0, 0, kPi);
    ws.momentum = Vec3(0, 0, 1.0);
    ws.width = 0.4;
    SpinorField psi = make_wavepacket(ws, g, eps, pc);
    const double n0 = psi.norm2();
    const auto lat = ModeLattice::build(g, eps, base.spectrum.band_limit);
    auto path = std::make_shared<const FieldPath>(sample_path(base.spectrum, lat, T / eps, base.seed));
    PathField field(path, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.05 * eps;
    double drift = 0.0;
    run(psi, cfg, field, T, 0.1, [&](double, const SpinorField& s) { drift = std::max(drift, std::abs(s.norm2() - n0) / n0); });
    ok &= drift / T < 1e-10;
    d << "L2 drift " << sci(drift / T) << "/unit time";
  }
  // Free plane-wave phase.
  {
    const double eps = 1.0 / 16.0, T = 1.0;
    const PeriodicGrid g = PeriodicGrid::line(256, 2.0 * kPi);
    double worst = 0.0;
    for (Branch b : {Branch::plus, Branch::minus}) {
      WavepacketSpec ws;
      ws.momentum = Vec3(0, 0, 1.0);
      ws.branch = b;
      SpinorField psi = make_wavepacket(ws, g, eps, pc);
      SpinorField expect = psi;
      SolverConfig cfg;
      cfg.dt = 0.05 * eps;
      ZeroField zero;
      run(psi, cfg, zero, T, T, nullptr);
      const double sign = b == Branch::plus ? -1.0 : 1.0;
      const std::complex<double> rot = std::exp(std::complex<double>(0.0, sign * pc.c * lambda_plus(ws.momentum, pc) * T / eps));
      for (auto& z : expect.psi) z *= rot;
      worst = std::max(worst, rel_diff(psi, expect) / T);
    }
    ok &= worst < 1e-8;
    d << ", plane-wave phase error " << sci(worst) << "/unit time";
  }
  // Group velocity from the circular mean of |psi|^2.
  {
    const double eps = 1.0 / 32.0;
    const PeriodicGrid g = PeriodicGrid::line(1024, 2.0 * kPi);
    WavepacketSpec ws;
    ws.center = Vec3(0, 0, 2.0);
    ws.momentum = Vec3(0, 0, 1.0);
    ws.width = 0.4;
    SpinorField psi = make_wavepacket(ws, g, eps, pc);
    SolverConfig cfg;
    cfg.dt = 0.05 * eps;
    ZeroField zero;
    std::vector<double> ts, xs;
    double unwrap = 0.0, last = 0.0;
    run(psi, cfg, zero, 2.0, 0.1, [&](double t, const SpinorField& s) {
      std::complex<double> m(0.0, 0.0);
      for (std::size_t f = 0; f < g.size(); ++f) {
        double w = 0.0;
        for (int c = 0; c < 4; ++c) w += std::norm(s.at(c, f));
        m += w * std::polar(1.0, g.position(f)[2]);
      }
      double a = std::arg(m);
      if (!ts.empty()) {
        while (a + unwrap - last > kPi) unwrap -= 2.0 * kPi;
        while (a + unwrap - last < -kPi) unwrap += 2.0 * kPi;
      }
      last = a + unwrap;
      ts.push_back(t);
      xs.push_back(last);
    });
    double st = 0, sx = 0, stt = 0, stx = 0;
    const double n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      st += ts[i];
      sx += xs[i];
      stt += ts[i] * ts[i];
      stx += ts[i] * xs[i];
    }
    const double v = (n * stx - st * sx) / (n * stt - st * st);
    const double expect = pc.c * ws.momentum[2] / lambda_plus(ws.momentum, pc);
    const double err = std::abs(v / expect - 1.0);
    ok &= err < 0.02;
    d << ", group velocity off by " << sci(100.0 * err) << "%";
  }
  report(3, ok, d.str());
}

void criterion_4(const ExperimentConfig& base) {
  const ResultSet r = run_field_demo(base);
  const auto [ok, n] = gate(r, [](const ResultRecord&) { return true; });
  std::ostringstream d;
  d << base.field.paths << " paths";
  for (const auto& x : r.records) {
    if (x.metric == "synthesis_max_imag") d << ", max |Im| " << sci(x.value);
    if (x.metric == "decay_rate") d << ", rate " << sci(x.value);
    if (x.metric == "cross_correlation_max_sigma") d << ", max cross " << sci(x.value) << " sigma";
  }
  report(4, ok, d.str());
}

void criterion_5(const ExperimentConfig& base) {
  ExperimentConfig in = base, el = base;
  in.transport.mode = TransportMode::inelastic;
  el.transport.mode = TransportMode::elastic;
  const ResultSet a = run_transport_demo(in, ""), b = run_transport_demo(el, "");
  ResultSet all = a;
  all.append(b);
  const auto [ok, n] = gate(all, [](const ResultRecord&) { return true; });
  std::vector<std::string> parts;
  for (const auto& x : all.records) {
    const std::string mode = x.params.substr(x.params.find("mode=") + 5);
    if (x.metric == "mass_drift_max") parts.push_back(mode + " mass drift " + sci(x.value));
    if (x.metric == "l2_max_step_increase") parts.push_back("max L2 step increase " + sci(x.value));
    if (x.metric == "shell_mass_drift_max") parts.push_back("shell drift " + sci(x.value));
    if (x.metric == "band_decoupling_exact") parts.push_back(x.value == 1.0 ? "decoupling exact" : "decoupling broken");
  }
  std::string d;
  for (const auto& p : parts) d += (d.empty() ? "" : ", ") + p;
  report(5, ok, d);
}

void criteria_6_7(const ExperimentConfig& base) {
  ExperimentConfig c = base;
  c.experiment = "compare";
  const auto t0 = Clock::now();
  ResultSet timings;
  const auto ens = run_wave_ensembles(c, timings);
  const double elapsed = since(t0);
  const ResultSet cross = cross_mode_records(c, ens);
  const ResultSet lim = limit_records(c, ens);

  const auto [ok6, n6] = gate(cross, [](const ResultRecord&) { return true; });
  std::ostringstream d6;
  d6 << "ensemble " << c.ensemble << " over " << c.eps.size() << " eps values; cross/sqrt(eps)";
  for (const auto& x : cross.records)
    if (x.metric == "cross_ratio_sqrt_eps" && x.params.find("f=one") != std::string::npos) d6 << " " << sci(x.value);
  for (const auto& x : cross.records)
    if (x.metric == "cross_loglog_slope") d6 << ", slope(" << x.params.substr(2) << ") " << sci(x.value);
  d6 << ", " << sci(elapsed) << " s";
  report(6, ok6 && elapsed < 1200.0, d6.str());

  const auto [ok7, n7] = gate(lim, [](const ResultRecord&) { return true; });
  std::ostringstream d7;
  d7 << "D";
  for (const auto& x : lim.records)
    if (x.metric == "discrepancy_D") d7 << " " << sci(x.value);
  d7 << ", V";
  for (const auto& x : lim.records)
    if (x.metric == "variance_V") d7 << " " << sci(x.value);
  for (const auto& x : lim.records)
    if (x.metric == "D_decreasing" || x.metric == "V_decreasing")
      d7 << ", " << x.metric << " " << (x.pass == 1 ? "yes" : "no");
  report(7, ok7, d7.str());
}

void criterion_8(const ExperimentConfig& base) {
  namespace fs = std::filesystem;
  ExperimentConfig c = base;
  c.experiment = "compare";
  c.eps = {0.25, 0.125, 0.0625};
  c.grid.base_points = 64;
  c.grid.base_eps = 0.25;
  c.ensemble = 8;
  c.solver.horizon = 0.3;
  c.transport.x_points = 16;
  c.transport.xi_radius = 3.9;
  const fs::path root = fs::temp_directory_path() / "diracrt_acceptance";
  fs::remove_all(root);
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  bool ok = true;
  std::size_t size = 0;
  for (const char* ex : {"compare", "sweep", "transport", "field"}) {
    ExperimentConfig e = c;
    e.experiment = ex;
    std::string first;
    for (int run = 0; run < 2; ++run) {
      e.threads = run == 0 ? 1 : 2;
      const fs::path dir = root / (std::string(ex) + std::to_string(run));
      write_outputs(run_experiment(e, dir.string()), e, dir.string());
      const std::string b = bytes(dir / "results.csv");
      if (run == 0) first = b;
      else ok &= b == first && !b.empty();
      size += b.size();
    }
  }
  fs::remove_all(root);
  report(8, ok, "results.csv byte-identical across repeated runs (1 and 2 threads) for compare, sweep, "
                "transport and field; " + std::to_string(size) + " bytes compared");
}

}  // namespace

int main() {
  const ExperimentConfig base = default_config();
  criteria_1_2(base);
  criterion_3(base);
  criterion_4(base);
  criterion_5(base);
  criteria_6_7(base);
  criterion_8(base);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
