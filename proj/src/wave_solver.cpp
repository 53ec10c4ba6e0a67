#include "diracrt/wave_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diracrt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::array<std::size_t, 3> dims_of(const PeriodicGrid& g) {
  return {g.points[0], g.points[1], g.points[2]};
}

// (sigma . v) applied to the two-spinor (u0, u1).
inline void sigma_dot(const Vec3& v, cd u0, cd u1, cd& r0, cd& r1) {
  const cd m(v[0], -v[1]), p(v[0], v[1]);
  r0 = v[2] * u0 + m * u1;
  r1 = p * u0 - v[2] * u1;
}

}  // namespace

SpinorField::SpinorField(const PeriodicGrid& g, double e, const PhysicalConstants& pc)
    : grid(g), eps(e), consts(pc), psi(4 * g.size(), cd(0.0, 0.0)) {}

Spinor SpinorField::spinor(std::size_t f) const {
  const std::size_t n = grid.size();
  return Spinor(psi[f], psi[n + f], psi[2 * n + f], psi[3 * n + f]);
}

void SpinorField::set_spinor(std::size_t f, const Spinor& s) {
  const std::size_t n = grid.size();
  for (int c = 0; c < 4; ++c) psi[c * n + f] = s[c];
}

double SpinorField::norm2() const {
  double s = 0.0;
  for (const cd& z : psi) s += std::norm(z);
  return s * grid.cell_volume();
}

cd SpinorField::inner(const SpinorField& other) const {
  if (!(grid == other.grid)) throw std::invalid_argument("inner product of mismatched grids");
  cd s(0.0, 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) s += std::conj(psi[i]) * other.psi[i];
  return s * grid.cell_volume();
}

std::vector<cd> to_fourier(const SpinorField& s) {
  std::vector<cd> hat = s.psi;
  FftPlan plan(dims_of(s.grid), 4, FftPlan::Direction::forward);
  plan.execute(hat.data());
  return hat;
}

void from_fourier(std::vector<cd> hat, SpinorField& s) {
  FftPlan plan(dims_of(s.grid), 4, FftPlan::Direction::backward);
  plan.execute(hat.data());
  const double inv = 1.0 / static_cast<double>(s.grid.size());
  for (auto& z : hat) z *= inv;
  s.psi = std::move(hat);
}

Vec3 grid_momentum(const PeriodicGrid& g, double eps, std::size_t f) {
  return eps * g.wavenumber(f);
}

SpinorField make_wavepacket(const WavepacketSpec& spec, const PeriodicGrid& grid, double eps,
                            const PhysicalConstants& consts) {
  grid.validate();
  consts.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (spec.polarization != 1 && spec.polarization != 2)
    throw std::invalid_argument("polarization must be 1 or 2");
  for (int a = 0; a < 3; ++a) {
    if (grid.degenerate(a)) {
      if (spec.momentum[a] != 0.0)
        throw std::invalid_argument("packet momentum must vanish on degenerate axes");
      continue;
    }
    const double n = spec.momentum[a] * grid.lengths[a] / (kTwoPi * eps);
    if (std::abs(n - std::round(n)) > 1e-9)
      throw std::invalid_argument("packet momentum is not on the lattice 2 pi eps n / L");
    if (std::isfinite(spec.width) && spec.width < 2.0 * grid.spacing(a))
      throw std::invalid_argument("packet width is not resolved by the grid");
  }
  if (!(spec.width > 0.0)) throw std::invalid_argument("packet width must be > 0");

  const EigenSystem es0 = eigensystem(spec.momentum, consts);
  const Spinor pol = spec.branch == Branch::plus ? (spec.polarization == 1 ? es0.x1 : es0.x2)
                                                 : (spec.polarization == 1 ? es0.y1 : es0.y2);
  SpinorField s(grid, eps, consts);
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const Vec3 x = grid.position(f);
    double r2 = 0.0;
    double phase = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (grid.degenerate(a)) continue;
      double d = x[a] - spec.center[a];
      d -= grid.lengths[a] * std::round(d / grid.lengths[a]);
      r2 += d * d;
      phase += spec.momentum[a] * x[a] / eps;
    }
    const double env = std::isfinite(spec.width) ? std::exp(-r2 / (2.0 * spec.width * spec.width))
                                                 : 1.0;
    s.set_spinor(f, env * cd(std::cos(phase), std::sin(phase)) * pol);
  }

  std::vector<cd> hat = to_fourier(s);
  const std::size_t n = grid.size();
  for (std::size_t f = 0; f < n; ++f) {
    const EigenSystem es = eigensystem(grid_momentum(grid, eps, f), consts);
    const Mat4& proj = spec.branch == Branch::plus ? es.pi_plus : es.pi_minus;
    Spinor v(hat[f], hat[n + f], hat[2 * n + f], hat[3 * n + f]);
    v = proj * v;
    for (int c = 0; c < 4; ++c) hat[c * n + f] = v[c];
  }
  from_fourier(std::move(hat), s);
  const double target = std::pow(eps, 0.5 * grid.effective_dims());
  const double scale = std::sqrt(target / s.norm2());
  for (auto& z : s.psi) z *= scale;
  return s;
}

PathField::PathField(std::shared_ptr<const FieldPath> path, double alpha_time)
    : path_(std::move(path)), scale_(std::pow(path_->lattice->eps, alpha_time)) {}

double PathField::next_jump(double t) const {
  // Compared in physical time so that t == tau_j * scale is never returned.
  const auto& jt = path_->jump_times;
  const auto it = std::upper_bound(jt.begin(), jt.end(), t,
                                   [&](double tv, double tau) { return tv < tau * scale_; });
  return it == jt.end() ? std::numeric_limits<double>::infinity() : *it * scale_;
}

const FieldSample* PathField::field(double t) {
  const double tau = std::min(t / scale_, path_->horizon);
  const std::size_t i = path_->interval(tau);
  if (i != cached_) {
    sample_ = synthesize_table(*path_->lattice, path_->states[i], tau);
    cached_ = i;
  }
  return &sample_;
}

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("solver dt must be > 0");
  if (!(alpha_time > 0.0 && alpha_time <= 1.0))
    throw std::invalid_argument("alpha_time must lie in (0, 1]");
}

DiracPropagator::DiracPropagator(const PeriodicGrid& grid, double eps,
                                 const PhysicalConstants& consts)
    : grid_(grid),
      eps_(eps),
      consts_(consts),
      forward_(dims_of(grid), 4, FftPlan::Direction::forward),
      backward_(dims_of(grid), 4, FftPlan::Direction::backward),
      work_(4 * grid.size()) {
  consts.validate();
  const std::size_t n = grid.size();
  xi_.resize(n);
  lambda_.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    xi_[f] = grid_momentum(grid, eps, f);
    lambda_[f] = lambda_plus(xi_[f], consts);
    max_energy_ = std::max(max_energy_, consts.c * lambda_[f]);
  }
}

void DiracPropagator::free_flow(SpinorField& s, double dt) {
  const std::size_t n = grid_.size();
  work_ = s.psi;
  forward_.execute(work_.data());
  const double mc = consts_.mc();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t f = 0; f < n; ++f) {
    const double phi = consts_.c * lambda_[f] * dt / eps_;
    const double cs = std::cos(phi) * inv_n;
    const cd ms = cd(0.0, -std::sin(phi) / lambda_[f] * inv_n);
    const cd u0 = work_[f], u1 = work_[n + f], l0 = work_[2 * n + f], l1 = work_[3 * n + f];
    cd su0, su1, sl0, sl1;
    sigma_dot(xi_[f], u0, u1, su0, su1);
    sigma_dot(xi_[f], l0, l1, sl0, sl1);
    // Q psi = mc (lower, upper) + (-sigma.xi upper, sigma.xi lower)
    const cd q0 = mc * l0 - su0, q1 = mc * l1 - su1;
    const cd q2 = mc * u0 + sl0, q3 = mc * u1 + sl1;
    work_[f] = cs * u0 + ms * q0;
    work_[n + f] = cs * u1 + ms * q1;
    work_[2 * n + f] = cs * l0 + ms * q2;
    work_[3 * n + f] = cs * l1 + ms * q3;
  }
  backward_.execute(work_.data());
  s.psi.swap(work_);
}

void DiracPropagator::potential_flow(SpinorField& s, const FieldSample* field, double dt) const {
  if (field == nullptr) return;
  const std::size_t n = grid_.size();
  const double theta = consts_.e * dt / std::sqrt(eps_);
  for (std::size_t f = 0; f < n; ++f) {
    const Vec3 a(field->values[1][f], field->values[2][f], field->values[3][f]);
    const double na = a.norm();
    const double ph0 = theta * field->values[0][f];
    const cd g = cd(std::cos(ph0), std::sin(ph0));
    const cd u0 = s.psi[f], u1 = s.psi[n + f], l0 = s.psi[2 * n + f], l1 = s.psi[3 * n + f];
    if (na == 0.0) {
      s.psi[f] = g * u0;
      s.psi[n + f] = g * u1;
      s.psi[2 * n + f] = g * l0;
      s.psi[3 * n + f] = g * l1;
      continue;
    }
    const double cs = std::cos(theta * na);
    const cd is = cd(0.0, std::sin(theta * na));
    const Vec3 ah = a / na;
    cd su0, su1, sl0, sl1;
    sigma_dot(ah, u0, u1, su0, su1);
    sigma_dot(ah, l0, l1, sl0, sl1);
    // alpha.a = diag(-sigma.a, sigma.a)
    s.psi[f] = g * (cs * u0 - is * su0);
    s.psi[n + f] = g * (cs * u1 - is * su1);
    s.psi[2 * n + f] = g * (cs * l0 + is * sl0);
    s.psi[3 * n + f] = g * (cs * l1 + is * sl1);
  }
}

void DiracPropagator::step(SpinorField& s, double& t, const SolverConfig& cfg,
                           FieldProvider& field) {
  cfg.validate();
  if (!(s.grid == grid_) || s.eps != eps_)
    throw std::invalid_argument("spinor field does not match the propagator");
  if (max_energy_ * cfg.dt / eps_ > std::numbers::pi)
    throw std::invalid_argument("dt does not resolve the eps-scale phase rotation");
  const double n0 = s.norm2();
  const double t_end = t + cfg.dt;
  while (t < t_end) {
    const double jump = field.next_jump(t);
    double h = t_end - t;
    if (jump < t_end) h = jump - t;
    if (h <= 0.0) {
      t = jump;
      continue;
    }
    const FieldSample* a = field.field(t + 0.5 * h);
    potential_flow(s, a, 0.5 * h);
    free_flow(s, h);
    potential_flow(s, a, 0.5 * h);
    t = (jump < t_end) ? jump : t_end;
  }
  const double n1 = s.norm2();
  if (!std::isfinite(n1) ||
      std::abs(n1 - n0) > n0 * (cfg.norm_tolerance * cfg.dt + 1e-13))
    throw std::runtime_error("norm drift monitor tripped: time step too large");
}

std::vector<SnapshotInfo> run(SpinorField& state, const SolverConfig& cfg, FieldProvider& field,
                              double horizon, double output_interval, const Observer& observer) {
  cfg.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (!(output_interval > 0.0)) throw std::invalid_argument("output interval must be > 0");
  DiracPropagator prop(state.grid, state.eps, state.consts);
  std::vector<SnapshotInfo> index;
  double t = 0.0;
  index.push_back({t, state.norm2()});
  if (observer) observer(t, state);
  std::size_t k = 1;
  while (t < horizon - 1e-12 * std::max(1.0, horizon)) {
    const double target = std::min(horizon, k * output_interval);
    while (t < target - 1e-12 * std::max(1.0, target)) {
      SolverConfig c = cfg;
      c.dt = std::min(cfg.dt, target - t);
      prop.step(state, t, c, field);
    }
    t = target;
    index.push_back({t, state.norm2()});
    if (observer) observer(t, state);
    ++k;
  }
  return index;
}

nlohmann::json snapshot_to_json(const SpinorField& s, double t) {
  nlohmann::json j;
  j["schema"] = "diracrt.snapshot/1";
  j["grid"] = {{"points", s.grid.points}, {"lengths", s.grid.lengths}};
  j["eps"] = s.eps;
  j["time"] = t;
  j["constants"] = {{"m0", s.consts.m0}, {"c", s.consts.c}, {"e", s.consts.e}};
  j["layout"] = "point-major interleaved re,im for components 0..3";
  std::vector<double> data;
  data.reserve(8 * s.grid.size());
  for (std::size_t f = 0; f < s.grid.size(); ++f)
    for (int c = 0; c < 4; ++c) {
      data.push_back(s.at(c, f).real());
      data.push_back(s.at(c, f).imag());
    }
  j["data"] = std::move(data);
  return j;
}

SpinorField snapshot_from_json(const nlohmann::json& j, double* t) {
  if (j.value("schema", std::string()) != "diracrt.snapshot/1")
    throw std::invalid_argument("unsupported snapshot schema");
  PeriodicGrid g;
  g.points = j.at("grid").at("points").get<std::array<std::size_t, 3>>();
  g.lengths = j.at("grid").at("lengths").get<std::array<double, 3>>();
  g.validate();
  PhysicalConstants pc;
  pc.m0 = j.at("constants").at("m0").get<double>();
  pc.c = j.at("constants").at("c").get<double>();
  pc.e = j.at("constants").at("e").get<double>();
  SpinorField s(g, j.at("eps").get<double>(), pc);
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != 8 * g.size()) throw std::invalid_argument("snapshot data size mismatch");
  for (std::size_t f = 0; f < g.size(); ++f)
    for (int c = 0; c < 4; ++c) s.at(c, f) = cd(data[8 * f + 2 * c], data[8 * f + 2 * c + 1]);
  if (t != nullptr) *t = j.at("time").get<double>();
  return s;
}

}  // namespace diracrt
