#include "diracrt/transport.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <stdexcept>

#include "diracrt/fft.hpp"
#include "diracrt/parallel.hpp"

namespace diracrt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Eigen::MatrixXd;
using ColMap = Eigen::Map<MatrixXd>;
using ConstColMap = Eigen::Map<const MatrixXd>;

int xi_dims(const TransportLattice& lat) {
  int d = 0;
  for (bool b : lat.xi_axes) d += b ? 1 : 0;
  return d;
}

double lorentzian(double rate, double omega) { return 2.0 * rate / (rate * rate + omega * omega); }

// Wavenumber with the Nyquist slot treated as zero so real data stay real.
Vec3 stream_wavenumber(const PeriodicGrid& g, std::size_t f) {
  const auto idx = g.unflat(f);
  Vec3 k = g.wavenumber(f);
  for (int a = 0; a < 3; ++a)
    if (g.points[a] % 2 == 0 && idx[a] == g.points[a] / 2) k[a] = 0.0;
  return k;
}

Vec3 velocity(const Vec3& xi, const PhysicalConstants& pc, bool plus) {
  const Vec3 v = pc.c * xi / lambda_plus(xi, pc);
  return plus ? v : Vec3(-v);
}

std::array<std::size_t, 3> dims_of(const PeriodicGrid& g) {
  return {g.points[0], g.points[1], g.points[2]};
}

// Applies a per-(k, xi) multiplier to the x spectrum of one band.
template <class Mult>
void x_spectral(const TransportLattice& lat, const std::vector<double>& in, std::vector<double>& out,
                Mult mult) {
  const std::size_t nx = lat.nx(), nxi = lat.nxi();
  out.assign(in.size(), 0.0);
  if (nx == 1) {
    for (std::size_t i = 0; i < nxi; ++i) out[i] = (mult(Vec3::Zero(), i) * in[i]).real();
    return;
  }
  FftPlan fwd(dims_of(lat.xgrid), 1, FftPlan::Direction::forward);
  FftPlan bwd(dims_of(lat.xgrid), 1, FftPlan::Direction::backward);
  std::vector<Vec3> ks(nx);
  for (std::size_t f = 0; f < nx; ++f) ks[f] = stream_wavenumber(lat.xgrid, f);
  std::vector<cd> buf(nx);
  for (std::size_t i = 0; i < nxi; ++i) {
    for (std::size_t x = 0; x < nx; ++x) buf[x] = in[x * nxi + i];
    fwd.execute(buf.data());
    for (std::size_t f = 0; f < nx; ++f) buf[f] *= mult(ks[f], i) / static_cast<double>(nx);
    bwd.execute(buf.data());
    for (std::size_t x = 0; x < nx; ++x) out[x * nxi + i] = buf[x].real();
  }
}

void stream(TransportState& s, const PhysicalConstants& pc, double dt) {
  const TransportLattice& lat = *s.lattice;
  if (lat.nx() == 1) return;
  for (int b = 0; b < 2; ++b) {
    std::vector<double>& a = b == 0 ? s.alpha_plus : s.alpha_minus;
    std::vector<Vec3> v(lat.nxi());
    for (std::size_t i = 0; i < lat.nxi(); ++i) v[i] = velocity(lat.xi[i], pc, b == 0);
    std::vector<double> out;
    x_spectral(lat, a, out, [&](const Vec3& k, std::size_t i) {
      return std::polar(1.0, -k.dot(v[i]) * dt);
    });
    a.swap(out);
  }
}

void check_finite(const TransportState& s) {
  for (const auto* v : {&s.alpha_plus, &s.alpha_minus})
    for (double x : *v)
      if (!std::isfinite(x)) throw std::runtime_error("transport state became non-finite");
}

}  // namespace

std::shared_ptr<const TransportLattice> TransportLattice::build(
    const PeriodicGrid& xgrid, const std::array<bool, 3>& xi_axes,
    const std::array<double, 3>& lengths, double eps, double radius) {
  xgrid.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (!(radius > 0.0)) throw std::invalid_argument("xi radius must be > 0");
  auto lat = std::make_shared<TransportLattice>();
  lat->xgrid = xgrid;
  lat->xi_axes = xi_axes;
  lat->lengths = lengths;
  lat->eps = eps;
  lat->radius = radius;
  std::array<long, 3> reach{0, 0, 0};
  Vec3 ds = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    if (!xgrid.degenerate(a)) {
      if (!xi_axes[a]) throw std::invalid_argument("x resolved along an axis without xi");
      if (std::abs(xgrid.lengths[a] - lengths[a]) > 1e-12 * lengths[a])
        throw std::invalid_argument("x grid length differs from the xi lattice length");
    }
    if (!xi_axes[a]) continue;
    if (!(lengths[a] > 0.0)) throw std::invalid_argument("lattice lengths must be positive");
    ds[a] = kPi * eps / lengths[a];
    lat->xi_cell *= ds[a];
    lat->coupling_cell *= 2.0 * ds[a];
    reach[a] = static_cast<long>(std::floor(radius / ds[a] + 1e-9));
  }
  for (long i = -reach[0]; i <= reach[0]; ++i)
    for (long j = -reach[1]; j <= reach[1]; ++j)
      for (long k = -reach[2]; k <= reach[2]; ++k) {
        const Vec3 xi(ds[0] * i, ds[1] * j, ds[2] * k);
        if (xi.norm() > radius * (1.0 + 1e-12)) continue;
        lat->index.push_back({i, j, k});
        lat->xi.push_back(xi);
      }
  return lat;
}

std::shared_ptr<const TransportLattice> TransportLattice::for_wave_grid(const PeriodicGrid& wave,
                                                                        double eps, double radius,
                                                                        std::size_t x_points) {
  PeriodicGrid xg = wave;
  std::array<bool, 3> axes{};
  for (int a = 0; a < 3; ++a) {
    axes[a] = !wave.degenerate(a);
    if (axes[a] && x_points > 0) {
      if (x_points > wave.points[a])
        throw std::invalid_argument("transport x grid finer than the wave grid");
      xg.points[a] = x_points;
    }
  }
  return build(xg, axes, wave.lengths, eps, radius);
}

bool TransportLattice::coupled(std::size_t i, std::size_t j) const {
  for (int a = 0; a < 3; ++a)
    if (((index[i][a] - index[j][a]) & 1L) != 0) return false;
  return true;
}

Vec3 TransportLattice::transfer(std::size_t i, std::size_t j) const {
  Vec3 p = Vec3::Zero();
  for (int a = 0; a < 3; ++a)
    if (xi_axes[a])
      p[a] = (kTwoPi * eps / lengths[a]) * static_cast<double>((index[j][a] - index[i][a]) / 2);
  return p;
}

TransportState::TransportState(std::shared_ptr<const TransportLattice> lat)
    : lattice(std::move(lat)),
      alpha_plus(lattice->nx() * lattice->nxi(), 0.0),
      alpha_minus(lattice->nx() * lattice->nxi(), 0.0) {}

double TransportState::mass_plus() const {
  double s = 0.0;
  for (double v : alpha_plus) s += v;
  return s * lattice->phase_cell();
}

double TransportState::mass_minus() const {
  double s = 0.0;
  for (double v : alpha_minus) s += v;
  return s * lattice->phase_cell();
}

double TransportState::l2() const {
  double s = 0.0;
  for (double v : alpha_plus) s += v * v;
  for (double v : alpha_minus) s += v * v;
  return s * lattice->phase_cell();
}

double TransportState::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : alpha_plus) m = std::min(m, v);
  for (double v : alpha_minus) m = std::min(m, v);
  return m;
}

TransportState initial_state_from_modes(std::shared_ptr<const TransportLattice> lat,
                                        const ModeDecomposition& md) {
  return initial_state_from_bands(std::move(lat), md.grid, md.eps, {md.alpha_plus, md.alpha_minus});
}

TransportState initial_state_from_bands(std::shared_ptr<const TransportLattice> lat,
                                        const PeriodicGrid& wg, double eps,
                                        const std::array<std::vector<double>, 2>& bands) {
  if (bands[0].size() != wg.size() * wg.size() || bands[1].size() != bands[0].size())
    throw std::invalid_argument("lattice mismatch: band densities do not fit the wave grid");
  if (std::abs(eps - lat->eps) > 1e-15 * lat->eps)
    throw std::invalid_argument("lattice mismatch: eps differs");
  for (int a = 0; a < 3; ++a) {
    if (lat->xi_axes[a] != !wg.degenerate(a))
      throw std::invalid_argument("lattice mismatch: xi axes differ from the wave grid");
    if (lat->xi_axes[a] && std::abs(lat->lengths[a] - wg.lengths[a]) > 1e-12 * wg.lengths[a])
      throw std::invalid_argument("lattice mismatch: lengths differ");
  }
  TransportState s(lat);
  const std::size_t nw = wg.size(), nc = lat->nx(), nxi = lat->nxi();
  std::vector<std::size_t> wave_slot(nxi);
  for (std::size_t i = 0; i < nxi; ++i) {
    for (int a = 0; a < 3; ++a)
      if (lat->xi_axes[a] && 2 * std::abs(lat->index[i][a]) >= static_cast<long>(wg.points[a]))
        throw std::invalid_argument("lattice mismatch: xi ball exceeds the wave grid");
    wave_slot[i] = wg.slot(lat->index[i]);
  }
  // Coarse slot -> wave slot for retained Fourier modes.
  std::vector<std::pair<std::size_t, std::size_t>> keep;
  for (std::size_t f = 0; f < nc; ++f) {
    const auto idx = lat->xgrid.unflat(f);
    bool nyq = false;
    for (int a = 0; a < 3; ++a)
      nyq |= lat->xgrid.points[a] % 2 == 0 && lat->xgrid.points[a] > 1 &&
             idx[a] == lat->xgrid.points[a] / 2;
    if (!nyq) keep.emplace_back(f, wg.slot(lat->xgrid.signed_index(f)));
  }
  FftPlan fwd(dims_of(wg), 1, FftPlan::Direction::forward);
  FftPlan bwd(dims_of(lat->xgrid), 1, FftPlan::Direction::backward);
  std::vector<cd> wbuf(nw), cbuf(nc);
  for (int b = 0; b < 2; ++b) {
    const auto& src = bands[b];
    auto& dst = b == 0 ? s.alpha_plus : s.alpha_minus;
    for (std::size_t i = 0; i < nxi; ++i) {
      for (std::size_t x = 0; x < nw; ++x) wbuf[x] = src[x * nw + wave_slot[i]];
      fwd.execute(wbuf.data());
      std::fill(cbuf.begin(), cbuf.end(), cd(0.0, 0.0));
      for (const auto& [fc, fw] : keep) cbuf[fc] = wbuf[fw] / static_cast<double>(nw);
      if (nc > 1) bwd.execute(cbuf.data());
      for (std::size_t x = 0; x < nc; ++x) dst[x * nxi + i] = cbuf[x].real();
    }
  }
  return s;
}

std::array<double, 2> pair_state(const TransportState& s, const TestFunction& f) {
  const TransportLattice& lat = *s.lattice;
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t x = 0; x < lat.nx(); ++x) {
    const Vec3 pos = lat.xgrid.position(x);
    for (std::size_t i = 0; i < lat.nxi(); ++i) {
      const double fv = f(pos, lat.xi[i]);
      out[0] += fv * s.alpha_plus[x * lat.nxi() + i];
      out[1] += fv * s.alpha_minus[x * lat.nxi() + i];
    }
  }
  out[0] *= lat.phase_cell();
  out[1] *= lat.phase_cell();
  return out;
}

double CollisionKernelCache::symmetry_residual() const {
  return std::max((k_minus - k_minus.transpose()).cwiseAbs().maxCoeff(),
                  (k_plus - k_plus.transpose()).cwiseAbs().maxCoeff());
}

CollisionKernelCache build_kernels(const SpectrumDescriptor& spec,
                                   std::shared_ptr<const TransportLattice> lat,
                                   const PhysicalConstants& consts, const KernelOptions& opt) {
  if (!spec.closed_form())
    throw std::invalid_argument("collision kernels need a closed-form spectrum");
  spec.validate();
  consts.validate();
  if (!(opt.sharpening > 0.0)) throw std::invalid_argument("sharpening must be > 0");
  const double rate = spec.jump_rate * opt.sharpening;
  const std::size_t n = lat->nxi();
  CollisionKernelCache k;
  k.lattice = lat;
  k.consts = consts;
  k.k_minus = MatrixXd::Zero(n, n);
  k.k_plus = MatrixXd::Zero(n, n);
  k.prefactor = consts.e * consts.e * std::pow(kTwoPi, -xi_dims(*lat)) * lat->coupling_cell;
  std::vector<double> lam(n);
  for (std::size_t i = 0; i < n; ++i) lam[i] = lambda_plus(lat->xi[i], consts);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      if (!lat->coupled(i, j)) continue;
      const Vec3 p = lat->transfer(i, j);
      std::array<double, 4> s{};
      bool any = false;
      for (int c = 0; c < 4; ++c) any |= (s[c] = spec.spatial(c, p)) > 0.0;
      if (!any) continue;
      const ScatteringWeights w = scattering_weights(lat->xi[i], lat->xi[j], consts);
      const double lm = lorentzian(rate, consts.c * (lam[j] - lam[i]));
      const double lp = lorentzian(rate, consts.c * (lam[j] + lam[i]));
      double km = 0.0, kp = 0.0;
      for (int c = 0; c < 4; ++c) {
        km += w.omega[c] * s[c];
        kp += w.omega_tilde[c] * s[c];
      }
      k.k_minus(i, j) = km * lm;
      k.k_plus(i, j) = kp * lp;
    }
  });
  k.k_minus.triangularView<Eigen::StrictlyLower>() = k.k_minus.transpose();
  k.k_plus.triangularView<Eigen::StrictlyLower>() = k.k_plus.transpose();
  k.loss = k.prefactor * (k.k_minus + k.k_plus).rowwise().sum();
  return k;
}

std::vector<double> ElasticKernelCache::shell_mass(const std::vector<double>& alpha) const {
  const TransportLattice& lat = *lattice;
  std::map<long, std::size_t> pos;
  for (std::size_t s = 0; s < shell_ids.size(); ++s) pos[shell_ids[s]] = s;
  std::vector<double> m(shell_ids.size(), 0.0);
  for (std::size_t x = 0; x < lat.nx(); ++x)
    for (std::size_t i = 0; i < lat.nxi(); ++i) m[pos[shell[i]]] += alpha[x * lat.nxi() + i];
  for (double& v : m) v *= lat.phase_cell();
  return m;
}

ElasticKernelCache build_elastic_kernels(const SpectrumDescriptor& spec,
                                         std::shared_ptr<const TransportLattice> lat,
                                         const PhysicalConstants& consts, double shell_width,
                                         unsigned threads) {
  spec.validate();
  consts.validate();
  const std::size_t n = lat->nxi();
  ElasticKernelCache k;
  k.lattice = lat;
  k.consts = consts;
  double dq = 0.0;
  for (int a = 0; a < 3; ++a)
    if (lat->xi_axes[a]) dq = std::max(dq, kTwoPi * lat->eps / lat->lengths[a]);
  k.shell_width = shell_width > 0.0 ? shell_width : 2.0 * consts.c * dq;
  k.prefactor = consts.e * consts.e * std::pow(kTwoPi, 1 - xi_dims(*lat)) / k.shell_width *
                lat->coupling_cell;
  k.shell.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    k.shell[i] = std::lround(consts.c * lambda_plus(lat->xi[i], consts) / k.shell_width);
  k.shell_ids = k.shell;
  std::sort(k.shell_ids.begin(), k.shell_ids.end());
  k.shell_ids.erase(std::unique(k.shell_ids.begin(), k.shell_ids.end()), k.shell_ids.end());
  k.k_el = MatrixXd::Zero(n, n);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      if (k.shell[i] != k.shell[j] || !lat->coupled(i, j)) continue;
      const Vec3 p = lat->transfer(i, j);
      const ScatteringWeights w = scattering_weights(lat->xi[i], lat->xi[j], consts);
      double v = 0.0;
      for (int c = 0; c < 4; ++c) v += w.omega[c] * spec.spatial(c, p) * spec.temporal(0.0);
      k.k_el(i, j) = v;
    }
  });
  k.k_el.triangularView<Eigen::StrictlyLower>() = k.k_el.transpose();
  k.loss = k.prefactor * k.k_el.rowwise().sum();
  return k;
}

RhsPair collision_rhs(const TransportState& s, const CollisionKernelCache& k) {
  if (s.lattice != k.lattice) throw std::invalid_argument("state and kernels use different lattices");
  const std::size_t n = k.lattice->nxi(), nx = k.lattice->nx();
  const ConstColMap ap(s.alpha_plus.data(), n, nx), am(s.alpha_minus.data(), n, nx);
  RhsPair out{std::vector<double>(n * nx), std::vector<double>(n * nx)};
  ColMap op(out.plus.data(), n, nx), om(out.minus.data(), n, nx);
  op.noalias() = k.prefactor * (k.k_minus * ap + k.k_plus * am);
  op -= k.loss.asDiagonal() * ap;
  om.noalias() = k.prefactor * (k.k_minus * am + k.k_plus * ap);
  om -= k.loss.asDiagonal() * am;
  return out;
}

RhsPair elastic_rhs(const TransportState& s, const ElasticKernelCache& k) {
  if (s.lattice != k.lattice) throw std::invalid_argument("state and kernels use different lattices");
  const std::size_t n = k.lattice->nxi(), nx = k.lattice->nx();
  const ConstColMap ap(s.alpha_plus.data(), n, nx), am(s.alpha_minus.data(), n, nx);
  RhsPair out{std::vector<double>(n * nx), std::vector<double>(n * nx)};
  ColMap op(out.plus.data(), n, nx), om(out.minus.data(), n, nx);
  op.noalias() = k.prefactor * (k.k_el * ap);
  op -= k.loss.asDiagonal() * ap;
  om.noalias() = k.prefactor * (k.k_el * am);
  om -= k.loss.asDiagonal() * am;
  return out;
}

RhsPair free_streaming_rhs(const TransportState& s, const PhysicalConstants& consts) {
  const TransportLattice& lat = *s.lattice;
  RhsPair out;
  for (int b = 0; b < 2; ++b) {
    std::vector<Vec3> v(lat.nxi());
    for (std::size_t i = 0; i < lat.nxi(); ++i) v[i] = velocity(lat.xi[i], consts, b == 0);
    x_spectral(lat, b == 0 ? s.alpha_plus : s.alpha_minus, b == 0 ? out.plus : out.minus,
               [&](const Vec3& k, std::size_t i) { return cd(0.0, -k.dot(v[i])); });
  }
  return out;
}

Eigen::MatrixXd collision_generator(const CollisionKernelCache& k) {
  const Eigen::Index n = k.k_minus.rows();
  MatrixXd g(2 * n, 2 * n);
  const MatrixXd same = k.prefactor * k.k_minus - MatrixXd(k.loss.asDiagonal());
  g.topLeftCorner(n, n) = same;
  g.bottomRightCorner(n, n) = same;
  g.topRightCorner(n, n) = k.prefactor * k.k_plus;
  g.bottomLeftCorner(n, n) = k.prefactor * k.k_plus;
  return g;
}

TransportTrajectory integrate(TransportState& state, const TransportConfig& cfg,
                              TransportMode mode, const CollisionKernelCache* inelastic,
                              const ElasticKernelCache* elastic,
                              const TransportObserver& observer) {
  if (!(cfg.dt > 0.0) || !(cfg.horizon >= 0.0) || !(cfg.output_interval > 0.0))
    throw std::invalid_argument("transport dt, horizon and output interval must be positive");
  const bool el = mode == TransportMode::elastic;
  if ((el && !elastic) || (!el && !inelastic))
    throw std::invalid_argument("kernels for the requested transport mode are missing");
  const auto& lat = *state.lattice;
  if ((el ? elastic->lattice : inelastic->lattice) != state.lattice)
    throw std::invalid_argument("state and kernels use different lattices");
  const PhysicalConstants& pc = el ? elastic->consts : inelastic->consts;

  double vmax = 0.0;
  for (const Vec3& xi : lat.xi) vmax = std::max(vmax, velocity(xi, pc, true).norm());
  double dx = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a)
    if (!lat.xgrid.degenerate(a)) dx = std::min(dx, lat.xgrid.spacing(a));
  if (std::isfinite(dx) && cfg.dt * vmax / dx > cfg.cfl_limit)
    throw std::invalid_argument("transport dt violates the advection CFL bound");
  const double max_loss = el ? elastic->max_loss() : inelastic->max_loss();
  if (cfg.dt * max_loss >= cfg.stiffness_limit)
    throw std::invalid_argument("transport dt violates the collision stiffness bound");

  auto rhs = [&](const TransportState& s) {
    return el ? elastic_rhs(s, *elastic) : collision_rhs(s, *inelastic);
  };
  auto axpy = [](TransportState& dst, const TransportState& base, const RhsPair& r, double h) {
    for (std::size_t i = 0; i < base.alpha_plus.size(); ++i) {
      dst.alpha_plus[i] = base.alpha_plus[i] + h * r.plus[i];
      dst.alpha_minus[i] = base.alpha_minus[i] + h * r.minus[i];
    }
  };
  auto collide = [&](double h) {
    TransportState tmp = state;
    const RhsPair k1 = rhs(state);
    axpy(tmp, state, k1, 0.5 * h);
    const RhsPair k2 = rhs(tmp);
    axpy(tmp, state, k2, 0.5 * h);
    const RhsPair k3 = rhs(tmp);
    axpy(tmp, state, k3, h);
    const RhsPair k4 = rhs(tmp);
    for (std::size_t i = 0; i < state.alpha_plus.size(); ++i) {
      state.alpha_plus[i] +=
          h / 6.0 * (k1.plus[i] + 2.0 * k2.plus[i] + 2.0 * k3.plus[i] + k4.plus[i]);
      state.alpha_minus[i] +=
          h / 6.0 * (k1.minus[i] + 2.0 * k2.minus[i] + 2.0 * k3.minus[i] + k4.minus[i]);
    }
  };

  TransportTrajectory tr;
  std::vector<double> shell0_p, shell0_m;
  if (el) {
    tr.shell_ids = elastic->shell_ids;
    shell0_p = elastic->shell_mass(state.alpha_plus);
    shell0_m = elastic->shell_mass(state.alpha_minus);
  }
  auto record = [&] {
    tr.steps.push_back({state.time, state.mass(), state.l2(), state.min_value(), 0.0});
    if (el) {
      const auto sp = elastic->shell_mass(state.alpha_plus);
      const auto sm = elastic->shell_mass(state.alpha_minus);
      double drift = 0.0;
      for (std::size_t s = 0; s < sp.size(); ++s) {
        drift = std::max(drift, std::abs(sp[s] - shell0_p[s]) / std::max(std::abs(shell0_p[s]), 1e-300));
        drift = std::max(drift, std::abs(sm[s] - shell0_m[s]) / std::max(std::abs(shell0_m[s]), 1e-300));
      }
      tr.steps.back().shell_drift = drift;
    }
  };
  auto output = [&] {
    tr.output_times.push_back(state.time);
    if (el) {
      tr.shell_mass_plus.push_back(elastic->shell_mass(state.alpha_plus));
      tr.shell_mass_minus.push_back(elastic->shell_mass(state.alpha_minus));
    }
    if (observer) observer(state);
  };

  const double t0 = state.time;
  record();
  output();
  const long outputs = std::lround(std::ceil(cfg.horizon / cfg.output_interval - 1e-9));
  for (long o = 1; o <= outputs; ++o) {
    const double target = t0 + std::min(cfg.horizon, static_cast<double>(o) * cfg.output_interval);
    const double span = target - state.time;
    const long sub = std::max(1L, std::lround(std::ceil(span / cfg.dt - 1e-9)));
    const double h = span / static_cast<double>(sub);
    for (long s = 0; s < sub; ++s) {
      stream(state, pc, 0.5 * h);
      collide(h);
      stream(state, pc, 0.5 * h);
      state.time = s + 1 == sub ? target : state.time + h;
      check_finite(state);
      record();
    }
    output();
  }
  return tr;
}

void write_kernels(const CollisionKernelCache& k, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const std::uint64_t n = static_cast<std::uint64_t>(k.k_minus.rows());
  os.write("DRTKERN1", 8);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&k.prefactor), sizeof(double));
  for (const MatrixXd* m : {&k.k_minus, &k.k_plus})
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) {
        const double v = (*m)(r, c);
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
}

CollisionKernelCache read_kernels(const std::string& path,
                                  std::shared_ptr<const TransportLattice> lat,
                                  const PhysicalConstants& consts) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  std::uint64_t n = 0;
  CollisionKernelCache k;
  is.read(magic, 8);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&k.prefactor), sizeof(double));
  if (!is || std::memcmp(magic, "DRTKERN1", 8) != 0 || n != lat->nxi())
    throw std::runtime_error("malformed kernel file " + path);
  k.lattice = std::move(lat);
  k.consts = consts;
  for (MatrixXd* m : {&k.k_minus, &k.k_plus}) {
    m->resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) is.read(reinterpret_cast<char*>(&(*m)(r, c)), sizeof(double));
  }
  if (!is) throw std::runtime_error("truncated kernel file " + path);
  k.loss = k.prefactor * (k.k_minus + k.k_plus).rowwise().sum();
  return k;
}

void write_trajectory_csv(const TransportTrajectory& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t,mass,mass_drift,l2,min_value,shell_drift\n" << std::setprecision(17);
  const double m0 = tr.steps.empty() ? 0.0 : tr.steps.front().mass;
  for (const auto& s : tr.steps)
    os << s.t << ',' << s.mass << ',' << (m0 != 0.0 ? std::abs(s.mass - m0) / std::abs(m0) : 0.0)
       << ',' << s.l2 << ',' << s.min_value << ',' << s.shell_drift << '\n';
}

}  // namespace diracrt
