#include "diracrt/random_field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "diracrt/fft.hpp"
#include "diracrt/rng.hpp"

namespace diracrt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void SpectrumDescriptor::validate() const {
  for (double a : amplitude)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw std::invalid_argument("spectrum amplitudes must be finite and >= 0");
  if (!(width > 0.0)) throw std::invalid_argument("spectrum width must be > 0");
  if (!(band_limit > 0.0)) throw std::invalid_argument("spectrum band_limit must be > 0");
  if (!(jump_rate > 0.0)) throw std::invalid_argument("spectrum jump_rate must be > 0");
  if (profile == Profile::tabulated) {
    if (table_radius.size() < 2)
      throw std::invalid_argument("tabulated spectrum needs at least two nodes");
    for (std::size_t i = 1; i < table_radius.size(); ++i)
      if (!(table_radius[i] > table_radius[i - 1]))
        throw std::invalid_argument("tabulated spectrum radii must increase");
    for (const auto& v : table_value) {
      if (v.size() != table_radius.size())
        throw std::invalid_argument("tabulated spectrum value count mismatch");
      for (double x : v)
        if (!(x >= 0.0)) throw std::invalid_argument("tabulated spectrum must be >= 0");
    }
  }
}

double SpectrumDescriptor::spatial(int k, const Vec3& p) const {
  const double r = p.norm();
  if (r > band_limit) return 0.0;
  if (profile == Profile::gaussian)
    return amplitude[k] * std::exp(-r * r / (2.0 * width * width));
  const auto& v = table_value[k];
  if (r <= table_radius.front()) return v.front();
  if (r >= table_radius.back()) return 0.0;
  const auto it = std::upper_bound(table_radius.begin(), table_radius.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - table_radius.begin());
  const double w = (r - table_radius[i - 1]) / (table_radius[i] - table_radius[i - 1]);
  return (1.0 - w) * v[i - 1] + w * v[i];
}

double SpectrumDescriptor::temporal(double t) const { return std::exp(-jump_rate * std::abs(t)); }

double SpectrumDescriptor::temporal_hat(double omega) const {
  return 2.0 * jump_rate / (jump_rate * jump_rate + omega * omega);
}

double SpectrumDescriptor::power(int k, double omega, const Vec3& p) const {
  return temporal_hat(omega) * spatial(k, p);
}

bool SpectrumDescriptor::is_zero() const {
  if (profile == Profile::gaussian)
    return std::all_of(amplitude.begin(), amplitude.end(), [](double a) { return a == 0.0; });
  for (const auto& v : table_value)
    for (double x : v)
      if (x != 0.0) return false;
  return true;
}

std::shared_ptr<const ModeLattice> ModeLattice::build(const PeriodicGrid& grid, double eps,
                                                      double band_limit) {
  grid.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  auto lat = std::make_shared<ModeLattice>();
  lat->grid = grid;
  lat->eps = eps;
  lat->band_limit = band_limit;
  lat->dims = grid.effective_dims();
  std::array<long, 3> reach{0, 0, 0};
  Vec3 dp = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    if (grid.degenerate(a)) continue;
    dp[a] = kTwoPi * eps / grid.lengths[a];
    lat->cell *= dp[a];
    reach[a] = static_cast<long>(std::floor(band_limit / dp[a] + 1e-12));
    if (2 * reach[a] >= static_cast<long>(grid.points[a]))
      throw std::invalid_argument("field band limit exceeds grid resolution");
  }
  std::map<std::array<long, 3>, std::size_t> where;
  for (long i = -reach[0]; i <= reach[0]; ++i)
    for (long j = -reach[1]; j <= reach[1]; ++j)
      for (long k = -reach[2]; k <= reach[2]; ++k) {
        const Vec3 p(dp[0] * i, dp[1] * j, dp[2] * k);
        if (p.norm() > band_limit * (1.0 + 1e-12)) continue;
        where[{i, j, k}] = lat->index.size();
        lat->index.push_back({i, j, k});
        lat->p.push_back(p);
      }
  lat->partner.resize(lat->index.size());
  for (std::size_t m = 0; m < lat->index.size(); ++m) {
    const auto& n = lat->index[m];
    lat->partner[m] = where.at({-n[0], -n[1], -n[2]});
  }
  return lat;
}

double mode_variance(const SpectrumDescriptor& spec, const ModeLattice& lattice, int k,
                     std::size_t mode) {
  return std::pow(kTwoPi, lattice.dims) * spec.spatial(k, lattice.p[mode]) * lattice.cell;
}

AmplitudeTable sample_invariant_measure(const SpectrumDescriptor& spec,
                                        const ModeLattice& lattice, std::uint64_t seed) {
  spec.validate();
  CounterRng rng(seed, 0x616d70);
  AmplitudeTable t;
  const std::size_t n = lattice.size();
  for (int k = 0; k < 4; ++k) {
    auto& a = t.a[k];
    a.assign(n, cd(0.0, 0.0));
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t q = lattice.partner[m];
      if (q < m) continue;
      const double sigma = std::sqrt(mode_variance(spec, lattice, k, m));
      if (q == m) {
        a[m] = cd(std::sqrt(3.0) * sigma * (2.0 * rng.uniform() - 1.0), 0.0);
      } else {
        const double r = std::sqrt(rng.uniform());
        const double th = kTwoPi * rng.uniform();
        a[m] = std::sqrt(2.0) * sigma * r * cd(std::cos(th), std::sin(th));
        a[q] = std::conj(a[m]);
      }
    }
  }
  return t;
}

double amplitude_bound(const SpectrumDescriptor& spec, const ModeLattice& lattice) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k)
    for (std::size_t m = 0; m < lattice.size(); ++m)
      s = std::max(s, mode_variance(spec, lattice, k, m));
  return std::sqrt(3.0 * s);
}

std::size_t FieldPath::interval(double tau) const {
  if (!(tau >= 0.0) || tau > horizon) throw std::out_of_range("time outside field path horizon");
  return static_cast<std::size_t>(std::upper_bound(jump_times.begin(), jump_times.end(), tau) -
                                  jump_times.begin());
}

double FieldPath::next_jump(double tau) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), tau);
  return it == jump_times.end() ? horizon : *it;
}

FieldPath evolve_jump_path(const AmplitudeTable& initial, const SpectrumDescriptor& spec,
                           std::shared_ptr<const ModeLattice> lattice, double horizon,
                           std::uint64_t seed) {
  spec.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  FieldPath path;
  path.lattice = std::move(lattice);
  path.spectrum = spec;
  path.horizon = horizon;
  path.seed = seed;
  path.states.push_back(initial);
  CounterRng clock(seed, 0x6a756d70);
  double t = clock.exponential(spec.jump_rate);
  while (t < horizon) {
    path.jump_times.push_back(t);
    path.states.push_back(
        sample_invariant_measure(spec, *path.lattice, derive_seed(seed, path.jump_times.size())));
    t += clock.exponential(spec.jump_rate);
  }
  return path;
}

FieldPath sample_path(const SpectrumDescriptor& spec, std::shared_ptr<const ModeLattice> lattice,
                      double horizon, std::uint64_t seed) {
  const AmplitudeTable a0 = sample_invariant_measure(spec, *lattice, derive_seed(seed, 0));
  return evolve_jump_path(a0, spec, std::move(lattice), horizon, seed);
}

FieldSample synthesize_table(const ModeLattice& lattice, const AmplitudeTable& table,
                             double tau) {
  const PeriodicGrid& g = lattice.grid;
  const std::size_t n = g.size();
  std::vector<cd> buf(4 * n, cd(0.0, 0.0));
  for (int k = 0; k < 4; ++k)
    for (std::size_t m = 0; m < lattice.size(); ++m)
      buf[k * n + g.slot(lattice.index[m])] += table.a[k][m];
  FftPlan plan({g.points[0], g.points[1], g.points[2]}, 4, FftPlan::Direction::backward);
  plan.execute(buf.data());
  const double scale = std::pow(kTwoPi, -lattice.dims);
  FieldSample s;
  s.grid = g;
  s.tau = tau;
  for (int k = 0; k < 4; ++k) {
    s.values[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const cd z = scale * buf[k * n + i];
      s.values[k][i] = z.real();
      s.max_imag = std::max(s.max_imag, std::abs(z.imag()));
    }
  }
  return s;
}

FieldSample synthesize_field(const FieldPath& path, double tau, const PeriodicGrid& grid) {
  if (!(grid == path.lattice->grid))
    throw std::invalid_argument("synthesis grid differs from the mode lattice grid");
  return synthesize_table(*path.lattice, path.state_at(tau), tau);
}

double field_at(const ModeLattice& lattice, const AmplitudeTable& table, int k, const Vec3& x) {
  cd s(0.0, 0.0);
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const double ph = lattice.p[m].dot(x) / lattice.eps;
    s += table.a[k][m] * cd(std::cos(ph), std::sin(ph));
  }
  return std::pow(kTwoPi, -lattice.dims) * s.real();
}

CorrelationEstimate estimate_correlation(const std::vector<FieldPath>& paths,
                                         const std::vector<CorrelationLag>& lags,
                                         const std::vector<double>& base_times) {
  if (paths.size() < 2) throw std::invalid_argument("correlation estimate needs >= 2 paths");
  if (base_times.empty()) throw std::invalid_argument("correlation estimate needs base times");
  CorrelationEstimate est;
  est.lags = lags;
  est.members = paths.size();
  const std::size_t nl = lags.size();
  std::vector<Mat4d> sum(nl), sum2(nl);
  for (auto& m : sum) m = {};
  for (auto& m : sum2) m = {};

  for (const FieldPath& path : paths) {
    const PeriodicGrid& g = path.lattice->grid;
    const std::size_t n = g.size();
    std::map<std::size_t, FieldSample> cache;  // keyed by state index
    auto sample = [&](double tau) -> const FieldSample& {
      const std::size_t i = path.interval(tau);
      auto it = cache.find(i);
      if (it == cache.end())
        it = cache.emplace(i, synthesize_table(*path.lattice, path.states[i], tau)).first;
      return it->second;
    };
    for (std::size_t l = 0; l < nl; ++l) {
      Mat4d acc{};
      for (double s : base_times) {
        const FieldSample& a = sample(s + lags[l].t);
        const FieldSample& b = sample(s);
        for (std::size_t f = 0; f < n; ++f) {
          const auto idx = g.unflat(f);
          const std::size_t shifted =
              g.flat(wrap_index(static_cast<long>(idx[0]) + lags[l].shift[0], g.points[0]),
                     wrap_index(static_cast<long>(idx[1]) + lags[l].shift[1], g.points[1]),
                     wrap_index(static_cast<long>(idx[2]) + lags[l].shift[2], g.points[2]));
          for (int m = 0; m < 4; ++m)
            for (int q = 0; q < 4; ++q) acc[m][q] += a.values[m][shifted] * b.values[q][f];
        }
      }
      const double norm = 1.0 / static_cast<double>(n * base_times.size());
      for (int m = 0; m < 4; ++m)
        for (int q = 0; q < 4; ++q) {
          const double v = acc[m][q] * norm;
          sum[l][m][q] += v;
          sum2[l][m][q] += v * v;
        }
    }
  }
  const double p = static_cast<double>(paths.size());
  est.mean.resize(nl);
  est.std_error.resize(nl);
  for (std::size_t l = 0; l < nl; ++l)
    for (int m = 0; m < 4; ++m)
      for (int q = 0; q < 4; ++q) {
        const double mu = sum[l][m][q] / p;
        const double var = std::max(0.0, (sum2[l][m][q] - p * mu * mu) / (p - 1.0));
        est.mean[l][m][q] = mu;
        est.std_error[l][m][q] = std::sqrt(var / p);
      }
  return est;
}

double lattice_correlation(const SpectrumDescriptor& spec, const ModeLattice& lattice, int m,
                           int n, double t, const Vec3& x) {
  if (m != n) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < lattice.size(); ++i)
    s += spec.spatial(m, lattice.p[i]) * std::cos(lattice.p[i].dot(x) / lattice.eps);
  return spec.temporal(t) * s * lattice.cell * std::pow(kTwoPi, -lattice.dims);
}

DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& c,
                               const std::vector<double>& err) {
  if (t.size() != c.size() || t.size() != err.size())
    throw std::invalid_argument("decay fit input sizes differ");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(c[i] > 3.0 * err[i]) || !(err[i] > 0.0)) continue;
    const double y = std::log(c[i]);
    const double sy = err[i] / c[i];
    const double w = 1.0 / (sy * sy);
    sw += w;
    swx += w * t[i];
    swy += w * y;
    swxx += w * t[i] * t[i];
    swxy += w * t[i] * y;
    ++used;
  }
  if (used < 2) throw std::invalid_argument("decay fit needs two resolved points");
  const double det = sw * swxx - swx * swx;
  DecayFit f;
  const double slope = (sw * swxy - swx * swy) / det;
  f.rate = -slope;
  f.rate_error = std::sqrt(sw / det);
  f.log_amplitude = (swxx * swy - swx * swxy) / det;
  f.points = used;
  return f;
}

PeriodogramEstimate estimate_power_spectrum(const std::vector<FieldPath>& paths, int k,
                                            std::size_t mode, double dtau,
                                            const std::vector<double>& omegas) {
  if (paths.size() < 2) throw std::invalid_argument("power spectrum needs >= 2 paths");
  PeriodogramEstimate est;
  est.omega = omegas;
  std::vector<double> sum(omegas.size(), 0.0), sum2(omegas.size(), 0.0);
  for (const FieldPath& path : paths) {
    const std::size_t nt = static_cast<std::size_t>(std::floor(path.horizon / dtau + 1e-9));
    if (nt < 2) throw std::invalid_argument("power spectrum horizon too short");
    std::vector<cd> series(nt);
    for (std::size_t j = 0; j < nt; ++j) series[j] = path.state_at(j * dtau).a[k][mode];
    const double scale =
        1.0 / (std::pow(kTwoPi, path.lattice->dims) * path.lattice->cell * nt * dtau);
    for (std::size_t w = 0; w < omegas.size(); ++w) {
      cd acc(0.0, 0.0);
      for (std::size_t j = 0; j < nt; ++j) {
        const double ph = -omegas[w] * j * dtau;
        acc += series[j] * cd(std::cos(ph), std::sin(ph));
      }
      const double v = std::norm(acc * dtau) * scale;
      sum[w] += v;
      sum2[w] += v * v;
    }
  }
  const double p = static_cast<double>(paths.size());
  est.mean.resize(omegas.size());
  est.std_error.resize(omegas.size());
  for (std::size_t w = 0; w < omegas.size(); ++w) {
    const double mu = sum[w] / p;
    est.mean[w] = mu;
    est.std_error[w] = std::sqrt(std::max(0.0, (sum2[w] - p * mu * mu) / (p - 1.0)) / p);
  }
  return est;
}

nlohmann::json spectrum_to_json(const SpectrumDescriptor& spec) {
  nlohmann::json j;
  j["schema"] = "diracrt.spectrum/1";
  j["profile"] = spec.profile == SpectrumDescriptor::Profile::gaussian ? "gaussian" : "tabulated";
  j["amplitude"] = spec.amplitude;
  j["width"] = spec.width;
  j["band_limit"] = spec.band_limit;
  j["jump_rate"] = spec.jump_rate;
  if (spec.profile == SpectrumDescriptor::Profile::tabulated) {
    j["table_radius"] = spec.table_radius;
    j["table_value"] = spec.table_value;
  }
  return j;
}

SpectrumDescriptor spectrum_from_json(const nlohmann::json& j) {
  SpectrumDescriptor s;
  const std::string prof = j.value("profile", std::string("gaussian"));
  if (prof == "gaussian") {
    s.profile = SpectrumDescriptor::Profile::gaussian;
  } else if (prof == "tabulated") {
    s.profile = SpectrumDescriptor::Profile::tabulated;
    s.table_radius = j.at("table_radius").get<std::vector<double>>();
    s.table_value = j.at("table_value").get<std::array<std::vector<double>, 4>>();
  } else {
    throw std::invalid_argument("spectrum.profile must be gaussian or tabulated, got " + prof);
  }
  if (j.contains("amplitude")) s.amplitude = j.at("amplitude").get<std::array<double, 4>>();
  s.width = j.value("width", s.width);
  s.band_limit = j.value("band_limit", s.band_limit);
  s.jump_rate = j.value("jump_rate", s.jump_rate);
  s.validate();
  return s;
}

nlohmann::json path_to_json(const FieldPath& path) {
  const ModeLattice& lat = *path.lattice;
  nlohmann::json j;
  j["schema"] = "diracrt.path/1";
  j["spectrum"] = spectrum_to_json(path.spectrum);
  j["grid"] = {{"points", lat.grid.points}, {"lengths", lat.grid.lengths}};
  j["eps"] = lat.eps;
  j["modes"] = lat.index;
  j["horizon"] = path.horizon;
  j["seed"] = path.seed;
  j["jump_times"] = path.jump_times;
  nlohmann::json states = nlohmann::json::array();
  for (const auto& st : path.states) {
    nlohmann::json comps = nlohmann::json::array();
    for (int k = 0; k < 4; ++k) {
      nlohmann::json arr = nlohmann::json::array();
      for (const cd& z : st.a[k]) arr.push_back({z.real(), z.imag()});
      comps.push_back(std::move(arr));
    }
    states.push_back(std::move(comps));
  }
  j["states"] = std::move(states);
  return j;
}

FieldPath path_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != "diracrt.path/1")
    throw std::invalid_argument("unsupported path schema");
  FieldPath path;
  path.spectrum = spectrum_from_json(j.at("spectrum"));
  PeriodicGrid g;
  g.points = j.at("grid").at("points").get<std::array<std::size_t, 3>>();
  g.lengths = j.at("grid").at("lengths").get<std::array<double, 3>>();
  path.lattice = ModeLattice::build(g, j.at("eps").get<double>(), path.spectrum.band_limit);
  if (j.at("modes").get<std::vector<std::array<long, 3>>>() != path.lattice->index)
    throw std::invalid_argument("path modes do not match the rebuilt lattice");
  path.horizon = j.at("horizon").get<double>();
  path.seed = j.at("seed").get<std::uint64_t>();
  path.jump_times = j.at("jump_times").get<std::vector<double>>();
  for (const auto& comps : j.at("states")) {
    AmplitudeTable t;
    for (int k = 0; k < 4; ++k) {
      const auto& arr = comps.at(k);
      if (arr.size() != path.lattice->size())
        throw std::invalid_argument("path state size mismatch");
      for (const auto& z : arr) t.a[k].emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
    }
    path.states.push_back(std::move(t));
  }
  if (path.states.size() != path.jump_times.size() + 1)
    throw std::invalid_argument("path needs one more state than jump times");
  return path;
}

}  // namespace diracrt
