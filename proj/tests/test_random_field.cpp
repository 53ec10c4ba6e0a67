#include <doctest.h>

#include <cmath>
#include <numbers>

#include "diracrt/random_field.hpp"
#include "diracrt/rng.hpp"

using namespace diracrt;

namespace {

SpectrumDescriptor default_spectrum() {
  SpectrumDescriptor s;
  s.amplitude = {2.0, 1.0, 0.5, 1.5};
  s.width = 0.5;
  s.band_limit = 1.5;
  s.jump_rate = 1.0;
  return s;
}

std::shared_ptr<const ModeLattice> small_lattice() {
  return ModeLattice::build(PeriodicGrid::line(64, 2.0 * std::numbers::pi), 0.125, 1.5);
}

}  // namespace

TEST_CASE("mode lattice is symmetric and band limited") {
  const auto lat = small_lattice();
  CHECK(lat->size() == 25);  // |n| <= 12
  for (std::size_t m = 0; m < lat->size(); ++m) {
    CHECK(lat->p[m].norm() <= 1.5 + 1e-12);
    CHECK(lat->index[lat->partner[m]][2] == -lat->index[m][2]);
  }
  CHECK_THROWS_AS(ModeLattice::build(PeriodicGrid::line(16, 2.0 * std::numbers::pi), 0.125, 1.5),
                  std::invalid_argument);
}

TEST_CASE("invariant measure draws") {
  const auto lat = small_lattice();
  SUBCASE("zero spectrum gives zero amplitudes") {
    SpectrumDescriptor z = default_spectrum();
    z.amplitude = {0, 0, 0, 0};
    const auto t = sample_invariant_measure(z, *lat, 1);
    for (int k = 0; k < 4; ++k)
      for (const cd& a : t.a[k]) CHECK(a == cd(0.0, 0.0));
  }
  SUBCASE("Hermitian pairing is exact and amplitudes bounded") {
    const auto spec = default_spectrum();
    const double bound = amplitude_bound(spec, *lat);
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto t = sample_invariant_measure(spec, *lat, s);
      for (int k = 0; k < 4; ++k)
        for (std::size_t m = 0; m < lat->size(); ++m) {
          CHECK(t.a[k][lat->partner[m]] == std::conj(t.a[k][m]));
          CHECK(std::abs(t.a[k][m]) <= bound);
        }
    }
  }
  SUBCASE("mean zero and variance matches the spectrum") {
    const auto spec = default_spectrum();
    const int draws = 10000;
    const std::size_t probe[] = {12, 13, 20};  // p = 0, one step, far mode
    for (std::size_t m : probe) {
      for (int k = 0; k < 4; ++k) {
        double sr = 0, si = 0, sr2 = 0, si2 = 0, s2 = 0, s4 = 0;
        for (int d = 0; d < draws; ++d) {
          const cd a = sample_invariant_measure(spec, *lat, derive_seed(99, d)).a[k][m];
          sr += a.real();
          si += a.imag();
          sr2 += a.real() * a.real();
          si2 += a.imag() * a.imag();
          s2 += std::norm(a);
          s4 += std::norm(a) * std::norm(a);
        }
        const double n = draws;
        const double se_r = std::sqrt(sr2 / n / n), se_i = std::sqrt(si2 / n / n);
        CHECK(std::abs(sr / n) < 3.0 * se_r + 1e-300);
        CHECK(std::abs(si / n) <= 3.0 * se_i + 1e-300);
        const double var = mode_variance(spec, *lat, k, m);
        const double se_v = std::sqrt((s4 / n - (s2 / n) * (s2 / n)) / n);
        CHECK(std::abs(s2 / n - var) < 3.0 * se_v);
      }
    }
  }
}

TEST_CASE("jump path structure") {
  const auto lat = small_lattice();
  const auto spec = default_spectrum();
  SUBCASE("short horizon has a single state") {
    // The first holding time for this seed exceeds the tiny horizon.
    const auto path = sample_path(spec, lat, 1e-6, 4);
    CHECK(path.jump_times.empty());
    CHECK(path.states.size() == 1);
    CHECK(path.next_jump(0.0) == path.horizon);
  }
  SUBCASE("deterministic given the seed") {
    const auto a = sample_path(spec, lat, 5.0, 17);
    const auto b = sample_path(spec, lat, 5.0, 17);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.states == b.states);
    const auto c = sample_path(spec, lat, 5.0, 18);
    CHECK(a.jump_times != c.jump_times);
  }
  SUBCASE("Poisson jump count") {
    const int n = 4000;
    const double horizon = 3.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      total += static_cast<double>(evolve_jump_path(AmplitudeTable{}, spec, lat, horizon,
                                                    derive_seed(5, i))
                                       .jump_times.size());
    CHECK(std::abs(total / n - horizon) < 3.0 * std::sqrt(horizon) / std::sqrt(double(n)));
  }
  SUBCASE("piecewise constant and time-bounded") {
    const auto path = sample_path(spec, lat, 4.0, 21);
    REQUIRE(path.jump_times.size() >= 1);
    const double t1 = path.jump_times[0];
    CHECK(&path.state_at(0.0) == &path.state_at(0.5 * t1));
    CHECK(&path.state_at(t1) == &path.states[1]);
    CHECK_THROWS_AS(path.state_at(4.5), std::out_of_range);
    CHECK_THROWS_AS(synthesize_field(path, 4.5, lat->grid), std::out_of_range);
  }
  SUBCASE("rate must be positive") {
    auto bad = spec;
    bad.jump_rate = 0.0;
    CHECK_THROWS_AS(evolve_jump_path(AmplitudeTable{}, bad, lat, 1.0, 1), std::invalid_argument);
  }
}

TEST_CASE("field synthesis") {
  const auto lat = small_lattice();
  const PeriodicGrid& g = lat->grid;
  SUBCASE("single Hermitian pair gives a cosine") {
    AmplitudeTable t;
    for (auto& a : t.a) a.assign(lat->size(), cd(0.0, 0.0));
    const std::size_t m = 15;  // n = 3
    t.a[0][m] = 1.0;
    t.a[0][lat->partner[m]] = 1.0;
    const auto s = synthesize_table(*lat, t);
    for (std::size_t f = 0; f < g.size(); ++f) {
      const double x = g.position(f)[2];
      CHECK(std::abs(s.values[0][f] - std::cos(3.0 * x) / std::numbers::pi) < 1e-14);
      CHECK(s.values[1][f] == 0.0);
    }
  }
  SUBCASE("random paths synthesize real fields matching direct sums") {
    const auto path = sample_path(default_spectrum(), lat, 2.0, 8);
    for (double tau : {0.0, 0.7, 1.9}) {
      const auto s = synthesize_field(path, tau, g);
      CHECK(s.max_imag < 1e-12);
      for (std::size_t f = 0; f < g.size(); f += 7)
        for (int k = 0; k < 4; ++k)
          CHECK(std::abs(s.values[k][f] - field_at(*lat, path.state_at(tau), k, g.position(f))) <
                1e-12);
    }
    CHECK_THROWS_AS(synthesize_field(path, 0.0, PeriodicGrid::line(32, 1.0)),
                    std::invalid_argument);
  }
}

TEST_CASE("correlation estimates") {
  const auto lat = small_lattice();
  const auto spec = default_spectrum();
  std::vector<FieldPath> paths;
  for (int i = 0; i < 400; ++i) paths.push_back(sample_path(spec, lat, 3.0, derive_seed(77, i)));
  const std::vector<CorrelationLag> lags{{0.0, {0, 0, 0}}, {0.0, {0, 0, 3}}, {0.5, {0, 0, 0}},
                                         {1.0, {0, 0, 2}}};
  const auto est = estimate_correlation(paths, lags, {0.0, 0.5, 1.0});
  for (std::size_t l = 0; l < lags.size(); ++l) {
    const Vec3 x(0, 0, lags[l].shift[2] * lat->grid.spacing(2));
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        const double exact = lattice_correlation(spec, *lat, m, n, lags[l].t, x);
        CHECK(std::abs(est.mean[l][m][n] - exact) < 3.0 * est.std_error[l][m][n] + 1e-15);
      }
  }
  // Stationarity: early and late windows agree.
  const auto early = estimate_correlation(paths, {{0.0, {0, 0, 0}}}, {0.0, 0.5});
  const auto late = estimate_correlation(paths, {{0.0, {0, 0, 0}}}, {2.0, 2.5});
  for (int k = 0; k < 4; ++k) {
    const double se = std::hypot(early.std_error[0][k][k], late.std_error[0][k][k]);
    CHECK(std::abs(early.mean[0][k][k] - late.mean[0][k][k]) < 3.0 * se);
  }

  SpectrumDescriptor zero = spec;
  zero.amplitude = {0, 0, 0, 0};
  std::vector<FieldPath> zp{sample_path(zero, lat, 1.0, 1), sample_path(zero, lat, 1.0, 2)};
  const auto ze = estimate_correlation(zp, lags, {0.0});
  for (const auto& m : ze.mean)
    for (const auto& row : m)
      for (double v : row) CHECK(v == 0.0);
  CHECK_THROWS_AS(estimate_correlation({paths[0]}, lags, {0.0}), std::invalid_argument);
}

TEST_CASE("temporal decay rate of a scalar functional") {
  const auto lat = small_lattice();
  auto spec = default_spectrum();
  spec.jump_rate = 1.0;
  std::vector<double> ts, mean, se;
  const int npaths = 10000;
  std::vector<FieldPath> paths;
  paths.reserve(npaths);
  for (int i = 0; i < npaths; ++i)
    paths.push_back(sample_path(spec, lat, 2.0, derive_seed(2024, i)));
  std::vector<CorrelationLag> lags;
  for (int i = 0; i <= 8; ++i) lags.push_back({0.25 * i, {0, 0, 0}});
  const auto est = estimate_correlation(paths, lags, {0.0});
  for (std::size_t l = 0; l < lags.size(); ++l) {
    ts.push_back(lags[l].t);
    mean.push_back(est.mean[l][0][0]);
    se.push_back(est.std_error[l][0][0]);
  }
  const DecayFit fit = fit_exponential_decay(ts, mean, se);
  CHECK(std::abs(fit.rate - 1.0) < 0.1);
  CHECK(fit.points >= 5);
}

TEST_CASE("mode periodogram matches the exact discrete expectation") {
  const auto lat = small_lattice();
  const auto spec = default_spectrum();
  std::vector<FieldPath> paths;
  for (int i = 0; i < 600; ++i) paths.push_back(sample_path(spec, lat, 8.0, derive_seed(31, i)));
  const std::size_t mode = 13;
  const int k = 0;
  const double dtau = 0.05;
  const std::vector<double> omegas{0.0, 0.5, 1.0, 2.0, 4.0};
  const auto est = estimate_power_spectrum(paths, k, mode, dtau, omegas);
  const double sigma2 = mode_variance(spec, *lat, k, mode);
  const std::size_t nt = 160;
  const double scale = 1.0 / (2.0 * std::numbers::pi * lat->cell * nt * dtau);
  for (std::size_t w = 0; w < omegas.size(); ++w) {
    double exact = 0.0;
    for (std::size_t j = 0; j < nt; ++j)
      for (std::size_t l = 0; l < nt; ++l) {
        const double d = (double(j) - double(l)) * dtau;
        exact += sigma2 * std::exp(-std::abs(d)) * std::cos(omegas[w] * d);
      }
    exact *= dtau * dtau * scale;
    CHECK(est.mean[w] >= 0.0);
    CHECK(std::abs(est.mean[w] - exact) < 3.0 * est.std_error[w]);
  }
  // Long-horizon limit approaches the Lorentzian times S(p).
  CHECK(est.mean[3] == doctest::Approx(spec.power(k, 2.0, lat->p[mode])).epsilon(0.25));
}

TEST_CASE("spectrum and path JSON round trip") {
  const auto lat = small_lattice();
  const auto path = sample_path(default_spectrum(), lat, 3.0, 42);
  const auto j = path_to_json(path);
  const FieldPath back = path_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.jump_times == path.jump_times);
  CHECK(back.states == path.states);
  CHECK(back.lattice->index == lat->index);
  CHECK(back.seed == 42);

  SpectrumDescriptor tab;
  tab.profile = SpectrumDescriptor::Profile::tabulated;
  tab.table_radius = {0.0, 1.0, 1.5};
  tab.table_value = {std::vector<double>{1, 0.5, 0}, {0, 0, 0}, {0, 0, 0}, {2, 1, 0}};
  const auto tb = spectrum_from_json(spectrum_to_json(tab));
  CHECK(tb.spatial(0, Vec3(0, 0, 0.5)) == doctest::Approx(0.75));
  CHECK(tb.spatial(3, Vec3(0, 0, 2.0)) == 0.0);
  CHECK_FALSE(tb.closed_form());
  CHECK_THROWS_AS(spectrum_from_json(nlohmann::json{{"profile", "lorentz"}}),
                  std::invalid_argument);
}
