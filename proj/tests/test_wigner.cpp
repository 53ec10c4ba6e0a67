#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "diracrt/wigner.hpp"

using namespace diracrt;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicGrid grid2(std::size_t nx, std::size_t nz, double l) {
  PeriodicGrid g;
  g.points = {nx, 1, nz};
  g.lengths = {l, 1.0, l};
  return g;
}

// Random spinor field whose Fourier content satisfies |s| <= reach per axis.
SpinorField band_limited(const PeriodicGrid& g, double eps, long reach, std::uint64_t seed) {
  SpinorField s(g, eps, PhysicalConstants{});
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<cd> hat(4 * g.size(), cd(0.0, 0.0));
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto k = g.signed_index(f);
    if (std::abs(k[0]) > reach || std::abs(k[1]) > reach || std::abs(k[2]) > reach) continue;
    for (int c = 0; c < 4; ++c) hat[c * g.size() + f] = cd(nd(gen), nd(gen));
  }
  from_fourier(std::move(hat), s);
  return s;
}

Mat4 random_mat(std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Mat4 m;
  for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = cd(nd(gen), nd(gen));
  return m;
}

// Direct O(N^2) evaluation of the defining sum, independent of the FFT path.
Mat4 wigner_direct(const SpinorField& u, const SpinorField& v, std::size_t n, std::size_t j) {
  const PeriodicGrid& g = u.grid;
  const auto ni = g.unflat(n);
  const auto ji = g.unflat(j);
  double c = 1.0;
  for (int a = 0; a < 3; ++a)
    if (!g.degenerate(a)) c *= g.spacing(a) / (kPi * u.eps);
  Mat4 w = Mat4::Zero();
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto mi = g.unflat(m);
    std::array<long, 3> lo, hi;
    double ph = 0.0;
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<long>(ni[a]) - static_cast<long>(mi[a]);
      hi[a] = static_cast<long>(ni[a]) + static_cast<long>(mi[a]);
      ph += 2.0 * kPi * static_cast<double>(ji[a] * mi[a]) / static_cast<double>(g.points[a]);
    }
    const std::size_t fl = g.slot(lo), fh = g.slot(hi);
    w += std::polar(1.0, ph) * u.spinor(fl) * v.spinor(fh).adjoint();
  }
  return c * w;
}

double max_diff(const std::vector<Mat4>& a, const std::vector<Mat4>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("transform matches the direct sum in one and two dimensions") {
  for (const PeriodicGrid& g : {PeriodicGrid::line(32, 2.0 * kPi), grid2(8, 12, 2.0 * kPi)}) {
    const SpinorField u = band_limited(g, 0.25, 100, 1);
    const SpinorField v = band_limited(g, 0.25, 100, 2);
    const WignerData w = wigner_transform(u, v);
    double err = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < g.size(); n += 3)
      for (std::size_t j = 0; j < g.size(); ++j) {
        const Mat4 d = wigner_direct(u, v, n, j);
        err = std::max(err, max_abs(w.at(n, j) - d));
        scale = std::max(scale, max_abs(d));
      }
    CHECK(err < 1e-12 * scale);
  }
}

TEST_CASE("threaded rows agree bitwise with the serial transform") {
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const SpinorField u = band_limited(g, 0.125, 10, 3);
  const WignerData a = wigner_transform(u, 1);
  const WignerData b = wigner_transform(u, 3);
  CHECK(max_diff(a.w, b.w) == 0.0);
}

TEST_CASE("plane wave concentrates on the doubled slot") {
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const double eps = 0.125;
  SpinorField u(g, eps, PhysicalConstants{});
  const Spinor v0 = Spinor(cd(1, 0), cd(0, 2), cd(-1, 1), cd(0.5, 0)).normalized();
  const long k = 5;
  for (std::size_t f = 0; f < g.size(); ++f)
    u.set_spinor(f, std::polar(1.0, 2.0 * kPi * k * static_cast<double>(f) / 64.0) * v0);
  const WignerData w = wigner_transform(u);
  const std::size_t jstar = g.slot({0, 0, 2 * k});
  const double amp = g.spacing(2) / (kPi * eps) * 64.0;
  double off = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Mat4 expect = j == jstar ? Mat4(amp * v0 * v0.adjoint()) : Mat4::Zero();
      off = std::max(off, max_abs(w.at(n, j) - expect));
    }
  CHECK(off < 1e-12);
  // The peak sits at xi = eps k, the physical momentum of the wave.
  CHECK(w.xi(jstar)[2] == doctest::Approx(eps * k).epsilon(1e-14));
}

TEST_CASE("marginal recovers the pointwise outer product") {
  const PeriodicGrid g = grid2(8, 16, 3.0);
  const SpinorField u = band_limited(g, 0.2, 100, 4);
  const SpinorField v = band_limited(g, 0.2, 100, 5);
  const WignerData w = wigner_transform(u, v);
  double err = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    Mat4 s = Mat4::Zero();
    for (std::size_t j = 0; j < g.size(); ++j) s += w.at(n, j);
    s *= w.xi_cell();
    err = std::max(err, max_abs(s - u.spinor(n) * v.spinor(n).adjoint()));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("self transform is Hermitian and swapping arguments conjugates") {
  const PeriodicGrid g = PeriodicGrid::line(32, 2.0 * kPi);
  const SpinorField u = band_limited(g, 0.25, 100, 6);
  const SpinorField v = band_limited(g, 0.25, 100, 7);
  const WignerData w = wigner_transform(u);
  const WignerData wuv = wigner_transform(u, v), wvu = wigner_transform(v, u);
  double herm = 0.0, swap = 0.0;
  for (std::size_t p = 0; p < w.w.size(); ++p) {
    herm = std::max(herm, max_abs(w.w[p] - w.w[p].adjoint()));
    swap = std::max(swap, max_abs(wuv.w[p] - wvu.w[p].adjoint()));
  }
  CHECK(herm < 1e-12);
  CHECK(swap < 1e-12);
}

TEST_CASE("ghost copy and norm identity for band-limited data") {
  for (const PeriodicGrid& g : {PeriodicGrid::line(64, 2.0 * kPi), grid2(16, 16, 2.0 * kPi)}) {
    const double eps = 0.125;
    const SpinorField u = band_limited(g, eps, static_cast<long>(g.points[2] / 4) - 1, 8);
    const WignerData w = wigner_transform(u);
    const double direct = std::pow(2.0 * kPi * eps, -0.5 * g.effective_dims()) * u.norm2();
    CHECK(w.norm() == doctest::Approx(direct).epsilon(1e-10));
    CHECK(wigner_norm_fourier(u) == doctest::Approx(direct).epsilon(1e-12));

    if (g.effective_dims() == 1) {
      double ghost = 0.0;
      for (std::size_t n = 0; n < 32; ++n)
        for (std::size_t j = 0; j < 64; ++j) {
          const double sgn = (g.signed_index(j)[2] % 2 == 0) ? 1.0 : -1.0;
          ghost = std::max(ghost, max_abs(w.at(n + 32, j) - sgn * w.at(n, j)));
        }
      CHECK(ghost < 1e-12);
    }
  }
}

TEST_CASE("norm identity fails once content reaches the aliased band") {
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const SpinorField u = band_limited(g, 0.125, 31, 9);
  const WignerData w = wigner_transform(u);
  const double direct = std::pow(2.0 * kPi * 0.125, -0.5) * u.norm2();
  CHECK(std::abs(w.norm() - direct) > 1e-6 * direct);
}

TEST_CASE("mode decomposition invariants") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const double eps = 0.125;
  const SpinorField u = band_limited(g, eps, 12, 10);
  const WignerData w = wigner_transform(u);
  const ModeDecomposition md = mode_decompose(w, pc);
  double rec = 0.0, herm = 0.0, trace = 0.0;
  for (std::size_t p = 0; p < md.size(); ++p) {
    rec = std::max(rec, max_abs(reconstruct(md, p, pc) - w.w[p]));
    herm = std::max(herm, std::abs(md.a[0][1][p] - std::conj(md.a[1][0][p])));
    herm = std::max(herm, std::abs(md.b[0][1][p] - std::conj(md.b[1][0][p])));
    herm = std::max(herm, std::abs(md.c[0][1][p] - std::conj(md.d[1][0][p])));
    const EigenSystem es = eigensystem(w.xi(p % 64), pc);
    trace = std::max(trace, std::abs(md.alpha_plus[p] - (es.pi_plus * w.w[p]).trace().real()));
    trace = std::max(trace, std::abs(md.alpha_minus[p] - (es.pi_minus * w.w[p]).trace().real()));
  }
  double scale = 0.0;
  for (const Mat4& m : w.w) scale = std::max(scale, max_abs(m));
  CHECK(rec < 1e-12 * scale);
  CHECK(herm < 1e-12 * scale);
  CHECK(trace < 1e-12 * scale);

  PhysicalConstants massless;
  massless.m0 = 0.0;
  CHECK_THROWS_AS(mode_decompose(w, massless), std::domain_error);
}

TEST_CASE("plane wave in the positive band has pure alpha_plus") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const double eps = 0.125;
  WavepacketSpec spec;
  spec.momentum = Vec3(0, 0, eps * 3.0);
  const SpinorField u = make_wavepacket(spec, g, eps, pc);
  const ModeDecomposition md = mode_decompose(wigner_transform(u), pc);
  double plus = 0.0, other = 0.0;
  for (std::size_t p = 0; p < md.size(); ++p) {
    plus += md.alpha_plus[p];
    other += std::abs(md.alpha_minus[p]) + std::abs(md.c[0][0][p]) + std::abs(md.d[0][0][p]);
  }
  CHECK(plus > 0.0);
  CHECK(other < 1e-12 * plus);
}

TEST_CASE("localized packet is dominantly one band") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(256, 2.0 * kPi);
  const double eps = 1.0 / 32.0;
  WavepacketSpec spec;
  spec.center = Vec3(0, 0, kPi);
  spec.momentum = Vec3(0, 0, 1.0);
  spec.width = 0.4;
  for (Branch b : {Branch::plus, Branch::minus}) {
    spec.branch = b;
    const ModeDecomposition md = mode_decompose(wigner_transform(make_wavepacket(spec, g, eps, pc)), pc);
    double ap = 0.0, am = 0.0;
    for (std::size_t p = 0; p < md.size(); ++p) {
      ap += md.alpha_plus[p];
      am += md.alpha_minus[p];
    }
    const double purity = (b == Branch::plus ? ap : am) / (std::abs(ap) + std::abs(am));
    CHECK(purity > 0.99);
  }
}

TEST_CASE("cross mode oscillates at twice the band energy") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(32, 2.0 * kPi);
  const double eps = 0.25;
  const long k = 2;
  const Vec3 xi(0, 0, eps * k);
  const EigenSystem es = eigensystem(xi, pc);
  SpinorField u(g, eps, pc);
  for (std::size_t f = 0; f < g.size(); ++f)
    u.set_spinor(f, std::polar(1.0, 2.0 * kPi * k * static_cast<double>(f) / 32.0) * (es.x1 + es.y1));
  const std::size_t jstar = g.slot({0, 0, 2 * k});
  const cd c0 = mode_decompose(wigner_transform(u), pc).c[0][0][jstar];
  DiracPropagator prop(g, eps, pc);
  const double t = 0.37;
  prop.free_flow(u, t);
  const cd c1 = mode_decompose(wigner_transform(u), pc).c[0][0][jstar];
  const cd expect = c0 * std::polar(1.0, -2.0 * pc.c * es.lambda_plus * t / eps);
  CHECK(std::abs(c1 - expect) < 1e-10 * std::abs(c0));
}

TEST_CASE("pairing helpers") {
  std::vector<std::vector<cd>> frames(5, std::vector<cd>{cd(1, 0), cd(0, 2)});
  std::vector<double> times{0.0, 0.1, 0.3, 0.6, 1.0};
  const std::vector<double> f{2.0, 0.5};
  CHECK(std::abs(phase_pairing(frames[0], f, 0.5) - cd(1.0, 0.5)) < 1e-15);
  CHECK(std::abs(weak_pairing(frames, f, 0.5, times) - cd(1.0, 0.5)) < 1e-14);
  // Linear in time integrates exactly under the trapezoid rule.
  std::vector<cd> lin;
  for (double t : times) lin.push_back(cd(t, -2.0 * t));
  CHECK(std::abs(time_integral(lin, times) - cd(0.5, -1.0)) < 1e-15);
  CHECK_THROWS_AS(weak_pairing(frames, f, 0.5, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(phase_pairing(frames[0], {1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("oscillating test function pairs to zero in the limit") {
  // <W, cos(x/eps)> for a fixed smooth packet decays with eps.
  const PhysicalConstants pc;
  double prev = 1e300;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const std::size_t n = static_cast<std::size_t>(32.0 / eps);
    const PeriodicGrid g = PeriodicGrid::line(n, 2.0 * kPi);
    WavepacketSpec spec;
    spec.center = Vec3(0, 0, kPi);
    spec.width = 0.5;
    const SpinorField u = make_wavepacket(spec, g, eps, pc);
    const WignerData w = wigner_transform(u);
    TestFunction tf;
    tf.terms.push_back({[eps](const Vec3& x) { return std::cos(x[2] / eps); },
                        [](const Vec3& xi) { return std::exp(-xi.squaredNorm()); }, 1.0});
    const auto f = tf.sample(g, eps);
    std::vector<cd> tr(w.w.size());
    for (std::size_t p = 0; p < tr.size(); ++p) tr[p] = w.w[p].trace();
    const double val = std::abs(phase_pairing(tr, f, w.phase_cell())) / u.norm2();
    CHECK(val < prev);
    prev = val;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("spectral pairing agrees with dense phase-space sums") {
  const PhysicalConstants pc;
  for (const PeriodicGrid& g : {PeriodicGrid::line(64, 2.0 * kPi), grid2(8, 16, 2.0 * kPi)}) {
    const double eps = 0.125;
    const SpinorField u = band_limited(g, eps, 100, 11);
    std::vector<TestFunction> fs(2);
    fs[0].name = "one";
    fs[0].terms.push_back({[](const Vec3&) { return 1.0; }, [](const Vec3&) { return 1.0; }, 1.0});
    fs[1].name = "mixed";
    fs[1].terms.push_back({[](const Vec3& x) { return 1.0 + 0.5 * std::cos(x[2] - kPi); },
                           [](const Vec3& xi) { return std::exp(-2.0 * (xi - Vec3(0, 0, 0.5)).squaredNorm()); },
                           0.7});
    fs[1].terms.push_back({[](const Vec3& x) { return std::sin(x[0] + x[2]); },
                           [](const Vec3& xi) { return xi[2]; }, -0.3});
    const SpectralPairing sp(g, eps, pc, fs);
    const auto got = sp.evaluate(u);

    const WignerData w = wigner_transform(u);
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
      const auto f = fs[fi].sample(g, eps);
      Mat4 dense = Mat4::Zero();
      for (std::size_t p = 0; p < w.w.size(); ++p) {
        const Mat4 b = eigenbasis(w.xi(p % g.size()), pc);
        dense += f[p] * (b.adjoint() * w.w[p] * b);
      }
      dense *= w.phase_cell();
      CHECK(max_abs(got[fi] - dense) < 1e-10 * std::max(1.0, max_abs(dense)));
    }
    CHECK(sp.pair_count() < 16 * g.size());
  }
}

TEST_CASE("pseudo-differential identities hold to rounding") {
  std::mt19937_64 gen(12);
  for (const PeriodicGrid& g : {PeriodicGrid::line(64, 2.0 * kPi), grid2(32, 32, 2.0 * kPi)}) {
    const double eps = 0.2;
    const SpinorField u = band_limited(g, eps, 5, 13);
    const SpinorField v = band_limited(g, eps, 5, 14);
    AffineSymbol p;
    p.m0 = random_mat(gen);
    for (auto& m : p.m) m = random_mat(gen);
    LatticeMultiplier vm;
    vm.modes = {{0, 0, 0}, {0, 0, 2}, {1, 0, -1}};
    for (std::size_t r = 0; r < vm.modes.size(); ++r) vm.vhat.push_back(random_mat(gen));
    const PseudoDiffReport rep = verify_pseudodiff_identities(u, v, p, vm);
    double scale = 0.0;
    for (const Mat4& m : wigner_transform(u, v).w) scale = std::max(scale, max_abs(m));
    CHECK(rep.max() < 1e-10);
    CHECK(rep.symbol_left < 1e-12 * scale);
    CHECK(rep.symbol_right < 1e-12 * scale);
    CHECK(rep.multiplier_left < 1e-12 * scale);
    CHECK(rep.multiplier_right < 1e-12 * scale);
  }
}

TEST_CASE("pseudo-differential check refuses aliased input") {
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  AffineSymbol p;
  p.m0 = Mat4::Identity();
  LatticeMultiplier vm;
  vm.modes = {{0, 0, 3}};
  vm.vhat = {Mat4::Identity()};
  const SpinorField u = band_limited(g, 0.2, 14, 15);
  CHECK_THROWS_AS(verify_pseudodiff_identities(u, u, p, vm), std::invalid_argument);
  const SpinorField w = band_limited(g, 0.2, 16, 16);
  vm.modes = {{0, 0, 0}};
  CHECK_THROWS_AS(verify_pseudodiff_identities(w, w, p, vm), std::invalid_argument);
  const SpinorField ok = band_limited(g, 0.2, 12, 17);
  CHECK_NOTHROW(verify_pseudodiff_identities(ok, ok, p, vm));
}

TEST_CASE("odd grids are rejected") {
  const PeriodicGrid g = PeriodicGrid::line(33, 2.0 * kPi);
  SpinorField u(g, 0.1, PhysicalConstants{});
  CHECK_THROWS_AS(wigner_transform(u), std::invalid_argument);
}

TEST_CASE("mode exports round trip") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(16, 2.0 * kPi);
  const ModeDecomposition md = mode_decompose(wigner_transform(band_limited(g, 0.5, 3, 18)), pc);
  const auto dir = std::filesystem::temp_directory_path() / "diracrt_modes_test";
  std::filesystem::create_directories(dir);
  const std::string bin = (dir / "m.bin").string(), csv = (dir / "m.csv").string();
  write_modes_binary(md, bin);
  const ModeDecomposition back = read_modes_binary(bin, g, 0.5);
  CHECK(back.alpha_plus == md.alpha_plus);
  CHECK(back.alpha_minus == md.alpha_minus);
  CHECK(back.c[1][0] == md.c[1][0]);
  CHECK(back.b[0][1] == md.b[0][1]);
  CHECK_THROWS(read_modes_binary(bin, PeriodicGrid::line(8, 1.0), 0.5));

  write_modes_csv(md, csv);
  std::ifstream is(csv);
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("x0,x1,x2,xi0,xi1,xi2,alpha_plus,alpha_minus,a11_re,a11_im", 0) == 0);
  std::size_t lines = 0;
  for (std::string s; std::getline(is, s);) ++lines;
  CHECK(lines == md.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("streamed band densities equal the decomposition traces") {
  const PhysicalConstants pc;
  const PeriodicGrid g = PeriodicGrid::line(64, 2.0 * kPi);
  const SpinorField u = band_limited(g, 0.125, 20, 19);
  const ModeDecomposition md = mode_decompose(wigner_transform(u), pc);
  const auto bands = band_densities(u, pc, 2);
  double err = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < md.size(); ++p) {
    err = std::max({err, std::abs(bands[0][p] - md.alpha_plus[p]), std::abs(bands[1][p] - md.alpha_minus[p])});
    scale = std::max(scale, std::abs(md.alpha_plus[p]));
  }
  CHECK(err < 1e-12 * scale);
}
