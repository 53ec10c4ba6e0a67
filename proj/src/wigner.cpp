#include "diracrt/wigner.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "diracrt/fft.hpp"
#include "diracrt/parallel.hpp"

namespace diracrt {

namespace {

constexpr double kPi = std::numbers::pi;

std::array<std::size_t, 3> dims_of(const PeriodicGrid& g) {
  return {g.points[0], g.points[1], g.points[2]};
}

// Flat index of (n + sign * m) with per-axis wraparound.
std::size_t combine(const PeriodicGrid& g, const std::array<std::size_t, 3>& n,
                    const std::array<std::size_t, 3>& m, int sign) {
  std::array<std::size_t, 3> r;
  for (int a = 0; a < 3; ++a) {
    const long v = static_cast<long>(n[a]) + sign * static_cast<long>(m[a]);
    r[a] = wrap_index(v, g.points[a]);
  }
  return g.flat(r[0], r[1], r[2]);
}

double wigner_scale(const PeriodicGrid& g, double eps) {
  double c = 1.0;
  for (int a = 0; a < 3; ++a)
    if (!g.degenerate(a)) c *= g.spacing(a) / (kPi * eps);
  return c;
}

void check_pair(const SpinorField& u, const SpinorField& v) {
  if (!(u.grid == v.grid) || u.eps != v.eps)
    throw std::invalid_argument("Wigner transform of fields on different grids");
  require_even_grid(u.grid);
}

// Spectral derivative along `axis` in x of every (j, entry) column.
std::vector<Mat4> x_derivative(const WignerData& w, int axis) {
  const PeriodicGrid& g = w.grid;
  const std::size_t n = g.size();
  std::vector<Mat4> out(w.w.size(), Mat4::Zero());
  if (g.degenerate(axis)) return out;
  FftPlan fwd(dims_of(g), 16, FftPlan::Direction::forward);
  FftPlan bwd(dims_of(g), 16, FftPlan::Direction::backward);
  std::vector<cd> buf(16 * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t x = 0; x < n; ++x)
      for (int e = 0; e < 16; ++e) buf[e * n + x] = w.at(x, j)(e / 4, e % 4);
    fwd.execute(buf.data());
    for (std::size_t k = 0; k < n; ++k) {
      const cd ik(0.0, g.wavenumber(k)[axis] / static_cast<double>(n));
      for (int e = 0; e < 16; ++e) buf[e * n + k] *= ik;
    }
    bwd.execute(buf.data());
    for (std::size_t x = 0; x < n; ++x)
      for (int e = 0; e < 16; ++e) out[x * n + j](e / 4, e % 4) = buf[e * n + x];
  }
  return out;
}

double max_entry_diff(const std::vector<Mat4>& a, const std::vector<Mat4>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs(a[i] - b[i]));
  return m;
}

}  // namespace

Vec3 wigner_momentum(const PeriodicGrid& g, double eps, std::size_t j) {
  const auto s = g.signed_index(j);
  Vec3 xi = Vec3::Zero();
  for (int a = 0; a < 3; ++a)
    if (!g.degenerate(a)) xi[a] = kPi * eps * static_cast<double>(s[a]) / g.lengths[a];
  return xi;
}

double wigner_xi_cell(const PeriodicGrid& g, double eps) {
  double c = 1.0;
  for (int a = 0; a < 3; ++a)
    if (!g.degenerate(a)) c *= kPi * eps / g.lengths[a];
  return c;
}

void require_even_grid(const PeriodicGrid& g) {
  for (int a = 0; a < 3; ++a)
    if (!g.degenerate(a) && g.points[a] % 2 != 0)
      throw std::invalid_argument("Wigner transform needs even grid sizes on non-degenerate axes");
}

double WignerData::norm() const {
  double s = 0.0;
  for (const Mat4& m : w) s += m.squaredNorm();
  return std::sqrt(s * phase_cell() * std::pow(0.5, grid.effective_dims()));
}

WignerRowEvaluator::WignerRowEvaluator(const SpinorField& u, const SpinorField& v)
    : u_(u), v_(v), plan_(dims_of(u.grid), 16, FftPlan::Direction::backward),
      scale_(wigner_scale(u.grid, u.eps)) {
  check_pair(u, v);
}

std::vector<Mat4> WignerRowEvaluator::row(std::size_t n) const {
  const PeriodicGrid& g = u_.grid;
  const std::size_t np = g.size();
  std::vector<cd> buf(16 * np);
  const auto ni = g.unflat(n);
  for (std::size_t m = 0; m < np; ++m) {
    const auto mi = g.unflat(m);
    const std::size_t lo = combine(g, ni, mi, -1), hi = combine(g, ni, mi, +1);
    for (int r = 0; r < 4; ++r) {
      const cd ur = u_.at(r, lo);
      for (int s = 0; s < 4; ++s) buf[(4 * r + s) * np + m] = ur * std::conj(v_.at(s, hi));
    }
  }
  plan_.execute(buf.data());
  std::vector<Mat4> out(np);
  for (std::size_t j = 0; j < np; ++j)
    for (int e = 0; e < 16; ++e) out[j](e / 4, e % 4) = scale_ * buf[e * np + j];
  return out;
}

WignerData wigner_transform(const SpinorField& u, const SpinorField& v, unsigned threads) {
  check_pair(u, v);
  WignerData w;
  w.grid = u.grid;
  w.eps = u.eps;
  const std::size_t n = u.grid.size();
  w.w.resize(n * n);
  WignerRowEvaluator ev(u, v);
  parallel_for(n, threads, [&](std::size_t x) {
    const auto row = ev.row(x);
    std::copy(row.begin(), row.end(), w.w.begin() + static_cast<std::ptrdiff_t>(x * n));
  });
  return w;
}

WignerData wigner_transform(const SpinorField& psi, unsigned threads) {
  return wigner_transform(psi, psi, threads);
}

double wigner_norm_fourier(const SpinorField& psi) {
  const auto hat = to_fourier(psi);
  double s = 0.0;
  for (const cd& z : hat) s += std::norm(z);
  const double n2 = s * psi.grid.cell_volume() / static_cast<double>(psi.grid.size());
  return std::pow(2.0 * kPi * psi.eps, -0.5 * psi.grid.effective_dims()) * n2;
}

ModeDecomposition mode_decompose(const WignerData& w, const PhysicalConstants& consts) {
  if (!(consts.mc() > 0.0)) throw std::domain_error("mode decomposition requires m0*c > 0");
  const std::size_t n = w.grid.size();
  ModeDecomposition md;
  md.grid = w.grid;
  md.eps = w.eps;
  for (auto* blk : {&md.a, &md.b, &md.c, &md.d})
    for (auto& row : *blk)
      for (auto& v : row) v.assign(n * n, cd(0.0, 0.0));
  md.alpha_plus.assign(n * n, 0.0);
  md.alpha_minus.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const Mat4 b = eigenbasis(w.xi(j), consts);
    const Mat4 badj = b.adjoint();
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t p = x * n + j;
      const Mat4 m = badj * w.w[p] * b;
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) {
          md.a[r][s][p] = m(r, s);
          md.b[r][s][p] = m(r + 2, s + 2);
          md.c[r][s][p] = m(r, s + 2);
          md.d[r][s][p] = m(r + 2, s);
        }
      md.alpha_plus[p] = (m(0, 0) + m(1, 1)).real();
      md.alpha_minus[p] = (m(2, 2) + m(3, 3)).real();
    }
  }
  return md;
}

std::array<std::vector<double>, 2> band_densities(const SpinorField& psi,
                                                  const PhysicalConstants& consts,
                                                  unsigned threads) {
  if (!(consts.mc() > 0.0)) throw std::domain_error("band densities require m0*c > 0");
  require_even_grid(psi.grid);
  const std::size_t n = psi.grid.size();
  std::vector<Mat4> pp(n), pm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const EigenSystem es = eigensystem(wigner_momentum(psi.grid, psi.eps, j), consts);
    pp[j] = es.pi_plus;
    pm[j] = es.pi_minus;
  }
  std::array<std::vector<double>, 2> out{std::vector<double>(n * n), std::vector<double>(n * n)};
  WignerRowEvaluator ev(psi, psi);
  parallel_for(n, threads, [&](std::size_t x) {
    const auto row = ev.row(x);
    for (std::size_t j = 0; j < n; ++j) {
      out[0][x * n + j] = (pp[j] * row[j]).trace().real();
      out[1][x * n + j] = (pm[j] * row[j]).trace().real();
    }
  });
  return out;
}

Mat4 reconstruct(const ModeDecomposition& md, std::size_t p, const PhysicalConstants& consts) {
  const std::size_t n = md.grid.size();
  const EigenSystem es = eigensystem(wigner_momentum(md.grid, md.eps, p % n), consts);
  const std::array<Spinor, 2> x{es.x1, es.x2}, y{es.y1, es.y2};
  Mat4 w = Mat4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      w += md.a[i][j][p] * x[i] * x[j].adjoint();
      w += md.b[i][j][p] * y[i] * y[j].adjoint();
      w += md.c[i][j][p] * x[i] * y[j].adjoint();
      w += md.d[i][j][p] * y[i] * x[j].adjoint();
    }
  return w;
}

cd phase_pairing(const std::vector<cd>& field, const std::vector<double>& f, double cell) {
  if (field.size() != f.size()) throw std::invalid_argument("pairing grid mismatch");
  cd s(0.0, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) s += field[i] * f[i];
  return s * cell;
}

cd time_integral(const std::vector<cd>& values, const std::vector<double>& times) {
  if (values.size() != times.size()) throw std::invalid_argument("time grid mismatch");
  cd s(0.0, 0.0);
  for (std::size_t i = 1; i < values.size(); ++i)
    s += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
  return s;
}

cd weak_pairing(const std::vector<std::vector<cd>>& frames, const std::vector<double>& f,
                double cell, const std::vector<double>& times) {
  if (frames.size() != times.size()) throw std::invalid_argument("time grid mismatch");
  std::vector<cd> v;
  v.reserve(frames.size());
  for (const auto& fr : frames) v.push_back(phase_pairing(fr, f, cell));
  return time_integral(v, times);
}

double TestFunction::operator()(const Vec3& x, const Vec3& xi) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.weight * t.g(x) * t.h(xi);
  return s;
}

std::vector<double> TestFunction::sample(const PeriodicGrid& g, double eps) const {
  const std::size_t n = g.size();
  std::vector<double> out(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t j = 0; j < n; ++j)
      out[x * n + j] = (*this)(g.position(x), wigner_momentum(g, eps, j));
  return out;
}

SpectralPairing::SpectralPairing(const PeriodicGrid& g, double eps,
                                 const PhysicalConstants& consts, std::vector<TestFunction> fs,
                                 double cutoff)
    : grid_(g), eps_(eps), fs_(std::move(fs)) {
  require_even_grid(g);
  const std::size_t n = g.size();
  prefactor_ = g.cell_volume() * wigner_xi_cell(g, eps) * wigner_scale(g, eps) /
               static_cast<double>(n);
  basis_adj_.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    basis_adj_[j] = eigenbasis(wigner_momentum(g, eps, j), consts).adjoint();
  FftPlan fwd(dims_of(g), 1, FftPlan::Direction::forward);
  for (std::size_t fi = 0; fi < fs_.size(); ++fi)
    for (const auto& term : fs_[fi].terms) {
      Term t;
      t.func = fi;
      t.weight = term.weight;
      t.h.resize(n);
      for (std::size_t j = 0; j < n; ++j) t.h[j] = term.h(wigner_momentum(g, eps, j));
      std::vector<cd> gh(n);
      for (std::size_t x = 0; x < n; ++x) gh[x] = term.g(g.position(x));
      fwd.execute(gh.data());
      double gmax = 0.0;
      for (const cd& z : gh) gmax = std::max(gmax, std::abs(z));
      for (std::size_t k = 0; k < n; ++k)
        if (std::abs(gh[k]) > cutoff * gmax) {
          t.k.push_back(g.signed_index(k));
          t.ghat.push_back(gh[k]);
        }
      terms_.push_back(std::move(t));
    }
}

std::size_t SpectralPairing::pair_count() const {
  std::size_t c = 0;
  for (const auto& t : terms_) c += t.k.size() * grid_.size();
  return c;
}

std::vector<Mat4> SpectralPairing::evaluate(const SpinorField& psi) const {
  if (!(psi.grid == grid_) || psi.eps != eps_)
    throw std::invalid_argument("spectral pairing grid mismatch");
  const std::vector<cd> hat = to_fourier(psi);
  const std::size_t n = grid_.size();
  std::vector<Mat4> out(fs_.size(), Mat4::Zero());
  for (const Term& t : terms_) {
    Mat4 acc = Mat4::Zero();
    for (std::size_t a = 0; a < n; ++a) {
      const Spinor ua(hat[a], hat[n + a], hat[2 * n + a], hat[3 * n + a]);
      if (ua.squaredNorm() == 0.0) continue;
      const auto sa = grid_.signed_index(a);
      for (std::size_t r = 0; r < t.k.size(); ++r) {
        const std::array<long, 3> sb{sa[0] + t.k[r][0], sa[1] + t.k[r][1], sa[2] + t.k[r][2]};
        const std::size_t b = grid_.slot(sb);
        const std::size_t j = grid_.slot({sa[0] + sb[0], sa[1] + sb[1], sa[2] + sb[2]});
        if (t.h[j] == 0.0) continue;
        const Spinor ub(hat[b], hat[n + b], hat[2 * n + b], hat[3 * n + b]);
        const Spinor pa = basis_adj_[j] * ua;
        const Spinor pb = basis_adj_[j] * ub;
        acc.noalias() += (t.h[j] * t.ghat[r]) * (pa * pb.adjoint());
      }
    }
    out[t.func] += (t.weight * prefactor_) * acc;
  }
  return out;
}

double cross_magnitude(const Mat4& m) {
  double s = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) s += std::abs(m(r, c + 2)) + std::abs(m(r + 2, c));
  return s;
}

SpinorField apply_symbol(const AffineSymbol& p, const SpinorField& u) {
  std::vector<cd> hat = to_fourier(u);
  const std::size_t n = u.grid.size();
  for (std::size_t f = 0; f < n; ++f) {
    const Vec3 k = u.grid.wavenumber(f);
    Mat4 sym = p.m0;
    for (int a = 0; a < 3; ++a) sym += cd(0.0, u.eps * k[a]) * p.m[a];
    Spinor v(hat[f], hat[n + f], hat[2 * n + f], hat[3 * n + f]);
    v = sym * v;
    for (int c = 0; c < 4; ++c) hat[c * n + f] = v[c];
  }
  SpinorField out = u;
  from_fourier(std::move(hat), out);
  return out;
}

SpinorField apply_multiplier(const LatticeMultiplier& vm, const SpinorField& u) {
  const PeriodicGrid& g = u.grid;
  const double scale = std::pow(2.0 * kPi, -g.effective_dims());
  SpinorField out = u;
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflat(f);
    Mat4 v = Mat4::Zero();
    for (std::size_t r = 0; r < vm.modes.size(); ++r) {
      double ph = 0.0;
      for (int a = 0; a < 3; ++a)
        if (!g.degenerate(a))
          ph += 2.0 * kPi * static_cast<double>(vm.modes[r][a] * static_cast<long>(idx[a])) /
                static_cast<double>(g.points[a]);
      v += cd(std::cos(ph), std::sin(ph)) * vm.vhat[r];
    }
    out.set_spinor(f, scale * v * u.spinor(f));
  }
  return out;
}

std::array<long, 3> spectral_extent(const SpinorField& u, double tol) {
  const auto hat = to_fourier(u);
  const std::size_t n = u.grid.size();
  double mx = 0.0;
  for (const cd& z : hat) mx = std::max(mx, std::abs(z));
  std::array<long, 3> ext{0, 0, 0};
  for (std::size_t f = 0; f < n; ++f) {
    double m = 0.0;
    for (int c = 0; c < 4; ++c) m = std::max(m, std::abs(hat[c * n + f]));
    if (m <= tol * mx) continue;
    const auto s = u.grid.signed_index(f);
    for (int a = 0; a < 3; ++a) ext[a] = std::max(ext[a], std::abs(s[a]));
  }
  return ext;
}

double PseudoDiffReport::max() const {
  return std::max({symbol_left, symbol_right, multiplier_left, multiplier_right});
}

PseudoDiffReport verify_pseudodiff_identities(const SpinorField& u, const SpinorField& v,
                                              const AffineSymbol& p,
                                              const LatticeMultiplier& vm) {
  check_pair(u, v);
  if (vm.modes.size() != vm.vhat.size())
    throw std::invalid_argument("multiplier modes and amplitudes differ in length");
  const PeriodicGrid& g = u.grid;
  const auto eu = spectral_extent(u), ev = spectral_extent(v);
  std::array<long, 3> shift{0, 0, 0};
  for (const auto& m : vm.modes)
    for (int a = 0; a < 3; ++a) shift[a] = std::max(shift[a], std::abs(m[a]));
  for (int a = 0; a < 3; ++a) {
    if (g.degenerate(a)) continue;
    const long quarter = static_cast<long>(g.points[a] / 4);
    if (std::max(eu[a], ev[a]) + shift[a] >= quarter)
      throw std::invalid_argument("aliasing: spectral support reaches a quarter of the grid");
  }

  const std::size_t n = g.size();
  const WignerData w = wigner_transform(u, v);
  std::array<std::vector<Mat4>, 3> dw;
  for (int a = 0; a < 3; ++a) dw[a] = x_derivative(w, a);

  PseudoDiffReport rep;
  {
    const WignerData lhs = wigner_transform(apply_symbol(p, u), v);
    const WignerData rhs_r = wigner_transform(u, apply_symbol(p, v));
    std::vector<Mat4> left(n * n), right(n * n);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t q = x * n + j;
        const Vec3 xi = w.xi(j);
        Mat4 l = p.m0 * w.w[q];
        Mat4 r = w.w[q] * p.m0.adjoint();
        for (int a = 0; a < 3; ++a) {
          const Mat4 up = cd(0.0, xi[a]) * w.w[q] + (0.5 * u.eps) * dw[a][q];
          const Mat4 dn = cd(0.0, -xi[a]) * w.w[q] + (0.5 * u.eps) * dw[a][q];
          l += p.m[a] * up;
          r += dn * p.m[a].adjoint();
        }
        left[q] = l;
        right[q] = r;
      }
    rep.symbol_left = max_entry_diff(lhs.w, left);
    rep.symbol_right = max_entry_diff(rhs_r.w, right);
  }
  {
    const WignerData lhs = wigner_transform(apply_multiplier(vm, u), v);
    const WignerData rhs_r = wigner_transform(u, apply_multiplier(vm, v));
    const double scale = std::pow(2.0 * kPi, -g.effective_dims());
    std::vector<Mat4> left(n * n, Mat4::Zero()), right(n * n, Mat4::Zero());
    for (std::size_t x = 0; x < n; ++x) {
      const auto xi_idx = g.unflat(x);
      for (std::size_t r = 0; r < vm.modes.size(); ++r) {
        double ph = 0.0;
        for (int a = 0; a < 3; ++a)
          if (!g.degenerate(a))
            ph += 2.0 * kPi * static_cast<double>(vm.modes[r][a] * static_cast<long>(xi_idx[a])) /
                  static_cast<double>(g.points[a]);
        const cd e(std::cos(ph), std::sin(ph));
        for (std::size_t j = 0; j < n; ++j) {
          const auto sj = g.signed_index(j);
          const std::size_t js = g.slot(
              {sj[0] - vm.modes[r][0], sj[1] - vm.modes[r][1], sj[2] - vm.modes[r][2]});
          left[x * n + j] += scale * e * vm.vhat[r] * w.w[x * n + js];
          right[x * n + j] += scale * std::conj(e) * w.w[x * n + js] * vm.vhat[r].adjoint();
        }
      }
    }
    rep.multiplier_left = max_entry_diff(lhs.w, left);
    rep.multiplier_right = max_entry_diff(rhs_r.w, right);
  }
  return rep;
}

namespace {

std::vector<std::pair<std::string, std::function<double(const ModeDecomposition&, std::size_t)>>>
mode_columns() {
  std::vector<std::pair<std::string, std::function<double(const ModeDecomposition&, std::size_t)>>>
      cols;
  cols.emplace_back("alpha_plus", [](const ModeDecomposition& m, std::size_t p) {
    return m.alpha_plus[p];
  });
  cols.emplace_back("alpha_minus", [](const ModeDecomposition& m, std::size_t p) {
    return m.alpha_minus[p];
  });
  const char* names = "abcd";
  for (int blk = 0; blk < 4; ++blk)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int part = 0; part < 2; ++part) {
          std::string nm = std::string(1, names[blk]) + std::to_string(i + 1) +
                           std::to_string(j + 1) + (part == 0 ? "_re" : "_im");
          cols.emplace_back(nm, [blk, i, j, part](const ModeDecomposition& m, std::size_t p) {
            const auto& arr = blk == 0 ? m.a : blk == 1 ? m.b : blk == 2 ? m.c : m.d;
            const cd z = arr[i][j][p];
            return part == 0 ? z.real() : z.imag();
          });
        }
  return cols;
}

}  // namespace

void write_modes_csv(const ModeDecomposition& md, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  const auto cols = mode_columns();
  os << "x0,x1,x2,xi0,xi1,xi2";
  for (const auto& c : cols) os << ',' << c.first;
  os << '\n' << std::setprecision(17);
  const std::size_t n = md.grid.size();
  for (std::size_t p = 0; p < md.size(); ++p) {
    const Vec3 x = md.grid.position(p / n);
    const Vec3 xi = wigner_momentum(md.grid, md.eps, p % n);
    os << x[0] << ',' << x[1] << ',' << x[2] << ',' << xi[0] << ',' << xi[1] << ',' << xi[2];
    for (const auto& c : cols) os << ',' << c.second(md, p);
    os << '\n';
  }
}

void write_modes_binary(const ModeDecomposition& md, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const auto cols = mode_columns();
  const std::uint64_t points = md.size(), fields = cols.size();
  os.write("DRTMODE1", 8);
  os.write(reinterpret_cast<const char*>(&points), sizeof points);
  os.write(reinterpret_cast<const char*>(&fields), sizeof fields);
  for (const auto& c : cols)
    for (std::size_t p = 0; p < md.size(); ++p) {
      const double v = c.second(md, p);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

ModeDecomposition read_modes_binary(const std::string& path, const PeriodicGrid& g, double eps) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  std::uint64_t points = 0, fields = 0;
  is.read(magic, 8);
  is.read(reinterpret_cast<char*>(&points), sizeof points);
  is.read(reinterpret_cast<char*>(&fields), sizeof fields);
  if (!is || std::memcmp(magic, "DRTMODE1", 8) != 0 || fields != 34 ||
      points != g.size() * g.size())
    throw std::runtime_error("malformed mode file " + path);
  std::vector<double> data(points * fields);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated mode file " + path);
  ModeDecomposition md;
  md.grid = g;
  md.eps = eps;
  md.alpha_plus.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(points));
  md.alpha_minus.assign(data.begin() + static_cast<std::ptrdiff_t>(points),
                        data.begin() + static_cast<std::ptrdiff_t>(2 * points));
  std::size_t col = 2;
  for (auto* blk : {&md.a, &md.b, &md.c, &md.d})
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto& v = (*blk)[i][j];
        v.resize(points);
        for (std::size_t p = 0; p < points; ++p)
          v[p] = cd(data[col * points + p], data[(col + 1) * points + p]);
        col += 2;
      }
  return md;
}

}  // namespace diracrt
