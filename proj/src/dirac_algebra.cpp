#include "diracrt/dirac_algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace diracrt {

GaussMat4 GaussMat4::identity() {
  GaussMat4 m;
  for (int i = 0; i < 4; ++i) m(i, i) = {1, 0};
  return m;
}

GaussMat4 GaussMat4::adjoint() const {
  GaussMat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = (*this)(c, r).conj();
  return m;
}

GaussMat4 GaussMat4::operator-() const {
  GaussMat4 m;
  for (int i = 0; i < 16; ++i) m.a_[i] = GaussInt{} - a_[i];
  return m;
}

Mat4 GaussMat4::to_complex() const {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      m(r, c) = cd(static_cast<double>((*this)(r, c).re),
                   static_cast<double>((*this)(r, c).im));
  return m;
}

GaussMat4 operator+(const GaussMat4& x, const GaussMat4& y) {
  GaussMat4 m;
  for (int i = 0; i < 16; ++i) m.a_[i] = x.a_[i] + y.a_[i];
  return m;
}

GaussMat4 operator-(const GaussMat4& x, const GaussMat4& y) {
  GaussMat4 m;
  for (int i = 0; i < 16; ++i) m.a_[i] = x.a_[i] - y.a_[i];
  return m;
}

GaussMat4 operator*(const GaussMat4& x, const GaussMat4& y) {
  GaussMat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      GaussInt s;
      for (int k = 0; k < 4; ++k) s = s + x(r, k) * y(k, c);
      m(r, c) = s;
    }
  return m;
}

bool GaussMat4::entries_are_units_or_zero() const {
  for (const auto& z : a_) {
    const bool ok = (z.re == 0 && z.im == 0) ||
                    (std::abs(z.re) == 1 && z.im == 0) ||
                    (z.re == 0 && std::abs(z.im) == 1);
    if (!ok) return false;
  }
  return true;
}

namespace {

// Block matrix [[a, b], [c, d]] from 2x2 Gaussian-integer blocks.
using Block = std::array<std::array<GaussInt, 2>, 2>;

GaussMat4 from_blocks(const Block& a, const Block& b, const Block& c,
                      const Block& d) {
  GaussMat4 m;
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) {
      m(r, s) = a[r][s];
      m(r, s + 2) = b[r][s];
      m(r + 2, s) = c[r][s];
      m(r + 2, s + 2) = d[r][s];
    }
  return m;
}

Block negate(const Block& b) {
  Block n{};
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) n[r][s] = GaussInt{} - b[r][s];
  return n;
}

}  // namespace

GammaSet build_gamma_set() {
  constexpr GaussInt o{0, 0}, one{1, 0}, mone{-1, 0}, i{0, 1}, mi{0, -1};
  const Block zero{{{o, o}, {o, o}}};
  const Block id{{{one, o}, {o, one}}};
  const std::array<Block, 3> sigma{
      Block{{{o, one}, {one, o}}},
      Block{{{o, mi}, {i, o}}},
      Block{{{one, o}, {o, mone}}},
  };

  GammaSet g;
  g.gamma[0] = from_blocks(zero, id, id, zero);
  for (int k = 1; k <= 3; ++k)
    g.gamma[k] = from_blocks(zero, sigma[k - 1], negate(sigma[k - 1]), zero);
  for (int k = 0; k < 4; ++k) {
    g.g0gk[k] = g.gamma[0] * g.gamma[k];
    g.alpha[k] = g.g0gk[k].to_complex();
  }
  g.beta = g.gamma[0].to_complex();
  return g;
}

const GammaSet& gammas() {
  static const GammaSet set = build_gamma_set();
  return set;
}

void PhysicalConstants::validate() const {
  if (!(std::isfinite(m0) && std::isfinite(c) && std::isfinite(e)))
    throw std::invalid_argument("physical constants must be finite");
  if (!(m0 > 0.0) || !(c > 0.0))
    throw std::invalid_argument("physical constants require m0 > 0 and c > 0");
}

double lambda_plus(const Vec3& xi, const PhysicalConstants& consts) {
  const double mc = consts.mc();
  return std::sqrt(mc * mc + xi.squaredNorm());
}

Mat4 dispersion_matrix(const Vec3& xi, const PhysicalConstants& consts) {
  const auto& g = gammas();
  Mat4 q = consts.mc() * g.beta;
  for (int k = 1; k <= 3; ++k) q += xi[k - 1] * g.alpha[k];
  return q;
}

Mat4 EigenSystem::basis() const {
  Mat4 b;
  b.col(0) = x1;
  b.col(1) = x2;
  b.col(2) = y1;
  b.col(3) = y2;
  return b;
}

namespace {

struct BasisParts {
  double lambda;
  Spinor x1, x2, y1, y2;
};

BasisParts closed_form_basis(const Vec3& xi, const PhysicalConstants& consts) {
  const double mc = consts.mc();
  if (!(mc > 0.0))
    throw std::domain_error("eigensystem requires m0*c > 0");
  const double lam = lambda_plus(xi, consts);
  // lambda - xi_3 without cancellation when xi_3 > 0.
  const double s = xi[2] <= 0.0
                       ? lam - xi[2]
                       : (mc * mc + xi[0] * xi[0] + xi[1] * xi[1]) / (lam + xi[2]);
  const double denom = std::sqrt(2.0 * lam * s);
  const double top = std::sqrt(s / (2.0 * lam));
  const cd minus_xy(xi[0], -xi[1]);  // xi_1 - i xi_2
  const cd plus_xy(xi[0], xi[1]);    // xi_1 + i xi_2
  const double m = mc / denom;

  BasisParts p;
  p.lambda = lam;
  p.x1 << 0.0, m, minus_xy / denom, top;
  p.x2 << top, -plus_xy / denom, m, 0.0;
  p.y1 << m, 0.0, -top, plus_xy / denom;
  p.y2 << minus_xy / denom, top, 0.0, -m;
  return p;
}

}  // namespace

EigenSystem eigensystem(const Vec3& xi, const PhysicalConstants& consts) {
  const BasisParts p = closed_form_basis(xi, consts);
  EigenSystem es;
  es.xi = xi;
  es.lambda_plus = p.lambda;
  es.lambda_minus = -p.lambda;
  es.x1 = p.x1;
  es.x2 = p.x2;
  es.y1 = p.y1;
  es.y2 = p.y2;
  const Mat4 q = dispersion_matrix(xi, consts) / p.lambda;
  es.pi_plus = 0.5 * (Mat4::Identity() + q);
  es.pi_minus = 0.5 * (Mat4::Identity() - q);
  return es;
}

Mat4 eigenbasis(const Vec3& xi, const PhysicalConstants& consts) {
  const BasisParts p = closed_form_basis(xi, consts);
  Mat4 b;
  b.col(0) = p.x1;
  b.col(1) = p.x2;
  b.col(2) = p.y1;
  b.col(3) = p.y2;
  return b;
}

double ScatteringWeights::omega_sum() const {
  return omega[0] + omega[1] + omega[2] + omega[3];
}

double ScatteringWeights::omega_tilde_sum() const {
  return omega_tilde[0] + omega_tilde[1] + omega_tilde[2] + omega_tilde[3];
}

ScatteringWeights scattering_weights(const Vec3& xi, const Vec3& q,
                                     const PhysicalConstants& consts) {
  const double mc = consts.mc();
  if (!(mc > 0.0))
    throw std::domain_error("scattering weights require m0*c > 0");
  const double ll = lambda_plus(q, consts) * lambda_plus(xi, consts);
  const double m2 = mc * mc;
  const double p1 = xi[0] * q[0], p2 = xi[1] * q[1], p3 = xi[2] * q[2];
  const std::array<double, 4> numer{
      ll + p1 + p2 + p3 + m2,
      ll + p1 - p2 - p3 - m2,
      ll - p1 + p2 - p3 - m2,
      ll - p1 - p2 + p3 - m2,
  };
  ScatteringWeights w;
  for (int k = 0; k < 4; ++k) {
    w.omega[k] = numer[k] / (2.0 * ll);
    w.omega_tilde[k] = 1.0 - w.omega[k];
  }
  return w;
}

ScatteringWeights projector_trace_weights(const Vec3& xi, const Vec3& q,
                                          const PhysicalConstants& consts) {
  if (!(consts.mc() > 0.0))
    throw std::domain_error("scattering weights require m0*c > 0");
  const auto& g = gammas();
  const Mat4 qx = dispersion_matrix(xi, consts) / lambda_plus(xi, consts);
  const Mat4 qq = dispersion_matrix(q, consts) / lambda_plus(q, consts);
  const Mat4 pp_xi = 0.5 * (Mat4::Identity() + qx);
  const Mat4 pp_q = 0.5 * (Mat4::Identity() + qq);
  const Mat4 pm_q = 0.5 * (Mat4::Identity() - qq);
  ScatteringWeights w;
  for (int k = 0; k < 4; ++k) {
    const Mat4& a = g.alpha[k];
    w.omega[k] = 0.5 * (pp_xi * a * pp_q * a).trace().real();
    w.omega_tilde[k] = 0.5 * (pp_xi * a * pm_q * a).trace().real();
  }
  return w;
}

CancellationResult cancellation_constant(int k, const Vec3& xi, const Vec3& q,
                                         const PhysicalConstants& consts) {
  if (k < 0 || k > 3) throw std::out_of_range("gamma index must be in 0..3");
  const Mat4& a = gammas().alpha[k];
  const Mat4 qx = dispersion_matrix(xi, consts);
  const Mat4 qq = dispersion_matrix(q, consts);
  const Mat4 m = a * qx * a * qq + qq * a * qx * a;
  CancellationResult r;
  r.value = m.trace().real() / 4.0;
  r.residual = max_abs(m - r.value * Mat4::Identity());
  return r;
}

double cancellation_constant_closed_form(int k, const Vec3& xi, const Vec3& q,
                                         const PhysicalConstants& consts) {
  if (k < 0 || k > 3) throw std::out_of_range("gamma index must be in 0..3");
  const double m2 = consts.mc() * consts.mc();
  if (k == 0) return 2.0 * (xi.dot(q) + m2);
  double s = 0.0;
  for (int j = 1; j <= 3; ++j) {
    const double t = xi[j - 1] * q[j - 1];
    s += (j == k) ? t : -t;
  }
  return 2.0 * (s - m2);
}

double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace diracrt
