#pragma once

// 4x4 Dirac algebra: gamma matrices, the dispersion matrix Q(xi), its
// eigensystem and band projectors, and the scattering weights that enter
// the kinetic collision operator.
//
// Everything here is a pure function of value inputs.

#include <array>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace diracrt {

using cd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Spinor = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;

/// Gaussian integer a + ib. Used so the gamma-matrix relations can be
/// checked without rounding.
struct GaussInt {
  std::int64_t re = 0;
  std::int64_t im = 0;

  friend constexpr GaussInt operator+(GaussInt a, GaussInt b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend constexpr GaussInt operator-(GaussInt a, GaussInt b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend constexpr GaussInt operator*(GaussInt a, GaussInt b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend constexpr bool operator==(GaussInt a, GaussInt b) = default;
  constexpr GaussInt conj() const { return {re, -im}; }
};

/// Exact 4x4 matrix over the Gaussian integers.
class GaussMat4 {
 public:
  static GaussMat4 zero() { return GaussMat4{}; }
  static GaussMat4 identity();

  GaussInt& operator()(int r, int c) { return a_[4 * r + c]; }
  GaussInt operator()(int r, int c) const { return a_[4 * r + c]; }

  GaussMat4 adjoint() const;
  GaussMat4 operator-() const;
  Mat4 to_complex() const;

  friend GaussMat4 operator+(const GaussMat4& x, const GaussMat4& y);
  friend GaussMat4 operator-(const GaussMat4& x, const GaussMat4& y);
  friend GaussMat4 operator*(const GaussMat4& x, const GaussMat4& y);
  friend bool operator==(const GaussMat4& x, const GaussMat4& y) = default;

  /// True when every entry is one of 0, +-1, +-i.
  bool entries_are_units_or_zero() const;

 private:
  std::array<GaussInt, 16> a_{};
};

/// The four Dirac matrices and the Hermitian products gamma^0 gamma^k.
/// g0gk[0] is gamma^0 gamma^0 = I, so the potential A_0 fits the same sum.
struct GammaSet {
  std::array<GaussMat4, 4> gamma;
  std::array<GaussMat4, 4> g0gk;
  std::array<Mat4, 4> alpha;  // floating copies of g0gk
  Mat4 beta;                  // floating copy of gamma^0
};

/// Chiral (Weyl) representation. The closed-form eigenvectors returned by
/// eigensystem() are eigenvectors of Q only in this representation.
GammaSet build_gamma_set();

/// Process-wide immutable instance of build_gamma_set().
const GammaSet& gammas();

struct PhysicalConstants {
  double m0 = 1.0;  // rest mass
  double c = 1.0;   // speed of light
  double e = 1.0;   // unit charge

  double mc() const { return m0 * c; }
  /// Throws std::invalid_argument unless m0 > 0, c > 0 and both finite.
  void validate() const;
};

/// sqrt(m0^2 c^2 + |xi|^2).
double lambda_plus(const Vec3& xi, const PhysicalConstants& consts);

/// Q(xi) = sum_k gamma^0 gamma^k xi_k + m0 c gamma^0.
Mat4 dispersion_matrix(const Vec3& xi, const PhysicalConstants& consts);

struct EigenSystem {
  Vec3 xi = Vec3::Zero();
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  Spinor x1, x2, y1, y2;
  Mat4 pi_plus, pi_minus;

  /// Unitary matrix with columns x1, x2, y1, y2.
  Mat4 basis() const;
};

/// Closed-form orthonormal eigenvectors of Q(xi). Throws std::domain_error
/// when m0 c == 0: the denominator sqrt(2 lambda (lambda - xi_3)) can vanish.
EigenSystem eigensystem(const Vec3& xi, const PhysicalConstants& consts);

/// Only the unitary basis [x1 x2 y1 y2] at xi (no projectors).
Mat4 eigenbasis(const Vec3& xi, const PhysicalConstants& consts);

struct ScatteringWeights {
  std::array<double, 4> omega{};
  std::array<double, 4> omega_tilde{};

  double omega_sum() const;
  double omega_tilde_sum() const;
};

/// Closed-form weights omega_k(xi, q) and omega_tilde_k = 1 - omega_k.
ScatteringWeights scattering_weights(const Vec3& xi, const Vec3& q,
                                     const PhysicalConstants& consts);

/// Same weights computed as 1/2 Tr(Pi_+(xi) a_k Pi_{+-}(q) a_k) from
/// explicit projector products. Independent of the closed forms.
ScatteringWeights projector_trace_weights(const Vec3& xi, const Vec3& q,
                                          const PhysicalConstants& consts);

struct CancellationResult {
  double value = 0.0;     // c_k
  double residual = 0.0;  // max |M - c_k I| entrywise
};

/// M = a_k Q(xi) a_k Q(q) + Q(q) a_k Q(xi) a_k is a scalar matrix c_k I.
/// Returns c_k = Tr(M)/4 together with the off-scalar residual.
CancellationResult cancellation_constant(int k, const Vec3& xi, const Vec3& q,
                                         const PhysicalConstants& consts);

/// Closed form of c_k: 2(xi.q + m^2c^2) for k = 0 and
/// 2(xi_k q_k - sum_{j != k} xi_j q_j - m^2 c^2) for k = 1..3.
double cancellation_constant_closed_form(int k, const Vec3& xi, const Vec3& q,
                                         const PhysicalConstants& consts);

/// max_ij |a_ij|
double max_abs(const Mat4& m);

}  // namespace diracrt
