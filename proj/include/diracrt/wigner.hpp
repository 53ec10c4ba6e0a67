#pragma once

// Discrete matrix Wigner transform on a periodic grid.
//
//   W(x_n, xi_j) = C sum_m e^{2 pi i j.m / N} u_{n-m} v*_{n+m},  C = prod h / (pi eps)
//
// with xi_j = pi eps j / L per non-degenerate axis. Sums over xi use the
// cell prod(pi eps / L), so sum_j W dxi = u v* exactly. The lattice carries
// a ghost copy W(x + L/2, xi_j) = (-1)^j W(x, xi_j); quadratic functionals
// are therefore taken over one fundamental cell (factor 2^-d).

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "diracrt/dirac_algebra.hpp"
#include "diracrt/grid.hpp"
#include "diracrt/wave_solver.hpp"

namespace diracrt {

/// Momentum of Wigner slot j: pi eps s_j / L on non-degenerate axes.
Vec3 wigner_momentum(const PeriodicGrid& g, double eps, std::size_t j);
/// prod over non-degenerate axes of pi eps / L.
double wigner_xi_cell(const PeriodicGrid& g, double eps);
/// Throws std::invalid_argument for an odd non-degenerate axis.
void require_even_grid(const PeriodicGrid& g);

struct WignerData {
  PeriodicGrid grid;
  double eps = 1.0;
  std::vector<Mat4> w;  // w[n * N + j]

  std::size_t points() const { return grid.size(); }
  const Mat4& at(std::size_t n, std::size_t j) const { return w[n * grid.size() + j]; }
  Mat4& at(std::size_t n, std::size_t j) { return w[n * grid.size() + j]; }
  Vec3 xi(std::size_t j) const { return wigner_momentum(grid, eps, j); }
  double xi_cell() const { return wigner_xi_cell(grid, eps); }
  double phase_cell() const { return grid.cell_volume() * xi_cell(); }

  /// (2^-d sum Tr(W* W) dx dxi)^{1/2}.
  double norm() const;
};

/// Evaluates single x-rows of W[u, v]; reuses one FFT plan.
class WignerRowEvaluator {
 public:
  WignerRowEvaluator(const SpinorField& u, const SpinorField& v);
  /// W(x_n, xi_j) for all j.
  std::vector<Mat4> row(std::size_t n) const;

 private:
  const SpinorField& u_;
  const SpinorField& v_;
  FftPlan plan_;
  double scale_;
};

WignerData wigner_transform(const SpinorField& u, const SpinorField& v, unsigned threads = 1);
WignerData wigner_transform(const SpinorField& psi, unsigned threads = 1);

/// (2 pi eps)^{-d/2} |psi|^2 with |psi|^2 taken from the Fourier coefficients.
double wigner_norm_fourier(const SpinorField& psi);

struct ModeDecomposition {
  PeriodicGrid grid;
  double eps = 1.0;
  std::array<std::array<std::vector<cd>, 2>, 2> a, b, c, d;
  std::vector<double> alpha_plus, alpha_minus;

  std::size_t size() const { return alpha_plus.size(); }
};

/// a_ij = x_i* W x_j, b_ij = y_i* W y_j, c_ij = x_i* W y_j, d_ij = y_i* W x_j
/// with the eigenvectors at each lattice xi; alpha_+- = Tr(Pi_+- W).
ModeDecomposition mode_decompose(const WignerData& w, const PhysicalConstants& consts);

/// Sum of a_ij x_i x_j* + b_ij y_i y_j* + c_ij x_i y_j* + d_ij y_i x_j* at
/// phase-space point p.
Mat4 reconstruct(const ModeDecomposition& md, std::size_t p, const PhysicalConstants& consts);

/// alpha_+- = Tr(Pi_+-(xi_j) W(x_n, xi_j)) in w[n * N + j] order, computed row by
/// row so the full matrix field is never stored.
std::array<std::vector<double>, 2> band_densities(const SpinorField& psi,
                                                  const PhysicalConstants& consts,
                                                  unsigned threads = 1);

/// Riemann sum of field * f over phase space with the given cell.
cd phase_pairing(const std::vector<cd>& field, const std::vector<double>& f, double cell);
/// Trapezoid in time of phase_pairing over frames sampled at `times`.
/// Throws std::invalid_argument on size mismatches.
cd weak_pairing(const std::vector<std::vector<cd>>& frames, const std::vector<double>& f,
                double cell, const std::vector<double>& times);
/// Trapezoid rule for already-reduced scalar pairings.
cd time_integral(const std::vector<cd>& values, const std::vector<double>& times);

/// Test function f(x, xi) = sum_r weight_r g_r(x) h_r(xi).
struct SeparableTerm {
  std::function<double(const Vec3&)> g;
  std::function<double(const Vec3&)> h;
  double weight = 1.0;
};

struct TestFunction {
  std::string name;
  std::vector<SeparableTerm> terms;

  double operator()(const Vec3& x, const Vec3& xi) const;
  /// Samples on the Wigner phase-space lattice in w[n * N + j] order.
  std::vector<double> sample(const PeriodicGrid& g, double eps) const;
};

/// Fourier-side evaluation of sum_{x,xi} f(x, xi) B(xi)* W(x, xi) B(xi) dx dxi,
/// B = [x1 x2 y1 y2]. Entry (r, s) of the result pairs f with a_rs (r, s < 2),
/// c_{r, s-2}, d_{r-2, s} and b_{r-2, s-2}. Uses
///   W(n, j) = C / N sum_{a + b = j} u^_a u^*_b e^{2 pi i (a - b).n / N}
/// so only Fourier pairs with |g^(b - a)| above cutoff * max|g^| contribute.
class SpectralPairing {
 public:
  SpectralPairing(const PeriodicGrid& g, double eps, const PhysicalConstants& consts,
                  std::vector<TestFunction> fs, double cutoff = 1e-15);
  std::vector<Mat4> evaluate(const SpinorField& psi) const;
  std::size_t pair_count() const;
  const std::vector<TestFunction>& functions() const { return fs_; }

 private:
  struct Term {
    std::size_t func;
    double weight;
    std::vector<double> h;               // per Wigner slot
    std::vector<std::array<long, 3>> k;  // retained offsets b - a
    std::vector<cd> ghat;
  };
  PeriodicGrid grid_;
  double eps_;
  std::vector<TestFunction> fs_;
  std::vector<Term> terms_;
  std::vector<Mat4> basis_adj_;  // B(xi_j)* per slot
  double prefactor_;
};

/// alpha_+ pairing from a SpectralPairing result.
inline double alpha_plus_of(const Mat4& m) { return (m(0, 0) + m(1, 1)).real(); }
inline double alpha_minus_of(const Mat4& m) { return (m(2, 2) + m(3, 3)).real(); }
/// sum_ij |c_ij| + |d_ij| over the cross blocks.
double cross_magnitude(const Mat4& m);

/// P(z) = m0 + sum_k m[k] z_k, acting as P(eps D) = m0 + sum_k m[k] eps d/dx_k.
struct AffineSymbol {
  Mat4 m0 = Mat4::Zero();
  std::array<Mat4, 3> m{Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};
};

/// V(y) = (2 pi)^-d sum_r vhat_r e^{i p_r . y}, p_r = 2 pi eps n_r / L.
struct LatticeMultiplier {
  std::vector<std::array<long, 3>> modes;
  std::vector<Mat4> vhat;
};

SpinorField apply_symbol(const AffineSymbol& p, const SpinorField& u);
SpinorField apply_multiplier(const LatticeMultiplier& v, const SpinorField& u);

struct PseudoDiffReport {
  double symbol_left = 0.0;       // W[P u, v] vs P(i xi + eps D / 2) W
  double symbol_right = 0.0;      // W[u, P v] vs W P*(i xi - eps D / 2)
  double multiplier_left = 0.0;   // W[V u, v] vs shifted sum
  double multiplier_right = 0.0;  // W[u, V v] vs shifted sum
  double max() const;
};

/// Both sides of each identity computed discretely; entries are max
/// entrywise residuals. Throws std::invalid_argument ("aliasing") when u, v
/// or their multiplier shifts reach |index| >= N/4 on an axis.
PseudoDiffReport verify_pseudodiff_identities(const SpinorField& u, const SpinorField& v,
                                              const AffineSymbol& p, const LatticeMultiplier& vm);

/// Largest Fourier index magnitude per axis carrying content above
/// tol * max |u^|.
std::array<long, 3> spectral_extent(const SpinorField& u, double tol = 1e-13);

/// CSV with header x0,x1,x2,xi0,xi1,xi2,alpha_plus,alpha_minus and re/im of
/// every a, b, c, d entry.
void write_modes_csv(const ModeDecomposition& md, const std::string& path);
/// Binary: "DRTMODE1", u64 points, u64 fields, then fields x points doubles
/// in the CSV column order (after the coordinates).
void write_modes_binary(const ModeDecomposition& md, const std::string& path);
ModeDecomposition read_modes_binary(const std::string& path, const PeriodicGrid& g, double eps);

}  // namespace diracrt
