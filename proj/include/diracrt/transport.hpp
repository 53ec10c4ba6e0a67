#pragma once

// Limiting radiative transport for the band densities (alpha_+, alpha_-):
//
//   d_t a+ + c xi/lambda(xi) . grad a+ = T(a+, a-)
//   d_t a- - c xi/lambda(xi) . grad a- = T(a-, a+)
//
// T(a, b)(xi) = pre sum_q [(a(q) - a(xi)) K-(xi, q) + (b(q) - a(xi)) K+(xi, q)] dq
//
// The xi lattice is the Wigner half lattice pi eps s / L restricted to a
// ball. Scattering moves xi by field wavevectors 2 pi eps n / L, so only
// slots whose indices agree in parity on every axis are coupled, with
// quadrature weight prod 2 pi eps / L.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diracrt/dirac_algebra.hpp"
#include "diracrt/grid.hpp"
#include "diracrt/random_field.hpp"
#include "diracrt/wigner.hpp"

namespace diracrt {

struct TransportLattice {
  PeriodicGrid xgrid;                    // may be degenerate (homogeneous runs)
  std::array<bool, 3> xi_axes{false, false, true};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  double eps = 1.0;
  double radius = 0.0;
  std::vector<std::array<long, 3>> index;  // half-lattice multi-index s
  std::vector<Vec3> xi;
  double xi_cell = 1.0;        // prod pi eps / L
  double coupling_cell = 1.0;  // prod 2 pi eps / L

  /// xi axes and lengths follow `lengths`; x points on each xi axis come
  /// from xgrid (1 = homogeneous in that direction).
  static std::shared_ptr<const TransportLattice> build(const PeriodicGrid& xgrid,
                                                       const std::array<bool, 3>& xi_axes,
                                                       const std::array<double, 3>& lengths,
                                                       double eps, double radius);
  /// Lattice matching a wave grid: same lengths and xi axes, coarse x grid
  /// with x_points per non-degenerate axis (0 keeps the wave resolution).
  static std::shared_ptr<const TransportLattice> for_wave_grid(const PeriodicGrid& wave,
                                                               double eps, double radius,
                                                               std::size_t x_points);

  std::size_t nxi() const { return xi.size(); }
  std::size_t nx() const { return xgrid.size(); }
  /// Same parity of s on every axis.
  bool coupled(std::size_t i, std::size_t j) const;
  /// Field wavevector q - xi for a coupled pair.
  Vec3 transfer(std::size_t i, std::size_t j) const;
  double phase_cell() const { return xgrid.cell_volume() * xi_cell; }
};

/// Storage alpha[x * nxi + i].
struct TransportState {
  std::shared_ptr<const TransportLattice> lattice;
  std::vector<double> alpha_plus, alpha_minus;
  double time = 0.0;

  explicit TransportState(std::shared_ptr<const TransportLattice> lat);
  TransportState() = default;

  double mass_plus() const;
  double mass_minus() const;
  double mass() const { return mass_plus() + mass_minus(); }
  double l2() const;  // <a+, a+> + <a-, a->
  double min_value() const;
};

/// Restricts Tr(Pi_+- W) from a wave grid to the transport lattice: per xi
/// slot the x dependence is truncated to the Fourier modes the coarse grid
/// holds (Nyquist dropped), so low-mode pairings are unchanged.
TransportState initial_state_from_modes(std::shared_ptr<const TransportLattice> lat,
                                        const ModeDecomposition& md);
/// Same from band densities on a wave grid (see band_densities).
TransportState initial_state_from_bands(std::shared_ptr<const TransportLattice> lat,
                                        const PeriodicGrid& wave, double eps,
                                        const std::array<std::vector<double>, 2>& bands);

/// sum f alpha dx dxi for each band.
std::array<double, 2> pair_state(const TransportState& s, const TestFunction& f);

struct KernelOptions {
  /// Lorentzian rate multiplier. Values below 1 sharpen the temporal factor
  /// toward 2 pi delta(omega); the elastic regime is the limit 0.
  double sharpening = 1.0;
  unsigned threads = 1;
};

/// Raw kernels without prefactor; entries for uncoupled pairs are 0.
struct CollisionKernelCache {
  std::shared_ptr<const TransportLattice> lattice;
  PhysicalConstants consts;
  Eigen::MatrixXd k_minus, k_plus;
  double prefactor = 0.0;  // e^2 / (2 pi)^d times coupling_cell
  Eigen::VectorXd loss;    // prefactor * row sums of k_minus + k_plus

  double max_loss() const { return loss.size() ? loss.maxCoeff() : 0.0; }
  double symmetry_residual() const;
};

/// Throws std::invalid_argument for a spectrum without closed form.
CollisionKernelCache build_kernels(const SpectrumDescriptor& spec,
                                   std::shared_ptr<const TransportLattice> lat,
                                   const PhysicalConstants& consts, const KernelOptions& opt = {});

/// Within-shell kernel sum_k omega_k S_k(q - xi) for pairs in the same energy
/// shell; the delta in energy becomes 1 / shell_width inside the prefactor.
struct ElasticKernelCache {
  std::shared_ptr<const TransportLattice> lattice;
  PhysicalConstants consts;
  Eigen::MatrixXd k_el;
  std::vector<long> shell;  // shell index per xi slot
  std::vector<long> shell_ids;
  double shell_width = 0.0;  // energy bin width
  double prefactor = 0.0;    // e^2 / (2 pi)^(d - 1) / shell_width times coupling_cell
  Eigen::VectorXd loss;

  double max_loss() const { return loss.size() ? loss.maxCoeff() : 0.0; }
  /// Mass of one band per shell, indexed like shell_ids.
  std::vector<double> shell_mass(const std::vector<double>& alpha) const;
};

/// shell_width <= 0 selects twice the coupling spacing times c.
ElasticKernelCache build_elastic_kernels(const SpectrumDescriptor& spec,
                                         std::shared_ptr<const TransportLattice> lat,
                                         const PhysicalConstants& consts,
                                         double shell_width = 0.0, unsigned threads = 1);

struct RhsPair {
  std::vector<double> plus, minus;
};

RhsPair collision_rhs(const TransportState& s, const CollisionKernelCache& k);
RhsPair elastic_rhs(const TransportState& s, const ElasticKernelCache& k);
/// -v . grad alpha with v = +- c xi / lambda_+(xi), spectral in x.
RhsPair free_streaming_rhs(const TransportState& s, const PhysicalConstants& consts);

enum class TransportMode { inelastic, elastic };

struct TransportConfig {
  double dt = 0.01;
  double horizon = 1.0;
  double output_interval = 0.1;
  double cfl_limit = 1.0;
  double stiffness_limit = 0.5;
};

struct TransportStepRecord {
  double t = 0.0;
  double mass = 0.0;
  double l2 = 0.0;
  double min_value = 0.0;
  double shell_drift = 0.0;  // elastic: max relative per-shell mass change
};

struct TransportTrajectory {
  std::vector<TransportStepRecord> steps;  // t = 0 and after every step
  std::vector<double> output_times;
  std::vector<std::vector<double>> shell_mass_plus, shell_mass_minus;  // elastic mode
  std::vector<long> shell_ids;
};

using TransportObserver = std::function<void(const TransportState&)>;

/// Strang splitting: exact Fourier-shift streaming for dt/2, one classical
/// RK4 collision step, streaming dt/2. The RK4 polynomial maps the symmetric
/// negative semidefinite collision generator into [-1, 1] when
/// dt * max_loss < 0.5, so mass is exact and L2 cannot grow.
/// Throws std::invalid_argument on CFL or stiffness violation and
/// std::runtime_error when a non-finite value appears.
TransportTrajectory integrate(TransportState& state, const TransportConfig& cfg,
                              TransportMode mode, const CollisionKernelCache* inelastic,
                              const ElasticKernelCache* elastic,
                              const TransportObserver& observer = {});

/// Dense generator of the homogeneous inelastic system on (a+, a-) stacked.
Eigen::MatrixXd collision_generator(const CollisionKernelCache& k);

/// Binary kernel file: "DRTKERN1", u64 n, double prefactor, then k_minus and
/// k_plus row-major.
void write_kernels(const CollisionKernelCache& k, const std::string& path);
CollisionKernelCache read_kernels(const std::string& path,
                                  std::shared_ptr<const TransportLattice> lat,
                                  const PhysicalConstants& consts);

void write_trajectory_csv(const TransportTrajectory& tr, const std::string& path);

}  // namespace diracrt
