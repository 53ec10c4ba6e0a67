#pragma once

// Split-step spectral integrator for
//   i eps dPsi/dt = [c Q(-i eps grad) - sqrt(eps) e sum_{k=0..3} alpha_k A_k(t / eps^a, x / eps)] Psi
// with alpha_0 = I. Both sub-flows are exact unitary maps.

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <json.hpp>

#include "diracrt/dirac_algebra.hpp"
#include "diracrt/fft.hpp"
#include "diracrt/grid.hpp"
#include "diracrt/random_field.hpp"

namespace diracrt {

/// Four-component spinor on a periodic grid. Storage is component-major:
/// psi[c * grid.size() + f].
struct SpinorField {
  PeriodicGrid grid;
  double eps = 1.0;
  PhysicalConstants consts;
  std::vector<cd> psi;

  SpinorField() = default;
  SpinorField(const PeriodicGrid& g, double eps, const PhysicalConstants& pc);

  std::size_t points() const { return grid.size(); }
  cd& at(int c, std::size_t f) { return psi[c * grid.size() + f]; }
  cd at(int c, std::size_t f) const { return psi[c * grid.size() + f]; }
  Spinor spinor(std::size_t f) const;
  void set_spinor(std::size_t f, const Spinor& s);

  /// sum |psi|^2 times the cell volume of the non-degenerate axes.
  double norm2() const;
  /// Quadrature inner product <this, other>.
  cd inner(const SpinorField& other) const;
};

/// Unnormalized forward FFT per component (component-major layout kept).
std::vector<cd> to_fourier(const SpinorField& s);
/// Inverse of to_fourier including the 1/N factor.
void from_fourier(std::vector<cd> hat, SpinorField& s);

/// Momentum xi = eps * k of FFT slot f.
Vec3 grid_momentum(const PeriodicGrid& g, double eps, std::size_t f);

enum class Branch { plus, minus };

struct WavepacketSpec {
  Vec3 center = Vec3::Zero();
  Vec3 momentum = Vec3::Zero();
  double width = std::numeric_limits<double>::infinity();
  Branch branch = Branch::plus;
  int polarization = 1;  // 1 or 2
};

/// Gaussian envelope exp(-|x - x0|^2 / (2 width^2)) (minimum image) times
/// e^{i p0.x / eps} times x_pol(p0) or y_pol(p0). Each Fourier mode is then
/// projected on the requested band so the data are exactly branch-pure, and
/// the result is scaled to |Psi|^2 = eps^{d_eff / 2}. Infinite width gives a
/// plane wave. Throws std::invalid_argument when p0 is off the momentum
/// lattice 2 pi eps n / L or the width is below two grid spacings.
SpinorField make_wavepacket(const WavepacketSpec& spec, const PeriodicGrid& grid, double eps,
                            const PhysicalConstants& consts);

/// Supplies A_k on the grid. Time arguments are physical t.
class FieldProvider {
 public:
  virtual ~FieldProvider() = default;
  /// First discontinuity of the field strictly after t (infinity if none).
  virtual double next_jump(double t) const = 0;
  /// Field at time t; callers pass interior points of jump-free segments.
  /// nullptr means A = 0.
  virtual const FieldSample* field(double t) = 0;
};

class ZeroField final : public FieldProvider {
 public:
  double next_jump(double) const override { return std::numeric_limits<double>::infinity(); }
  const FieldSample* field(double) override { return nullptr; }
};

/// Piecewise-constant field from a jump path with tau = t / eps^alpha_time.
class PathField final : public FieldProvider {
 public:
  PathField(std::shared_ptr<const FieldPath> path, double alpha_time);
  double next_jump(double t) const override;
  const FieldSample* field(double t) override;
  double time_scale() const { return scale_; }

 private:
  std::shared_ptr<const FieldPath> path_;
  double scale_;  // eps^alpha
  std::size_t cached_ = static_cast<std::size_t>(-1);
  FieldSample sample_;
};

/// Constant field given directly on the grid.
class StaticField final : public FieldProvider {
 public:
  explicit StaticField(FieldSample s) : sample_(std::move(s)) {}
  double next_jump(double) const override { return std::numeric_limits<double>::infinity(); }
  const FieldSample* field(double) override { return &sample_; }

 private:
  FieldSample sample_;
};

struct SolverConfig {
  double dt = 1e-2;
  double alpha_time = 1.0;
  /// Allowed relative norm drift per unit time before step() reports the
  /// step as unresolved.
  double norm_tolerance = 1e-10;

  void validate() const;
};

class DiracPropagator {
 public:
  DiracPropagator(const PeriodicGrid& grid, double eps, const PhysicalConstants& consts);

  /// Advances by cfg.dt with Strang splitting (half potential, free, half
  /// potential), subdividing at field jumps so no sub-step straddles one.
  /// Throws std::invalid_argument when dt leaves the free phase c lambda dt /
  /// eps above pi at the grid's largest momentum, and std::runtime_error if
  /// the norm monitor trips.
  void step(SpinorField& state, double& t, const SolverConfig& cfg, FieldProvider& field);

  /// Exact free flow exp(-i c Q(eps D) dt / eps).
  void free_flow(SpinorField& state, double dt);
  /// Exact potential flow with a constant field sample (nullptr: no-op).
  void potential_flow(SpinorField& state, const FieldSample* field, double dt) const;

  /// c lambda_+ at the largest grid momentum.
  double max_energy() const { return max_energy_; }

 private:
  PeriodicGrid grid_;
  double eps_;
  PhysicalConstants consts_;
  FftPlan forward_, backward_;
  std::vector<Vec3> xi_;
  std::vector<double> lambda_;
  double max_energy_ = 0.0;
  std::vector<cd> work_;
};

struct SnapshotInfo {
  double t = 0.0;
  double norm2 = 0.0;
};

using Observer = std::function<void(double t, const SpinorField&)>;

/// Integrates to horizon T. Observers fire at t = 0 and at every multiple of
/// output_interval (steps are shortened to land on them). Returns the index
/// of the observed times.
std::vector<SnapshotInfo> run(SpinorField& state, const SolverConfig& cfg, FieldProvider& field,
                              double horizon, double output_interval, const Observer& observer);

nlohmann::json snapshot_to_json(const SpinorField& s, double t);
SpinorField snapshot_from_json(const nlohmann::json& j, double* t = nullptr);

}  // namespace diracrt
