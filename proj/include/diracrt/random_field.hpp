#pragma once

// Markov jump random field: band-limited Fourier amplitudes that are redrawn
// from a fixed product measure at Exp(rate) holding times. Time here is the
// fast variable tau of A_k(tau, y); the solver maps t -> t / eps^alpha.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "diracrt/dirac_algebra.hpp"
#include "diracrt/grid.hpp"

namespace diracrt {

/// Separable correlation R_kk(t, p) = exp(-rate |t|) S_k(p), no cross terms.
/// Gaussian profile: S_k(p) = amplitude[k] exp(-|p|^2 / (2 width^2)) on
/// |p| <= band_limit. Tabulated profile: S_k interpolated linearly in |p|.
struct SpectrumDescriptor {
  enum class Profile { gaussian, tabulated };

  Profile profile = Profile::gaussian;
  std::array<double, 4> amplitude{};
  double width = 0.5;
  double band_limit = 1.5;
  double jump_rate = 1.0;
  std::vector<double> table_radius;               // increasing |p| nodes
  std::array<std::vector<double>, 4> table_value;  // S_k at the nodes

  /// Throws std::invalid_argument on negative amplitudes, non-positive
  /// width, band limit or rate, or a malformed table.
  void validate() const;

  double spatial(int k, const Vec3& p) const;
  double temporal(double t) const;
  /// Fourier transform of temporal(): 2 rate / (rate^2 + omega^2).
  double temporal_hat(double omega) const;
  /// R^_kk(omega, p) = temporal_hat(omega) * S_k(p).
  double power(int k, double omega, const Vec3& p) const;
  bool closed_form() const { return profile == Profile::gaussian; }
  bool is_zero() const;
};

/// Finite symmetric set of wavevectors p = 2 pi eps n / L with |p| <= M,
/// commensurate with a periodic grid so that A_k(x / eps) is a trigonometric
/// polynomial on it.
struct ModeLattice {
  PeriodicGrid grid;
  double eps = 1.0;
  double band_limit = 0.0;
  std::vector<std::array<long, 3>> index;
  std::vector<Vec3> p;
  std::vector<std::size_t> partner;  // position of -n
  double cell = 1.0;                 // (2 pi eps / L)^d over non-degenerate axes
  int dims = 0;

  /// Throws std::invalid_argument when a mode would reach the grid Nyquist
  /// index, since the synthesized field would then alias.
  static std::shared_ptr<const ModeLattice> build(const PeriodicGrid& grid, double eps,
                                                  double band_limit);
  std::size_t size() const { return index.size(); }
};

/// Amplitudes a_k(p_n) of one state. A_k(y) = (2 pi)^-d sum_n a_k(p_n) e^{i p_n.y}.
struct AmplitudeTable {
  std::array<std::vector<cd>, 4> a;

  bool operator==(const AmplitudeTable&) const = default;
};

/// E|a_k(p_n)|^2 = (2 pi)^d S_k(p_n) cell.
double mode_variance(const SpectrumDescriptor& spec, const ModeLattice& lattice, int k,
                     std::size_t mode);

/// One draw from the invariant measure: independent per Hermitian pair,
/// uniform on the disc of radius sqrt(2) sigma for p != 0 and uniform on
/// [-sqrt(3) sigma, sqrt(3) sigma] for the self-conjugate p = 0 mode.
AmplitudeTable sample_invariant_measure(const SpectrumDescriptor& spec,
                                        const ModeLattice& lattice, std::uint64_t seed);

/// Largest |a| the invariant measure can produce.
double amplitude_bound(const SpectrumDescriptor& spec, const ModeLattice& lattice);

struct FieldPath {
  std::shared_ptr<const ModeLattice> lattice;
  SpectrumDescriptor spectrum;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> jump_times;      // strictly increasing, inside (0, horizon)
  std::vector<AmplitudeTable> states;  // states[i] holds on [t_{i-1}, t_i)

  /// Index of the state active at tau. Throws std::out_of_range outside
  /// [0, horizon].
  std::size_t interval(double tau) const;
  const AmplitudeTable& state_at(double tau) const { return states[interval(tau)]; }
  /// First jump strictly after tau, or horizon.
  double next_jump(double tau) const;
};

/// Exp(rate) holding times; every jump redraws the whole table from the
/// invariant measure. Deterministic in seed. Throws std::invalid_argument
/// unless rate > 0 and horizon >= 0.
FieldPath evolve_jump_path(const AmplitudeTable& initial, const SpectrumDescriptor& spec,
                           std::shared_ptr<const ModeLattice> lattice, double horizon,
                           std::uint64_t seed);

/// Stationary path: initial state drawn from the invariant measure.
FieldPath sample_path(const SpectrumDescriptor& spec, std::shared_ptr<const ModeLattice> lattice,
                      double horizon, std::uint64_t seed);

struct FieldSample {
  PeriodicGrid grid;
  double tau = 0.0;
  std::array<std::vector<double>, 4> values;
  double max_imag = 0.0;  // largest |Im| discarded by the synthesis
};

/// Inverse discrete Fourier synthesis of A_k(tau, x / eps) on the lattice grid.
FieldSample synthesize_table(const ModeLattice& lattice, const AmplitudeTable& table,
                             double tau = 0.0);
/// Throws std::out_of_range when tau is outside [0, horizon] and
/// std::invalid_argument when grid differs from the lattice grid.
FieldSample synthesize_field(const FieldPath& path, double tau, const PeriodicGrid& grid);

/// A_k(x / eps) at a single macroscopic point by direct summation.
double field_at(const ModeLattice& lattice, const AmplitudeTable& table, int k, const Vec3& x);

struct CorrelationLag {
  double t = 0.0;
  std::array<long, 3> shift{0, 0, 0};  // grid-point offset of x
};

using Mat4d = std::array<std::array<double, 4>, 4>;

struct CorrelationEstimate {
  std::vector<CorrelationLag> lags;
  std::vector<Mat4d> mean;    // R_mn(t, x) per lag
  std::vector<Mat4d> std_error;  // standard error of the ensemble mean
  std::size_t members = 0;
};

/// Empirical R_mn(t, x) = E{A_m(s + t, y + x) A_n(s, y)}. Each path gives one
/// sample averaged over y and over base_times s; the ensemble mean is
/// unbiased and its standard error comes from the spread across paths.
/// Throws std::invalid_argument for fewer than two paths.
CorrelationEstimate estimate_correlation(const std::vector<FieldPath>& paths,
                                         const std::vector<CorrelationLag>& lags,
                                         const std::vector<double>& base_times);

/// Exact R_mn(t, x) implied by the spectrum on this lattice.
double lattice_correlation(const SpectrumDescriptor& spec, const ModeLattice& lattice, int m,
                           int n, double t, const Vec3& x);

struct DecayFit {
  double rate = 0.0;
  double rate_error = 0.0;
  double log_amplitude = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares for log C(t) = log C0 - rate t. Points with
/// C <= 3 err are dropped. Throws std::invalid_argument with fewer than two
/// usable points.
DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& c,
                               const std::vector<double>& err);

struct PeriodogramEstimate {
  std::vector<double> omega;
  std::vector<double> mean;    // estimate of R^_kk(omega, p)
  std::vector<double> std_error;
};

/// Averaged periodogram of a_k(tau, p_mode) sampled every dtau over each
/// path's horizon, scaled by 1 / ((2 pi)^d cell) so that for long horizons it
/// estimates R^_kk(omega, p).
PeriodogramEstimate estimate_power_spectrum(const std::vector<FieldPath>& paths, int k,
                                            std::size_t mode, double dtau,
                                            const std::vector<double>& omegas);

nlohmann::json spectrum_to_json(const SpectrumDescriptor& spec);
SpectrumDescriptor spectrum_from_json(const nlohmann::json& j);
nlohmann::json path_to_json(const FieldPath& path);
FieldPath path_from_json(const nlohmann::json& j);

}  // namespace diracrt
