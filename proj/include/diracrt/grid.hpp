#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "diracrt/dirac_algebra.hpp"

namespace diracrt {

/// Periodic box with up to three axes. An axis with a single point is
/// degenerate: fields are constant along it and it contributes neither to
/// quadrature weights nor to momenta.
struct PeriodicGrid {
  std::array<std::size_t, 3> points{1, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  /// Quasi-1D grid along the third axis.
  static PeriodicGrid line(std::size_t n, double length);

  /// Throws std::invalid_argument on zero points or non-positive lengths.
  void validate() const;

  std::size_t size() const { return points[0] * points[1] * points[2]; }
  bool degenerate(int axis) const { return points[axis] == 1; }
  int effective_dims() const;
  double spacing(int axis) const;
  /// Product of spacings over non-degenerate axes.
  double cell_volume() const;

  std::size_t flat(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return (i0 * points[1] + i1) * points[2] + i2;
  }
  std::array<std::size_t, 3> unflat(std::size_t f) const;

  Vec3 position(std::size_t f) const;
  /// Angular wavenumber 2 pi n / L of FFT slot f (signed n in [-N/2, N/2)).
  Vec3 wavenumber(std::size_t f) const;
  /// Signed FFT index per axis.
  std::array<long, 3> signed_index(std::size_t f) const;
  /// Flat slot of a signed index (wrapped modulo the axis size).
  std::size_t slot(const std::array<long, 3>& signed_idx) const;

  bool operator==(const PeriodicGrid&) const = default;
};

inline long signed_fft_index(std::size_t i, std::size_t n) {
  return i < (n + 1) / 2 ? static_cast<long>(i)
                         : static_cast<long>(i) - static_cast<long>(n);
}

inline std::size_t wrap_index(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  long r = i % m;
  if (r < 0) r += m;
  return static_cast<std::size_t>(r);
}

}  // namespace diracrt
