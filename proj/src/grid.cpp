#include "diracrt/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diracrt {

PeriodicGrid PeriodicGrid::line(std::size_t n, double length) {
  PeriodicGrid g;
  g.points = {1, 1, n};
  g.lengths = {1.0, 1.0, length};
  return g;
}

void PeriodicGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (points[a] == 0) throw std::invalid_argument("grid axis with zero points");
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw std::invalid_argument("grid lengths must be positive");
  }
}

int PeriodicGrid::effective_dims() const {
  int d = 0;
  for (int a = 0; a < 3; ++a) d += degenerate(a) ? 0 : 1;
  return d;
}

double PeriodicGrid::spacing(int axis) const {
  return lengths[axis] / static_cast<double>(points[axis]);
}

double PeriodicGrid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < 3; ++a)
    if (!degenerate(a)) v *= spacing(a);
  return v;
}

std::array<std::size_t, 3> PeriodicGrid::unflat(std::size_t f) const {
  const std::size_t i2 = f % points[2];
  f /= points[2];
  const std::size_t i1 = f % points[1];
  return {f / points[1], i1, i2};
}

Vec3 PeriodicGrid::position(std::size_t f) const {
  const auto idx = unflat(f);
  Vec3 x = Vec3::Zero();
  for (int a = 0; a < 3; ++a)
    if (!degenerate(a)) x[a] = static_cast<double>(idx[a]) * spacing(a);
  return x;
}

std::array<long, 3> PeriodicGrid::signed_index(std::size_t f) const {
  const auto idx = unflat(f);
  return {signed_fft_index(idx[0], points[0]), signed_fft_index(idx[1], points[1]),
          signed_fft_index(idx[2], points[2])};
}

std::size_t PeriodicGrid::slot(const std::array<long, 3>& s) const {
  return flat(wrap_index(s[0], points[0]), wrap_index(s[1], points[1]),
              wrap_index(s[2], points[2]));
}

Vec3 PeriodicGrid::wavenumber(std::size_t f) const {
  const auto s = signed_index(f);
  Vec3 k = Vec3::Zero();
  for (int a = 0; a < 3; ++a)
    if (!degenerate(a))
      k[a] = 2.0 * std::numbers::pi * static_cast<double>(s[a]) / lengths[a];
  return k;
}

}  // namespace diracrt
