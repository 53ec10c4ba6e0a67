#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace diracrt {

/// RAII wrapper around an FFTW plan for `howmany` contiguous, in-place,
/// unnormalized complex transforms of shape dims (row-major, last axis
/// fastest). Plans are created with FFTW_ESTIMATE so results do not depend
/// on timing measurements. Plan creation is serialized internally, so
/// plans may be built from any thread; execute() is thread-safe.
class FftPlan {
 public:
  enum class Direction { forward, backward };

  FftPlan(std::array<std::size_t, 3> dims, std::size_t howmany, Direction dir);
  ~FftPlan();

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept;
  FftPlan& operator=(FftPlan&& other) noexcept;

  /// Transforms `data` in place. It must hold howmany * prod(dims) values.
  void execute(std::complex<double>* data) const;

  std::size_t transform_size() const { return n_; }
  std::size_t howmany() const { return howmany_; }

 private:
  void* plan_ = nullptr;  // fftw_plan
  std::size_t n_ = 0;
  std::size_t howmany_ = 0;
};

}  // namespace diracrt
