#include "diracrt/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace diracrt {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(std::array<std::size_t, 3> dims, std::size_t howmany,
                 Direction dir)
    : n_(dims[0] * dims[1] * dims[2]), howmany_(howmany) {
  if (n_ == 0 || howmany == 0) throw std::invalid_argument("empty FFT plan");
  const int n[3] = {static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                    static_cast<int>(dims[2])};
  std::vector<std::complex<double>> scratch(n_ * howmany);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_many_dft(3, n, static_cast<int>(howmany), buf, nullptr, 1,
                             static_cast<int>(n_), buf, nullptr, 1,
                             static_cast<int>(n_), sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan_ == nullptr) throw std::runtime_error("FFTW plan creation failed");
}

FftPlan::~FftPlan() {
  if (plan_ != nullptr) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

FftPlan::FftPlan(FftPlan&& other) noexcept
    : plan_(std::exchange(other.plan_, nullptr)),
      n_(other.n_),
      howmany_(other.howmany_) {}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    if (plan_ != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
    plan_ = std::exchange(other.plan_, nullptr);
    n_ = other.n_;
    howmany_ = other.howmany_;
  }
  return *this;
}

void FftPlan::execute(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_), p, p);
}

}  // namespace diracrt
