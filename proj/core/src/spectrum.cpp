// SPDX-License-Identifier: Apache-2.0
#include "emofuse/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Impl {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Impl(std::size_t n) {
    std::lock_guard lock(planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw InvalidArgument("FFT size must be at least 2");
  impl_ = std::make_unique<Impl>(size);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

std::vector<std::complex<double>> RealFft::transform(std::span<const double> input) {
  if (input.size() > size_) throw InvalidArgument("FFT input longer than transform size");
  std::copy(input.begin(), input.end(), impl_->in);
  std::fill(impl_->in + input.size(), impl_->in + size_, 0.0);
  fftw_execute(impl_->plan);
  std::vector<std::complex<double>> out(bins());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {impl_->out[k][0], impl_->out[k][1]};
  return out;
}

std::vector<double> RealFft::power(std::span<const double> input) {
  auto spec = transform(input);
  std::vector<double> out(spec.size());
  std::transform(spec.begin(), spec.end(), out.begin(), [](auto c) { return std::norm(c); });
  return out;
}

std::vector<double> RealFft::magnitude(std::span<const double> input) {
  auto spec = transform(input);
  std::vector<double> out(spec.size());
  std::transform(spec.begin(), spec.end(), out.begin(), [](auto c) { return std::abs(c); });
  return out;
}

}  // namespace emofuse
