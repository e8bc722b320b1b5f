// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace emofuse {

/// Real-input forward FFT of a fixed size. Input shorter than the size is
/// zero-padded. One instance must not be used from two threads at once;
/// separate instances are independent.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// Complex spectrum, bins 0..size/2.
  std::vector<std::complex<double>> transform(std::span<const double> input);
  /// |X_k|^2 for bins 0..size/2.
  std::vector<double> power(std::span<const double> input);
  /// |X_k| for bins 0..size/2.
  std::vector<double> magnitude(std::span<const double> input);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace emofuse
