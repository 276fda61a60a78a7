#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace superres {

/// `samples` points 2 pi s / samples, s = 0..samples-1 (endpoint excluded).
std::vector<double> periodic_grid(std::size_t samples);

/// DFT coefficient (1/S) sum_s v_s exp(-i q 2 pi s / S) of values sampled on
/// periodic_grid(S). For a real cosine series the amplitude of cos(q delta)
/// is 2 |c_q|.
std::complex<double> fourier_coefficient(std::span<const double> values, int q);

/// Precomputed cos/sin rows for repeated projections onto integer frequencies.
class FourierBasis {
 public:
  FourierBasis(std::size_t samples, int max_frequency);
  std::complex<double> coefficient(std::span<const double> values, int q) const;
  std::size_t samples() const noexcept { return samples_; }
  int max_frequency() const noexcept { return max_frequency_; }

 private:
  std::size_t samples_;
  int max_frequency_;
  std::vector<double> cos_;  // (max_frequency + 1) x samples
  std::vector<double> sin_;
};

}  // namespace superres
