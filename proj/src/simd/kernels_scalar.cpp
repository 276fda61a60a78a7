#include <cassert>
#include <cmath>

#include "superres/simd/kernels.hpp"

namespace superres::simd::scalar {

void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out) {
  const std::size_t n = phasors.sources;
  const std::size_t p_count = phasors.pixels;
  assert(amp_re.size() >= n && amp_im.size() >= n && out.size() >= p_count);
  for (std::size_t p = 0; p < p_count; ++p) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double c = phasors.cos_table[l * p_count + p];
      const double s = phasors.sin_table[l * p_count + p];
      re += amp_re[l] * c - amp_im[l] * s;
      im += amp_re[l] * s + amp_im[l] * c;
    }
    out[p] = re * re + im * im;
  }
}

void axpy(double scale, std::span<const double> x, std::span<double> acc) {
  assert(acc.size() >= x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc[i] += scale * x[i];
  }
}

void round_scaled(std::span<const double> x, double scale, std::span<double> out) {
  assert(out.size() >= x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::nearbyint(x[i] * scale);
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

}  // namespace superres::simd::scalar
