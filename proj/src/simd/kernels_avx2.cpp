#include <immintrin.h>

#include <cassert>
#include <cmath>

#include "superres/simd/kernels.hpp"

namespace superres::simd::avx2 {

// Compiled with -mavx2 only (no -mfma): separate mul/add keeps each lane's
// arithmetic identical to the scalar reference.

void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out) {
  const std::size_t n = phasors.sources;
  const std::size_t p_count = phasors.pixels;
  assert(amp_re.size() >= n && amp_im.size() >= n && out.size() >= p_count);
  const double* cos_t = phasors.cos_table.data();
  const double* sin_t = phasors.sin_table.data();

  std::size_t p = 0;
  for (; p + 4 <= p_count; p += 4) {
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    for (std::size_t l = 0; l < n; ++l) {
      const __m256d c = _mm256_loadu_pd(cos_t + l * p_count + p);
      const __m256d s = _mm256_loadu_pd(sin_t + l * p_count + p);
      const __m256d ar = _mm256_set1_pd(amp_re[l]);
      const __m256d ai = _mm256_set1_pd(amp_im[l]);
      re = _mm256_add_pd(re, _mm256_sub_pd(_mm256_mul_pd(ar, c), _mm256_mul_pd(ai, s)));
      im = _mm256_add_pd(im, _mm256_add_pd(_mm256_mul_pd(ar, s), _mm256_mul_pd(ai, c)));
    }
    _mm256_storeu_pd(out.data() + p,
                     _mm256_add_pd(_mm256_mul_pd(re, re), _mm256_mul_pd(im, im)));
  }
  for (; p < p_count; ++p) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double c = cos_t[l * p_count + p];
      const double s = sin_t[l * p_count + p];
      re += amp_re[l] * c - amp_im[l] * s;
      im += amp_re[l] * s + amp_im[l] * c;
    }
    out[p] = re * re + im * im;
  }
}

void axpy(double scale, std::span<const double> x, std::span<double> acc) {
  assert(acc.size() >= x.size());
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_mul_pd(a, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), v));
  }
  for (; i < n; ++i) {
    acc[i] += scale * x[i];
  }
}

void round_scaled(std::span<const double> x, double scale, std::span<double> out) {
  assert(out.size() >= x.size());
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), a);
    _mm256_storeu_pd(out.data() + i,
                     _mm256_round_pd(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
  }
  for (; i < n; ++i) {
    out[i] = std::nearbyint(x[i] * scale);
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i),
                                           _mm256_loadu_pd(b.data() + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

}  // namespace superres::simd::avx2
