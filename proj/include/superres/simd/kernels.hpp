#pragma once

// Data-parallel inner loops of the speckle simulator and spectrum analysis.
//
// Every kernel exists as a scalar reference in `scalar::` and, on x86-64
// builds with compiler support, an AVX2 variant in `avx2::`. The free
// functions in `simd::` dispatch to the backend chosen at startup (CPU
// detection, overridable with SUPERRES_SIMD=scalar|avx2|auto or
// set_backend()).
//
// synthesize_intensity, axpy and round_scaled are bit-identical across
// backends (no FMA, same per-lane operation order). dot differs only in
// summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace superres::simd {

enum class Backend { scalar, avx2 };

/// Phasor table for the field synthesis: cos/sin(alpha_l * delta_p), row l.
struct PhasorView {
  std::span<const double> cos_table;  // sources x pixels, row-major
  std::span<const double> sin_table;
  std::size_t sources = 0;
  std::size_t pixels = 0;
};

namespace scalar {
/// out[p] = |sum_l a_l exp(i alpha_l delta_p)|^2
void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out);
/// acc[p] += scale * x[p]
void axpy(double scale, std::span<const double> x, std::span<double> acc);
/// out[p] = round-half-even(x[p] * scale)
void round_scaled(std::span<const double> x, double scale, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

#if defined(SUPERRES_HAVE_AVX2)
namespace avx2 {
void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out);
void axpy(double scale, std::span<const double> x, std::span<double> acc);
void round_scaled(std::span<const double> x, double scale, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace avx2
#endif

/// True if the avx2 backend was compiled in and the CPU supports it.
bool avx2_available() noexcept;

Backend active_backend() noexcept;

/// Throws std::invalid_argument when the backend is unavailable.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend) noexcept;

void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out);
void axpy(double scale, std::span<const double> x, std::span<double> acc);
void round_scaled(std::span<const double> x, double scale, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace superres::simd
