#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "superres/simd/kernels.hpp"

namespace superres::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(SUPERRES_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  const char* env = std::getenv("SUPERRES_SIMD");
  if (env != nullptr && std::string(env) == "scalar") {
    return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

bool avx2_available() noexcept { return cpu_has_avx2(); }

Backend active_backend() noexcept { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::avx2 && !avx2_available()) {
    throw std::invalid_argument("avx2 backend is not available on this build/CPU");
  }
  backend_slot().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

void synthesize_intensity(std::span<const double> amp_re, std::span<const double> amp_im,
                          const PhasorView& phasors, std::span<double> out) {
#if defined(SUPERRES_HAVE_AVX2)
  if (active_backend() == Backend::avx2) {
    avx2::synthesize_intensity(amp_re, amp_im, phasors, out);
    return;
  }
#endif
  scalar::synthesize_intensity(amp_re, amp_im, phasors, out);
}

void axpy(double scale, std::span<const double> x, std::span<double> acc) {
#if defined(SUPERRES_HAVE_AVX2)
  if (active_backend() == Backend::avx2) {
    avx2::axpy(scale, x, acc);
    return;
  }
#endif
  scalar::axpy(scale, x, acc);
}

void round_scaled(std::span<const double> x, double scale, std::span<double> out) {
#if defined(SUPERRES_HAVE_AVX2)
  if (active_backend() == Backend::avx2) {
    avx2::round_scaled(x, scale, out);
    return;
  }
#endif
  scalar::round_scaled(x, scale, out);
}

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(SUPERRES_HAVE_AVX2)
  if (active_backend() == Backend::avx2) {
    return avx2::dot(a, b);
  }
#endif
  return scalar::dot(a, b);
}

}  // namespace superres::simd
