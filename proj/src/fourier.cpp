#include "superres/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "superres/curve.hpp"
#include "superres/errors.hpp"
#include "superres/simd/kernels.hpp"
#include "superres/spectrum.hpp"

namespace superres {

void validate(const CorrelationCurve& curve) {
  if (curve.delta1.size() != curve.values.size()) {
    throw DimensionError("curve delta1 and values differ in length");
  }
  if (!curve.sigma.empty() && curve.sigma.size() != curve.values.size()) {
    throw DimensionError("curve sigma and values differ in length");
  }
  for (const auto& rep : curve.replicates) {
    if (rep.size() != curve.values.size()) {
      throw DimensionError("bootstrap replicate length differs from curve length");
    }
  }
}

std::string_view to_string(FitKind kind) noexcept {
  switch (kind) {
    case FitKind::fourier:
      return "fourier";
    case FitKind::fixed_frequency:
      return "fixed-frequency";
    case FitKind::free_frequency:
      return "free-frequency";
  }
  return "unknown";
}

std::optional<FitKind> fit_kind_from_string(std::string_view text) noexcept {
  if (text == "fourier") return FitKind::fourier;
  if (text == "fixed-frequency") return FitKind::fixed_frequency;
  if (text == "free-frequency") return FitKind::free_frequency;
  return std::nullopt;
}

const Harmonic* ModulationSpectrum::find_frequency(int f) const noexcept {
  for (const auto& h : harmonics) {
    if (std::lround(h.frequency) == f && std::abs(h.frequency - f) < 0.5) {
      return &h;
    }
  }
  return nullptr;
}

std::vector<double> periodic_grid(std::size_t samples) {
  std::vector<double> grid(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    grid[s] = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(samples);
  }
  return grid;
}

std::complex<double> fourier_coefficient(std::span<const double> values, int q) {
  const std::size_t n = values.size();
  if (n == 0) {
    throw DimensionError("Fourier coefficient of an empty sample set");
  }
  double re = 0.0;
  double im = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    // reduce q*s mod n first so the phase argument stays exact
    const auto k = static_cast<long long>((static_cast<long long>(q) * static_cast<long long>(s)) %
                                          static_cast<long long>(n));
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    re += values[s] * std::cos(phase);
    im -= values[s] * std::sin(phase);
  }
  return {re / static_cast<double>(n), im / static_cast<double>(n)};
}

FourierBasis::FourierBasis(std::size_t samples, int max_frequency)
    : samples_(samples), max_frequency_(max_frequency) {
  if (samples == 0 || max_frequency < 0) {
    throw std::invalid_argument("FourierBasis needs samples > 0 and max_frequency >= 0");
  }
  const auto rows = static_cast<std::size_t>(max_frequency) + 1;
  cos_.resize(rows * samples);
  sin_.resize(rows * samples);
  const auto n = static_cast<long long>(samples);
  for (std::size_t q = 0; q < rows; ++q) {
    for (std::size_t s = 0; s < samples; ++s) {
      const long long k = (static_cast<long long>(q) * static_cast<long long>(s)) % n;
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      cos_[q * samples + s] = std::cos(phase);
      sin_[q * samples + s] = std::sin(phase);
    }
  }
}

std::complex<double> FourierBasis::coefficient(std::span<const double> values, int q) const {
  if (values.size() != samples_) {
    throw DimensionError("FourierBasis sample count mismatch");
  }
  if (q < 0 || q > max_frequency_) {
    throw std::out_of_range("FourierBasis frequency out of range");
  }
  const std::span<const double> c(cos_.data() + static_cast<std::size_t>(q) * samples_, samples_);
  const std::span<const double> s(sin_.data() + static_cast<std::size_t>(q) * samples_, samples_);
  const double inv = 1.0 / static_cast<double>(samples_);
  return {simd::dot(values, c) * inv, -simd::dot(values, s) * inv};
}

}  // namespace superres
