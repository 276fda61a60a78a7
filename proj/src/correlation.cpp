#include "superres/correlation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "superres/errors.hpp"
#include "superres/fourier.hpp"
#include "superres/parallel.hpp"

namespace superres {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> resolve_weights(const SourceGeometry& g, std::span<const double> weights) {
  const std::size_t n = g.source_count();
  if (weights.empty()) {
    return std::vector<double>(n, 1.0);
  }
  if (weights.size() != n) {
    throw DimensionError("expected " + std::to_string(n) + " source weights, got " +
                         std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw DimensionError("source weights must be positive");
    }
  }
  return {weights.begin(), weights.end()};
}

void require_order(int order, int minimum) {
  if (order < minimum) {
    throw OrderError("correlation order must be >= " + std::to_string(minimum) + ", got " +
                     std::to_string(order));
  }
}

}  // namespace

ScanGrid ScanGrid::periodic(std::size_t count) { return {0.0, kTwoPi, count, false}; }

std::vector<double> ScanGrid::points() const {
  if (count == 0) {
    return {};
  }
  if (count == 1) {
    return {start};
  }
  const double divisor = include_stop ? static_cast<double>(count - 1) : static_cast<double>(count);
  const double pitch = (stop - start) / divisor;
  std::vector<double> pts(count);
  for (std::size_t s = 0; s < count; ++s) {
    pts[s] = start + pitch * static_cast<double>(s);
  }
  return pts;
}

DetectorArray DetectorArray::at_magic_positions(int order, ScanGrid scan) {
  return {order, magic_positions(order), scan};
}

void DetectorArray::validate() const {
  require_order(order, 2);
  if (fixed_deltas.size() != static_cast<std::size_t>(order - 1)) {
    throw DimensionError("detector array of order " + std::to_string(order) + " needs " +
                         std::to_string(order - 1) + " fixed phases");
  }
  if (scan.count == 0) {
    throw DimensionError("scan grid is empty");
  }
  if (scan.count > 1 && !(scan.stop > scan.start)) {
    throw DimensionError("scan grid must be strictly increasing");
  }
}

std::vector<double> magic_positions(int order) {
  require_order(order, 2);
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(order - 1));
  for (int j = 2; j <= order; ++j) {
    deltas.push_back(kTwoPi * (j - 2) / (order - 1));
  }
  return deltas;
}

ComplexMatrix coherence_matrix(const SourceGeometry& g, std::span<const double> deltas,
                               std::span<const double> weights) {
  const auto w = resolve_weights(g, weights);
  const auto alpha = phase_prefactors(g);
  const std::size_t m = deltas.size();
  const std::size_t n = alpha.size();

  // u[j][l] = exp(i alpha_l delta_j); J_jk = sum_l w_l conj(u_jl) u_kl
  std::vector<complex> u(m * n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      u[j * n + l] = std::polar(1.0, alpha[l] * deltas[j]);
    }
  }
  ComplexMatrix coherence(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      complex sum{};
      for (std::size_t l = 0; l < n; ++l) {
        sum += w[l] * std::conj(u[j * n + l]) * u[k * n + l];
      }
      coherence(j, k) = sum;
    }
  }
  return coherence;
}

std::complex<double> g_m_point(const SourceGeometry& g, std::span<const double> deltas,
                               std::span<const double> weights, const EngineOptions& options) {
  const auto coherence = coherence_matrix(g, deltas, weights);
  const auto numerator = permanent(coherence, options.permanent_cap);
  double denominator = 1.0;
  for (std::size_t j = 0; j < coherence.size(); ++j) {
    denominator *= coherence(j, j).real();
  }
  return numerator / denominator;
}

CorrelationCurve g_m_analytic(const SourceGeometry& g, const DetectorArray& detectors,
                              std::span<const double> weights, const EngineOptions& options) {
  detectors.validate();
  const auto w = resolve_weights(g, weights);
  CorrelationCurve curve;
  curve.order = detectors.order;
  curve.fixed_deltas = detectors.fixed_deltas;
  curve.delta1 = detectors.scan.points();
  curve.values.resize(curve.delta1.size());

  parallel_for(curve.delta1.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> deltas(static_cast<std::size_t>(detectors.order));
    std::copy(detectors.fixed_deltas.begin(), detectors.fixed_deltas.end(), deltas.begin() + 1);
    for (std::size_t s = begin; s < end; ++s) {
      deltas[0] = curve.delta1[s];
      curve.values[s] = g_m_point(g, deltas, w, options).real();
    }
  });
  return curve;
}

FrequencySet surviving_frequencies(const SourceGeometry& g, int order) {
  require_order(order, 3);
  FrequencySet out;
  if (g.source_count() < 2) {
    return out;
  }
  for (int f : distinct_frequencies(g)) {
    if (f % (order - 1) == 0) {
      out.insert(f);
    }
  }
  return out;
}

namespace {

// Amplitudes at `report` (frequency -> kappa) plus the largest amplitude at
// any other nonzero integer frequency below Nyquist.
ModulationSpectrum spectrum_from_periodic_curve(const CorrelationCurve& curve,
                                                const std::vector<std::pair<int, int>>& report) {
  const std::size_t samples = curve.values.size();
  const int nyquist = static_cast<int>((samples - 1) / 2);
  const FourierBasis basis(samples, nyquist);

  ModulationSpectrum spectrum;
  spectrum.order = curve.order;
  spectrum.kind = FitKind::fourier;
  spectrum.offset = basis.coefficient(curve.values, 0).real();

  std::vector<bool> reported(static_cast<std::size_t>(nyquist) + 1, false);
  for (const auto& [f, kappa] : report) {
    const double amplitude = 2.0 * std::abs(basis.coefficient(curve.values, f));
    spectrum.harmonics.push_back({kappa, static_cast<double>(f), 0.0, amplitude, 0.0});
    reported[static_cast<std::size_t>(f)] = true;
  }
  for (int q = 1; q <= nyquist; ++q) {
    if (!reported[static_cast<std::size_t>(q)]) {
      spectrum.leakage =
          std::max(spectrum.leakage, 2.0 * std::abs(basis.coefficient(curve.values, q)));
    }
  }
  return spectrum;
}

}  // namespace

ModulationSpectrum predicted_spectrum(const SourceGeometry& g, int order, std::size_t samples,
                                      std::span<const double> weights,
                                      const EngineOptions& options) {
  require_order(order, 3);
  const std::size_t needed = 4 * (static_cast<std::size_t>(g.span()) + 1);
  if (samples < needed) {
    throw AliasingError("predicted spectrum needs at least " + std::to_string(needed) +
                        " samples for span " + std::to_string(g.span()) + ", got " +
                        std::to_string(samples));
  }
  const auto detectors = DetectorArray::at_magic_positions(order, ScanGrid::periodic(samples));
  const auto curve = g_m_analytic(g, detectors, weights, options);

  std::vector<std::pair<int, int>> report;
  for (int f : surviving_frequencies(g, order)) {
    report.emplace_back(f, f / (order - 1));
  }
  return spectrum_from_periodic_curve(curve, report);
}

ModulationSpectrum regular_array_reference(std::size_t sources, int order, std::size_t samples,
                                           const EngineOptions& options) {
  require_order(order, 2);
  if (sources < 2) {
    throw GeometryError("regular array reference needs at least two sources");
  }
  const SourceGeometry g(std::vector<int>(sources - 1, 1));
  const std::size_t needed = 4 * (static_cast<std::size_t>(g.span()) + 1);
  if (samples < needed) {
    throw AliasingError("regular array reference needs at least " + std::to_string(needed) +
                        " samples");
  }
  DetectorArray detectors{order, std::vector<double>(static_cast<std::size_t>(order - 1), 0.0),
                          ScanGrid::periodic(samples)};
  const auto curve = g_m_analytic(g, detectors, {}, options);

  std::vector<std::pair<int, int>> report;
  for (int l = 1; l < static_cast<int>(sources); ++l) {
    report.emplace_back(l, l);
  }
  return spectrum_from_periodic_curve(curve, report);
}

std::complex<double> roots_of_unity_sum(long long lambda, int order) {
  require_order(order, 2);
  const long long period = order - 1;
  std::complex<double> sum{};
  for (long long j = 0; j < period; ++j) {
    const long long k = (((lambda % period) * j) % period + period) % period;
    sum += std::polar(1.0, kTwoPi * static_cast<double>(k) / static_cast<double>(period));
  }
  return sum;
}

}  // namespace superres
