#include "superres/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "superres/errors.hpp"

namespace superres {

SourceGeometry::SourceGeometry(std::vector<int> gaps, double lattice_constant_m)
    : gaps_(std::move(gaps)), lattice_constant_(lattice_constant_m) {
  for (int gap : gaps_) {
    if (gap < 1) {
      throw GeometryError("source gap must be a positive integer, got " + std::to_string(gap));
    }
  }
  if (lattice_constant_ < 0.0) {
    throw GeometryError("lattice constant must be non-negative");
  }
  span_ = std::accumulate(gaps_.begin(), gaps_.end(), 0);
}

PhasePrefactors phase_prefactors(const SourceGeometry& g) {
  PhasePrefactors alpha;
  alpha.reserve(g.source_count());
  alpha.push_back(0);
  for (int gap : g.gaps()) {
    alpha.push_back(alpha.back() + gap);
  }
  return alpha;
}

FrequencyMultiset pair_distances(const SourceGeometry& g) {
  if (g.source_count() < 2) {
    throw GeometryError("pair distances need at least two sources");
  }
  const auto alpha = phase_prefactors(g);
  FrequencyMultiset counts;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t j = i + 1; j < alpha.size(); ++j) {
      ++counts[alpha[j] - alpha[i]];
    }
  }
  return counts;
}

FrequencySet distinct_frequencies(const SourceGeometry& g) {
  FrequencySet freqs;
  for (const auto& [f, count] : pair_distances(g)) {
    freqs.insert(f);
  }
  return freqs;
}

SourceGeometry reflect(const SourceGeometry& g) {
  std::vector<int> reversed(g.gaps().rbegin(), g.gaps().rend());
  return SourceGeometry(std::move(reversed), g.lattice_constant());
}

SourceGeometry canonical(const SourceGeometry& g) {
  auto mirrored = reflect(g);
  return mirrored.gaps() < g.gaps() ? mirrored : g;
}

SourceGeometry geometry_from_positions(std::span<const int> positions, double lattice_constant_m) {
  if (positions.empty()) {
    throw GeometryError("geometry needs at least one position");
  }
  std::vector<int> gaps;
  gaps.reserve(positions.size() - 1);
  for (std::size_t i = 1; i < positions.size(); ++i) {
    gaps.push_back(positions[i] - positions[i - 1]);
  }
  return SourceGeometry(std::move(gaps), lattice_constant_m);
}

std::vector<SourceGeometry> enumerate_geometries(std::size_t sources, int max_gap) {
  if (sources == 0) {
    throw GeometryError("source count must be positive");
  }
  std::vector<SourceGeometry> out;
  std::vector<int> gaps(sources - 1, 1);
  while (true) {
    out.emplace_back(gaps);
    // odometer increment
    std::size_t i = 0;
    for (; i < gaps.size(); ++i) {
      if (gaps[i] < max_gap) {
        ++gaps[i];
        break;
      }
      gaps[i] = 1;
    }
    if (i == gaps.size()) {
      break;
    }
  }
  return out;
}

}  // namespace superres
