#pragma once

// Source geometries from tri-state frequency evidence, amplitude-based
// ranking of the survivors, and detector aperture ratios.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "superres/evidence.hpp"
#include "superres/geometry.hpp"
#include "superres/spectrum.hpp"

namespace superres {

struct SearchBounds {
  std::size_t max_sources = 6;
  /// At most 62 (positions are held in a 64-bit mask).
  int max_span = 20;
  /// Also try spans beyond the largest Present frequency whose status is
  /// Unknown. Such searches are never exhaustive.
  bool allow_unknown_span = false;

  bool operator==(const SearchBounds&) const = default;
};

struct Candidate {
  SourceGeometry geometry;  // canonical
  double score = 0.0;       // chi-square, 0 until disambiguated
  std::map<int, double> chi2_by_order;
  /// Score within one unit of the best; reported as a joint winner.
  bool joint_best = false;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  EvidenceTable evidence;
  /// False when a span or source-count bound cut part of the search.
  bool exhaustive = true;
};

/// Every position set {0 = p_1 < ... < p_N = span} whose pair distances
/// contain all Present frequencies and no Absent one. Candidates are
/// canonical, unique and sorted. Throws EmptyEvidenceError without Present
/// frequencies and BoundsError for max_span outside 1..62.
CandidateSet search(const EvidenceTable& evidence, const SearchBounds& bounds = {});

/// Same contract by plain subset enumeration. Throws BoundsError when a
/// span above 12 or more than 6 sources would be needed.
CandidateSet oracle_search(const EvidenceTable& evidence, const SearchBounds& bounds = {});

/// Ranks candidates by chi-square between measured and predicted A_k/A_0
/// over the on-lattice harmonics of every measured spectrum, ascending.
/// Harmonics without a positive sigma are skipped; DegenerateError when
/// none is left.
CandidateSet disambiguate(CandidateSet candidates, std::span<const ModulationSpectrum> measured);

struct ApertureReport {
  int order = 0;
  double r_moving = 0.0;
  double r_total = 0.0;
  double moving_span = 0.0;  // delta range of the scanned detector
  double fixed_span = 0.0;   // delta range of the fixed detectors
};

/// Throws OrderError for m < 2.
ApertureReport aperture_report(int order);

struct ReconstructionReport {
  CandidateSet result;
  std::vector<ApertureReport> apertures;  // one per measured order
  /// False when the amplitudes could not weight a ranking.
  bool ranked = false;
  std::string note;
};

/// lambda / (2 A).
double abbe_limit(double wavelength_m, double numerical_aperture);

}  // namespace superres
