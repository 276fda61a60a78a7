#include "superres/reconstruction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <unordered_set>

#include "superres/correlation.hpp"
#include "superres/errors.hpp"

namespace superres {

namespace {

using Mask = std::uint64_t;

constexpr Mask bit(int i) { return Mask{1} << i; }

/// Span candidates: the largest Present frequency, plus Unknown values up
/// to the bound when asked for.
std::vector<int> spans_for(const EvidenceTable& ev, const SearchBounds& bounds, bool& truncated) {
  const auto present = ev.with_status(Presence::present);
  if (present.empty()) {
    throw EmptyEvidenceError("evidence has no Present frequency to reconstruct from");
  }
  const int top = *present.rbegin();
  std::vector<int> spans;
  if (top > bounds.max_span) {
    truncated = true;
    return spans;
  }
  spans.push_back(top);
  if (bounds.allow_unknown_span) {
    // Unknown spans are unbounded in principle; never claim exhaustiveness
    truncated = true;
    for (int s = top + 1; s <= bounds.max_span; ++s) {
      if (ev.status(s) == Presence::unknown) spans.push_back(s);
    }
  }
  return spans;
}

struct Constraints {
  int span = 0;
  Mask present = 0;  // bit d: distance d must occur
  Mask absent = 0;   // bit d: distance d must not occur
};

Constraints constraints_for(const EvidenceTable& ev, int span) {
  Constraints c;
  c.span = span;
  for (int d = 1; d <= span; ++d) {
    const Presence p = ev.status(d);
    if (p == Presence::present) c.present |= bit(d);
    if (p == Presence::absent) c.absent |= bit(d);
  }
  return c;
}

Mask distances(Mask positions) {
  Mask out = 0;
  for (Mask a = positions; a; a &= a - 1) {
    const int i = std::countr_zero(a);
    for (Mask b = a & (a - 1); b; b &= b - 1) out |= bit(std::countr_zero(b) - i);
  }
  return out;
}

/// Distances a new point p adds to `positions`.
Mask added_distances(Mask positions, int p) {
  Mask out = 0;
  for (Mask a = positions; a; a &= a - 1) out |= bit(std::abs(std::countr_zero(a) - p));
  return out;
}

SourceGeometry geometry_of(Mask positions) {
  std::vector<int> pos;
  for (Mask a = positions; a; a &= a - 1) pos.push_back(std::countr_zero(a));
  return canonical(geometry_from_positions(pos));
}

/// Backtracking: explain the largest unexplained Present distance by each
/// pair that could carry it, then grow complete sets by any point that adds
/// no Absent distance. Subtrees depend on the position mask only, so each
/// mask is expanded once.
class Backtracker {
 public:
  Backtracker(const Constraints& c, std::size_t max_sources) : c_(c), max_(max_sources) {}

  void run() {
    const Mask start = bit(0) | bit(c_.span);
    if (c_.absent & bit(c_.span)) return;
    if (std::cmp_greater(std::popcount(start), max_)) {
      truncated_ = true;
      return;
    }
    visit(start, distances(start));
  }

  const std::set<Mask>& found() const { return found_; }
  bool truncated() const { return truncated_; }

 private:
  void visit(Mask pos, Mask dist) {
    if (!seen_.insert(pos).second) return;
    const Mask missing = c_.present & ~dist;
    if (missing == 0) {
      found_.insert(pos);
      for (int p = 1; p < c_.span; ++p) {
        if (!(pos & bit(p))) grow(pos, dist, p);
      }
      return;
    }
    const int f = 63 - std::countl_zero(missing);
    for (int a = 0; a + f <= c_.span; ++a) {
      Mask next = pos;
      Mask next_dist = dist;
      bool ok = true;
      for (int p : {a, a + f}) {
        if (next & bit(p)) continue;
        const Mask add = added_distances(next, p);
        if (add & c_.absent) {
          ok = false;
          break;
        }
        next |= bit(p);
        next_dist |= add;
      }
      if (!ok || next == pos) continue;
      if (std::cmp_greater(std::popcount(next), max_)) {
        truncated_ = true;
        continue;
      }
      visit(next, next_dist);
    }
  }

  void grow(Mask pos, Mask dist, int p) {
    const Mask add = added_distances(pos, p);
    if (add & c_.absent) return;
    if (std::cmp_greater(std::popcount(pos) + 1, max_)) {
      truncated_ = true;
      return;
    }
    visit(pos | bit(p), dist | add);
  }

  Constraints c_;
  std::size_t max_;
  std::unordered_set<Mask> seen_;
  std::set<Mask> found_;
  bool truncated_ = false;
};

CandidateSet assemble(const EvidenceTable& ev, const std::set<Mask>& found, bool truncated) {
  std::set<SourceGeometry> unique;
  for (Mask m : found) unique.insert(geometry_of(m));
  CandidateSet out;
  out.evidence = ev;
  out.exhaustive = !truncated;
  for (const auto& g : unique) out.candidates.push_back({g, 0.0, {}, false});
  return out;
}

}  // namespace

CandidateSet search(const EvidenceTable& evidence, const SearchBounds& bounds) {
  if (bounds.max_span < 1 || bounds.max_span > 62) {
    throw BoundsError("max_span must be in 1..62, got " + std::to_string(bounds.max_span));
  }
  bool truncated = false;
  std::set<Mask> found;
  for (int span : spans_for(evidence, bounds, truncated)) {
    Backtracker bt(constraints_for(evidence, span), bounds.max_sources);
    bt.run();
    found.insert(bt.found().begin(), bt.found().end());
    truncated |= bt.truncated();
  }
  return assemble(evidence, found, truncated);
}

CandidateSet oracle_search(const EvidenceTable& evidence, const SearchBounds& bounds) {
  if (bounds.max_sources > 6) {
    throw BoundsError("oracle_search handles at most 6 sources");
  }
  bool truncated = false;
  std::set<Mask> found;
  for (int span : spans_for(evidence, bounds, truncated)) {
    if (span > 12) {
      throw BoundsError("oracle_search handles spans up to 12, got " + std::to_string(span));
    }
    const Constraints c = constraints_for(evidence, span);
    for (Mask inner = 0; inner < bit(span - 1); ++inner) {
      const Mask pos = bit(0) | (inner << 1) | bit(span);
      if (std::cmp_greater(std::popcount(pos), bounds.max_sources)) continue;
      const Mask d = distances(pos);
      if ((d & c.present) == c.present && !(d & c.absent)) found.insert(pos);
    }
  }
  return assemble(evidence, found, truncated);
}

CandidateSet disambiguate(CandidateSet cs, std::span<const ModulationSpectrum> measured) {
  std::size_t terms = 0;
  for (auto& cand : cs.candidates) {
    cand.score = 0.0;
    cand.chi2_by_order.clear();
    const auto samples = static_cast<std::size_t>(8 * (cand.geometry.span() + 1));
    for (const auto& spec : measured) {
      if (spec.offset == 0.0) continue;
      const ModulationSpectrum pred = predicted_spectrum(cand.geometry, spec.order, samples);
      double chi2 = 0.0;
      for (const auto& h : spec.harmonics) {
        if (h.kappa < 1) continue;
        const double r = h.amplitude / spec.offset;
        const double rel_a = h.amplitude > 0.0 ? h.sigma_amplitude / h.amplitude : 0.0;
        const double rel_0 = spec.sigma_offset / spec.offset;
        const double sigma = std::abs(r) * std::hypot(rel_a, rel_0);
        if (!(sigma > 0.0) || !std::isfinite(sigma)) continue;
        const Harmonic* p = pred.find_frequency(static_cast<int>(std::lround(h.frequency)));
        const double r_pred = p ? p->amplitude / pred.offset : 0.0;
        chi2 += (r - r_pred) * (r - r_pred) / (sigma * sigma);
        if (&cand == &cs.candidates.front()) ++terms;
      }
      cand.chi2_by_order[spec.order] += chi2;
      cand.score += chi2;
    }
  }
  if (!cs.candidates.empty() && terms == 0) {
    throw DegenerateError("no measured harmonic with a positive sigma to weight the comparison");
  }
  std::stable_sort(cs.candidates.begin(), cs.candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score < b.score; });
  for (auto& cand : cs.candidates) {
    cand.joint_best = cand.score - cs.candidates.front().score < 1.0;
  }
  return cs;
}

ApertureReport aperture_report(int order) {
  if (order < 2) {
    throw OrderError("aperture report needs m >= 2, got " + std::to_string(order));
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  ApertureReport r;
  r.order = order;
  r.moving_span = two_pi / (order - 1);
  r.fixed_span = two_pi * (order - 2) / (order - 1);
  r.r_moving = 1.0 / (order - 1);
  // the scan window sits inside the fixed span once there is one
  r.r_total = std::max(r.moving_span, r.fixed_span) / two_pi;
  return r;
}

double abbe_limit(double wavelength_m, double numerical_aperture) {
  if (!(wavelength_m > 0.0) || !(numerical_aperture > 0.0)) {
    throw DegenerateError("wavelength and aperture must be positive");
  }
  return wavelength_m / (2.0 * numerical_aperture);
}

}  // namespace superres
