#include "superres/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "superres/errors.hpp"

namespace superres {

std::string_view to_string(Presence p) noexcept {
  switch (p) {
    case Presence::present:
      return "present";
    case Presence::absent:
      return "absent";
    case Presence::unknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<Presence> presence_from_string(std::string_view text) noexcept {
  for (auto p : {Presence::present, Presence::absent, Presence::unknown}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

Presence EvidenceTable::status(int f) const {
  if (f >= 1 && f <= static_cast<int>(rows.size())) {
    return rows[static_cast<std::size_t>(f - 1)].status;
  }
  for (int m : orders_measured) {
    if (f % (m - 1) == 0) return Presence::absent;
  }
  return Presence::unknown;
}

std::set<int> EvidenceTable::with_status(Presence p) const {
  std::set<int> out;
  for (const auto& row : rows) {
    if (row.status == p) out.insert(row.frequency);
  }
  return out;
}

bool EvidenceTable::has_conflicts() const {
  return std::any_of(rows.begin(), rows.end(), [](const EvidenceRow& r) { return r.conflict; });
}

EvidenceTable EvidenceTable::from_sets(const std::set<int>& present, const std::set<int>& absent) {
  EvidenceTable t;
  t.span_hint = present.empty() ? 0 : *present.rbegin();
  for (int f = 1; f <= t.span_hint; ++f) {
    EvidenceRow row;
    row.frequency = f;
    if (present.contains(f)) {
      row.status = Presence::present;
      row.conflict = absent.contains(f);
    } else if (absent.contains(f)) {
      row.status = Presence::absent;
    }
    t.rows.push_back(row);
  }
  return t;
}

EvidenceTable aggregate(std::span<const ModulationSpectrum> gated) {
  EvidenceTable t;
  for (const auto& spec : gated) {
    if (spec.order < 3) {
      throw OrderError("evidence needs orders >= 3, got " + std::to_string(spec.order));
    }
    if (std::find(t.orders_measured.begin(), t.orders_measured.end(), spec.order) !=
        t.orders_measured.end()) {
      throw OrderError("order " + std::to_string(spec.order) + " appears twice");
    }
    t.orders_measured.push_back(spec.order);
  }
  std::sort(t.orders_measured.begin(), t.orders_measured.end());

  std::vector<const ModulationSpectrum*> by_order;
  for (const auto& spec : gated) by_order.push_back(&spec);
  std::sort(by_order.begin(), by_order.end(),
            [](const auto* a, const auto* b) { return a->order < b->order; });

  for (const auto* spec : by_order) {
    for (const auto& h : spec->harmonics) {
      const int f = static_cast<int>(std::lround(h.frequency));
      if (f % (spec->order - 1) != 0) {
        t.off_lattice.emplace_back(spec->order, f);
      } else {
        t.span_hint = std::max(t.span_hint, f);
      }
    }
  }

  for (int f = 1; f <= t.span_hint; ++f) {
    EvidenceRow row;
    row.frequency = f;
    for (const auto* spec : by_order) {
      const int m = spec->order;
      if (f % (m - 1) != 0) continue;
      const Harmonic* h = spec->find_frequency(f);
      if (h != nullptr) {
        if (row.present_orders.empty()) {
          row.amplitude = h->amplitude;
          row.sigma_amplitude = h->sigma_amplitude;
        }
        row.present_orders.push_back(m);
      } else {
        row.absent_orders.push_back(m);
      }
    }
    if (!row.present_orders.empty()) {
      row.status = Presence::present;
      row.conflict = !row.absent_orders.empty();
    } else if (!row.absent_orders.empty()) {
      row.status = Presence::absent;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace superres
