#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "superres/correlation.hpp"
#include "superres/errors.hpp"
#include "superres/evidence.hpp"
#include "superres/fitting.hpp"
#include "superres/speckle.hpp"

using namespace superres;

namespace {

constexpr double kPi = std::numbers::pi;

CorrelationCurve analytic(const SourceGeometry& g, int m, std::size_t samples = 256) {
  return g_m_analytic(g, DetectorArray::at_magic_positions(m, ScanGrid::periodic(samples)));
}

CorrelationCurve synthetic(std::size_t n, double noise, std::mt19937_64& rng,
                           const std::function<double(double)>& f) {
  CorrelationCurve c;
  c.delta1 = ScanGrid::periodic(n).points();
  std::normal_distribution<double> gauss(0.0, noise);
  for (double d : c.delta1) c.values.push_back(f(d) + (noise > 0.0 ? gauss(rng) : 0.0));
  if (noise > 0.0) c.sigma.assign(n, noise);
  return c;
}

std::set<int> accepted(const ModulationSpectrum& s) {
  std::set<int> out;
  for (const auto& h : s.harmonics) out.insert(static_cast<int>(h.frequency));
  return out;
}

SpeckleRun run_for(SourceGeometry g, std::size_t frames, std::size_t pixels, std::uint64_t seed) {
  SpeckleRun run;
  run.geometry = std::move(g);
  run.frames = frames;
  run.pixels = ScanGrid::periodic(pixels);
  run.seed = seed;
  return run;
}

}  // namespace

TEST_CASE("fit_fixed reproduces the analytic spectrum of (3,1,4) at m = 5") {
  const SourceGeometry g{3, 1, 4};
  const auto spec = fit_fixed(analytic(g, 5), 5);
  const auto predicted = predicted_spectrum(g, 5, 256);
  CHECK(spec.kind == FitKind::fixed_frequency);
  CHECK(spec.offset == doctest::Approx(predicted.offset).epsilon(1e-10));
  REQUIRE(spec.harmonics.size() == 5);  // kappa 1..20/4
  for (const auto& h : spec.harmonics) {
    CHECK(h.frequency == 4.0 * h.kappa);
    CHECK(h.sigma_frequency == 0.0);
    const Harmonic* p = predicted.find_frequency(static_cast<int>(h.frequency));
    const double expected = p ? p->amplitude : 0.0;
    CHECK(std::abs(h.amplitude - expected) < 1e-8);
  }
}

TEST_CASE("fit_fixed agrees with the analytic engine across geometries") {
  for (std::size_t n = 2; n <= 4; ++n) {
    for (const auto& g : enumerate_geometries(n, 3)) {
      for (int m = 3; m <= 6; ++m) {
        const auto spec = fit_fixed(analytic(g, m), m);
        const auto predicted = predicted_spectrum(g, m, 256);
        for (const auto& h : spec.harmonics) {
          const Harmonic* p = predicted.find_frequency(static_cast<int>(h.frequency));
          REQUIRE(std::abs(h.amplitude - (p ? p->amplitude : 0.0)) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("fit_fixed on flat curves") {
  SUBCASE("exactly constant") {
    const auto spec = fit_fixed(analytic(SourceGeometry{1, 3}, 6), 6);
    for (const auto& h : spec.harmonics) CHECK(h.amplitude < 1e-12);
  }
  SUBCASE("constant plus noise: amplitudes consistent with zero at the Rayleigh rate") {
    // |A| of a pure-noise harmonic is Rayleigh in units of sigma_A, so
    // P(A < 2 sigma_A) = 1 - exp(-2) = 0.865
    std::mt19937_64 rng(3);
    std::size_t inside = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto c = synthetic(128, 0.02, rng, [](double) { return 5.0; });
      const auto spec = fit_fixed(c, 6);
      for (const auto& h : spec.harmonics) {
        if (h.amplitude < 2.0 * h.sigma_amplitude) ++inside;
        ++total;
      }
    }
    const double rate = static_cast<double>(inside) / static_cast<double>(total);
    CHECK(rate == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(0.05));
  }
}

TEST_CASE("fit_fixed recovers a synthetic modulation") {
  std::mt19937_64 rng(8);
  const auto c = synthetic(512, 0.01, rng, [](double d) { return 1.0 + 0.4 * std::cos(4.0 * d); });
  const auto spec = fit_fixed(c, 5);
  const Harmonic* h = spec.find_frequency(4);
  REQUIRE(h != nullptr);
  CHECK(h->kappa == 1);
  CHECK(std::abs(h->amplitude - 0.4) < 0.01);
  CHECK(h->sigma_amplitude > 0.0);
  CHECK(h->sigma_amplitude < 0.01);
}

TEST_CASE("fit preconditions") {
  CorrelationCurve tiny;
  tiny.delta1 = ScanGrid::periodic(4).points();
  tiny.values = {1, 2, 3, 4};
  CHECK_THROWS_AS(fit_fixed(tiny, 3), FitError);

  CorrelationCurve narrow;
  narrow.delta1 = ScanGrid{0.0, 1.0, 64, true}.points();
  narrow.values.assign(64, 1.0);
  CHECK_THROWS_AS(fit_fixed(narrow, 3), CoverageError);
  CHECK_THROWS_AS(fit_free(narrow, 3), CoverageError);
  // one fundamental period is enough at m = 7
  narrow.delta1 = ScanGrid{0.0, 2.0 * kPi / 6.0, 64, false}.points();
  CHECK_NOTHROW(fit_fixed(narrow, 7, {.span_bound = 12}));

  auto mismatched = analytic(SourceGeometry{1}, 3);
  CHECK_THROWS_AS(fit_fixed(mismatched, 4), OrderError);
}

TEST_CASE("fit_free resolves non-integer frequencies on clean data") {
  std::mt19937_64 rng(1);
  const auto c = synthetic(400, 0.0, rng, [](double d) {
    return 2.0 + 0.3 * std::cos(2.3 * (d - kPi) + 0.4) + 0.2 * std::cos(5.0 * (d - kPi));
  });
  const auto spec = fit_free(c, 3);
  REQUIRE(spec.harmonics.size() == 2);
  CHECK(spec.harmonics[0].frequency == doctest::Approx(2.3).epsilon(1e-8));
  CHECK(spec.harmonics[0].amplitude == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(spec.harmonics[1].frequency == doctest::Approx(5.0).epsilon(1e-8));
  CHECK(spec.harmonics[1].amplitude == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(spec.offset == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(spec.residual_rms < 1e-9);
}

TEST_CASE("gate and fit_free on analytic curves recover the surviving frequencies") {
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto geometries =
        n == 1 ? std::vector<SourceGeometry>{SourceGeometry{}} : enumerate_geometries(n, 4);
    for (const auto& g : geometries) {
      for (int m = 3; m <= 6; ++m) {
        const auto spec = gate(fit_free(analytic(g, m), m));
        const auto expected = surviving_frequencies(g, m);
        REQUIRE(accepted(spec) == std::set<int>(expected.begin(), expected.end()));
        for (const auto& h : spec.harmonics) REQUIRE(h.kappa * (m - 1) == h.frequency);
        ++checked;
      }
    }
  }
  CHECK(checked == 85 * 4);
}

TEST_CASE("fit_free on simulated curves") {
  SUBCASE("x = (1,3), m = 3 lands on f = 4") {
    const std::vector<int> orders{3};
    const auto curve =
        simulate_curves(run_for(SourceGeometry{1, 3}, 100000, 256, 41), orders, {.seed = 41})[0];
    const auto spec = fit_free(curve, 3);
    const auto g = gate(spec);
    CHECK(accepted(g) == std::set<int>{4});
    const Harmonic* h = spec.find_frequency(4);
    REQUIRE(h != nullptr);
    CHECK(std::abs(h->frequency - 4.0) < 0.1);
  }
  SUBCASE("x = (1,3,2), m = 3 shows 2, 4 and 6") {
    const std::vector<int> orders{3};
    const auto curve =
        simulate_curves(run_for(SourceGeometry{1, 3, 2}, 100000, 256, 42), orders, {.seed = 42})[0];
    CHECK(accepted(gate(fit_free(curve, 3))) == std::set<int>{2, 4, 6});
  }
  SUBCASE("a component sliding onto another is merged, not a failure") {
    // at this seed the fourth peak walks onto f ~ 2.07 during refinement
    const std::vector<int> orders{3};
    const auto curve =
        simulate_curves(run_for(SourceGeometry{1, 3, 2}, 1000, 512, 3001), orders, {.seed = 3001})[0];
    ModulationSpectrum spec;
    REQUIRE_NOTHROW(spec = fit_free(curve, 3));
    for (std::size_t i = 1; i < spec.harmonics.size(); ++i) {
      CHECK(spec.harmonics[i].frequency - spec.harmonics[i - 1].frequency >= 0.5);
    }
    for (const auto& h : spec.harmonics) CHECK(h.amplitude < 10.0 * std::abs(spec.offset));
  }
}

TEST_CASE("gate decisions") {
  ModulationSpectrum s;
  s.order = 4;
  s.offset = 1.0;
  s.kind = FitKind::free_frequency;
  s.harmonics = {
      {0, 3.90, 0.31, 1.05, 0.66},   // broad frequency
      {0, 2.93, 0.03, 0.51, 0.19},   // accepted as 3
      {0, 4.00, 0.005, 1e-4, 1e-4},  // amplitude consistent with zero
      {0, 5.40, 0.01, 0.5, 0.01},    // off-integer
  };
  const auto d = gate_decisions(s);
  REQUIRE(d.size() == 4);
  CHECK_FALSE(d[0].accepted);
  CHECK(d[1].accepted);
  CHECK(d[1].frequency == 3);
  CHECK_FALSE(d[2].accepted);
  CHECK_FALSE(d[3].accepted);
  CHECK_FALSE(d[0].reason.empty());

  const auto g = gate(s);
  REQUIRE(g.harmonics.size() == 1);
  CHECK(g.harmonics[0].frequency == 3.0);
  CHECK(g.harmonics[0].kappa == 1);

  s.order = 3;  // 3 is not on the m-1 = 2 lattice
  CHECK(gate(s).harmonics.at(0).kappa == 0);

  GatePolicy strict;
  strict.k_amplitude = 3.0;
  s.order = 4;
  CHECK(gate(s, strict).harmonics.empty());
}

TEST_CASE("calibrate_d") {
  const double lambda = 632.8e-9;
  const double d = 570e-6;
  const double spacing = lambda / (2.0 * d);
  const std::vector<std::pair<double, double>> one{{0.1 + spacing, 0.1}};
  CHECK(calibrate_d(one, lambda, 3) == doctest::Approx(d).epsilon(1e-12));

  const std::vector<std::pair<double, double>> same(4, one.front());
  CHECK(calibrate_d(same, lambda, 3) == doctest::Approx(calibrate_d(one, lambda, 3)).epsilon(1e-15));

  const std::vector<std::pair<double, double>> perturbed{{spacing * 1.01, 0.0}, {spacing * 0.99, 0.0}};
  CHECK(std::abs(calibrate_d(perturbed, lambda, 3) / d - 1.0) < 0.01);

  const std::vector<std::pair<double, double>> zero{{0.2, 0.2}};
  CHECK_THROWS_AS(calibrate_d(zero, lambda, 3), DegenerateError);
  CHECK_THROWS_AS(calibrate_d({}, lambda, 3), DegenerateError);
}

TEST_CASE("aggregate over analytic spectra") {
  const SourceGeometry g{3, 1, 4};
  auto gated = [&](int m) { return gate(fit_free(analytic(g, m), m)); };

  SUBCASE("orders 3..9") {
    std::vector<ModulationSpectrum> specs;
    for (int m = 3; m <= 9; ++m) specs.push_back(gated(m));
    const auto t = aggregate(specs);
    CHECK(t.span_hint == 8);
    CHECK(t.with_status(Presence::present) == std::set<int>{3, 4, 5, 8});
    CHECK(t.with_status(Presence::absent) == std::set<int>{2, 6, 7});
    CHECK(t.with_status(Presence::unknown) == std::set<int>{1});
    CHECK_FALSE(t.has_conflicts());
    CHECK(t.orders_measured == std::vector<int>{3, 4, 5, 6, 7, 8, 9});
  }
  SUBCASE("order 3 only") {
    const std::vector<ModulationSpectrum> specs{gated(3)};
    const auto t = aggregate(specs);
    CHECK(t.with_status(Presence::present) == std::set<int>{4, 8});
    CHECK(t.with_status(Presence::absent) == std::set<int>{2, 6});
    CHECK(t.with_status(Presence::unknown) == std::set<int>{1, 3, 5, 7});
    CHECK(t.status(9) == Presence::unknown);
    CHECK(t.status(10) == Presence::absent);
  }
  SUBCASE("no spectra") {
    const auto t = aggregate({});
    CHECK(t.span_hint == 0);
    CHECK(t.rows.empty());
    CHECK(t.status(1) == Presence::unknown);
  }
  SUBCASE("repeated order") {
    const std::vector<ModulationSpectrum> specs{gated(3), gated(3)};
    CHECK_THROWS_AS(aggregate(specs), OrderError);
  }
}

TEST_CASE("aggregate flags conflicts and off-lattice harmonics") {
  ModulationSpectrum m3{.order = 3, .offset = 1.0};
  m3.harmonics = {{2, 4.0, 0.0, 0.5, 0.05}, {0, 3.0, 0.0, 0.2, 0.02}};
  ModulationSpectrum m5{.order = 5, .offset = 1.0};
  const std::vector<ModulationSpectrum> specs{m3, m5};
  const auto t = aggregate(specs);
  CHECK(t.status(4) == Presence::present);
  CHECK(t.rows[3].conflict);
  CHECK(t.rows[3].present_orders == std::vector<int>{3});
  CHECK(t.rows[3].absent_orders == std::vector<int>{5});
  CHECK(t.off_lattice == std::vector<std::pair<int, int>>{{3, 3}});
  CHECK(t.status(3) == Presence::unknown);
}

TEST_CASE("adding an order never turns Present into Absent") {
  std::mt19937_64 rng(17);
  for (const auto& g : enumerate_geometries(4, 3)) {
    std::vector<ModulationSpectrum> all;
    for (int m = 3; m <= 7; ++m) all.push_back(gate(fit_free(analytic(g, m), m)));
    std::vector<ModulationSpectrum> growing;
    EvidenceTable before;
    std::shuffle(all.begin(), all.end(), rng);
    for (const auto& spec : all) {
      growing.push_back(spec);
      const auto after = aggregate(growing);
      for (int f : before.with_status(Presence::present)) {
        REQUIRE(after.status(f) == Presence::present);
      }
      before = after;
    }
  }
}
