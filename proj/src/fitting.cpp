#include "superres/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "superres/errors.hpp"
#include "superres/parallel.hpp"
#include "superres/simd/kernels.hpp"

namespace superres {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) {
    return std::numeric_limits<double>::infinity();
  }
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct Component {
  double f = 0.0;
  double c = 0.0;
  double s = 0.0;
};

struct Model {
  double a0 = 0.0;
  std::vector<Component> parts;

  Eigen::VectorXd pack() const {
    Eigen::VectorXd x(1 + 3 * parts.size());
    x[0] = a0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      x[1 + 3 * i] = parts[i].f;
      x[2 + 3 * i] = parts[i].c;
      x[3 + 3 * i] = parts[i].s;
    }
    return x;
  }
  static Model unpack(const Eigen::VectorXd& x) {
    Model m;
    m.a0 = x[0];
    for (Eigen::Index i = 1; i + 2 < x.size(); i += 3) {
      m.parts.push_back({x[i], x[i + 1], x[i + 2]});
    }
    return m;
  }
};

/// Scan coordinates and weights shared by every fit of one curve.
struct Design {
  std::vector<double> u;
  std::vector<double> sqrt_w;  // all ones without usable sigma
  bool weighted = false;
};

Design make_design(const CorrelationCurve& curve, int order) {
  validate(curve);
  if (curve.order != 0 && curve.order != order) {
    throw OrderError("curve is order " + std::to_string(curve.order) + ", fit requested order " +
                     std::to_string(order));
  }
  if (order < 2) {
    throw OrderError("fits need order >= 2");
  }
  const std::size_t n = curve.size();
  if (n < 2) {
    throw FitError("a fit needs at least two samples");
  }
  const auto [lo, hi] = std::minmax_element(curve.delta1.begin(), curve.delta1.end());
  const double coverage = (*hi - *lo) * static_cast<double>(n) / static_cast<double>(n - 1);
  if (coverage < kTwoPi / (order - 1) * (1.0 - 1e-9)) {
    throw CoverageError("scan covers " + std::to_string(coverage) +
                        " rad, less than one fundamental period at m = " + std::to_string(order));
  }
  Design d;
  const double center = 0.5 * (*lo + *hi);
  d.u.resize(n);
  std::transform(curve.delta1.begin(), curve.delta1.end(), d.u.begin(),
                 [center](double x) { return x - center; });
  d.sqrt_w.assign(n, 1.0);
  if (curve.has_sigma() &&
      std::all_of(curve.sigma.begin(), curve.sigma.end(), [](double s) { return s > 0.0; })) {
    d.weighted = true;
    std::transform(curve.sigma.begin(), curve.sigma.end(), d.sqrt_w.begin(),
                   [](double s) { return 1.0 / s; });
  }
  return d;
}

double evaluate(const Model& model, double u) {
  double v = model.a0;
  for (const auto& p : model.parts) {
    v += p.c * std::cos(p.f * u) + p.s * std::sin(p.f * u);
  }
  return v;
}

struct HarmonicResiduals : Eigen::DenseFunctor<double> {
  HarmonicResiduals(const Design& design, std::span<const double> y, int parameters)
      : Eigen::DenseFunctor<double>(parameters, static_cast<int>(y.size())), d(design), y(y) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    const Model m = Model::unpack(x);
    for (std::size_t p = 0; p < y.size(); ++p) {
      fvec[static_cast<Eigen::Index>(p)] = d.sqrt_w[p] * (evaluate(m, d.u[p]) - y[p]);
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& jac) const {
    for (std::size_t p = 0; p < y.size(); ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      const double w = d.sqrt_w[p];
      const double u = d.u[p];
      jac(row, 0) = w;
      for (Eigen::Index i = 1; i + 2 < x.size(); i += 3) {
        const double cs = std::cos(x[i] * u);
        const double sn = std::sin(x[i] * u);
        jac(row, i) = w * u * (x[i + 2] * cs - x[i + 1] * sn);
        jac(row, i + 1) = w * cs;
        jac(row, i + 2) = w * sn;
      }
    }
    return 0;
  }

  const Design& d;
  std::span<const double> y;
};

struct RefineResult {
  Model model;
  bool converged = false;
  int status = 0;
  Eigen::Index evaluations = 0;
};

RefineResult refine(const Design& d, std::span<const double> y, const Model& start,
                    int max_evaluations) {
  Eigen::VectorXd x = start.pack();
  HarmonicResiduals functor(d, y, static_cast<int>(x.size()));
  Eigen::LevenbergMarquardt<HarmonicResiduals> lm(functor);
  lm.setMaxfev(max_evaluations);
  lm.setFtol(1e-14);
  lm.setXtol(1e-14);
  const auto status = lm.minimize(x);
  using S = Eigen::LevenbergMarquardtSpace::Status;
  RefineResult r;
  r.model = Model::unpack(x);
  r.status = static_cast<int>(status);
  r.evaluations = lm.nfev();
  r.converged = status != S::ImproperInputParameters && status != S::TooManyFunctionEvaluation &&
                x.allFinite();
  return r;
}

/// Weighted amplitude spectrum of a residual on a fixed frequency grid.
class Periodogram {
 public:
  Periodogram(const Design& d, double f_min, double f_max, double step) : n_(d.u.size()) {
    weights_.resize(n_);
    std::transform(d.sqrt_w.begin(), d.sqrt_w.end(), weights_.begin(),
                   [](double s) { return s * s; });
    weight_sum_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    for (double f = f_min; f <= f_max + 1e-12; f += step) {
      freqs_.push_back(f);
    }
    cos_.resize(freqs_.size() * n_);
    sin_.resize(freqs_.size() * n_);
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
      for (std::size_t p = 0; p < n_; ++p) {
        cos_[k * n_ + p] = weights_[p] * std::cos(freqs_[k] * d.u[p]);
        sin_[k * n_ + p] = weights_[p] * std::sin(freqs_[k] * d.u[p]);
      }
    }
  }

  /// Frequency (parabolically refined) and amplitude of the strongest peak
  /// at least `separation` away from every frequency in `taken`.
  std::pair<double, double> peak(std::span<const double> residual, const std::vector<double>& taken,
                                 double separation) const {
    if (freqs_.empty()) {
      return {0.0, 0.0};
    }
    std::vector<double> amp(freqs_.size(), 0.0);
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
      if (std::any_of(taken.begin(), taken.end(),
                      [&](double f) { return std::abs(f - freqs_[k]) < separation; })) {
        continue;
      }
      const double c = simd::dot({cos_.data() + k * n_, n_}, residual);
      const double s = simd::dot({sin_.data() + k * n_, n_}, residual);
      amp[k] = 2.0 * std::hypot(c, s) / weight_sum_;
    }
    const auto best = static_cast<std::size_t>(std::max_element(amp.begin(), amp.end()) - amp.begin());
    double f = freqs_[best];
    if (best > 0 && best + 1 < amp.size()) {
      const double a = amp[best - 1], b = amp[best], c = amp[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) {
        f += 0.5 * (a - c) / denom * (freqs_[1] - freqs_[0]);
      }
    }
    return {f, amp[best]};
  }

 private:
  std::size_t n_;
  std::vector<double> weights_;
  double weight_sum_ = 0.0;
  std::vector<double> freqs_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Weighted projection of the residual on one frequency, used as a start.
Component project(const Design& d, std::span<const double> r, double f) {
  double cc = 0.0, cs = 0.0, ss = 0.0, rc = 0.0, rs = 0.0;
  for (std::size_t p = 0; p < r.size(); ++p) {
    const double w = d.sqrt_w[p] * d.sqrt_w[p];
    const double c = std::cos(f * d.u[p]);
    const double s = std::sin(f * d.u[p]);
    cc += w * c * c;
    cs += w * c * s;
    ss += w * s * s;
    rc += w * r[p] * c;
    rs += w * r[p] * s;
  }
  const double det = cc * ss - cs * cs;
  if (std::abs(det) < 1e-12 * cc * ss) {
    return {f, cc > 0.0 ? rc / cc : 0.0, 0.0};
  }
  return {f, (rc * ss - rs * cs) / det, (rs * cc - rc * cs) / det};
}

/// Amplitude of the residual's projection on f, and its spread across
/// bootstrap replicates measured along the same phase direction.
std::pair<double, double> peak_significance(const Design& d, std::span<const double> y,
                                            const std::vector<std::vector<double>>& reps,
                                            const Model& model, double f) {
  std::vector<double> base(y.size()), r(y.size());
  for (std::size_t p = 0; p < y.size(); ++p) base[p] = evaluate(model, d.u[p]);
  for (std::size_t p = 0; p < y.size(); ++p) r[p] = y[p] - base[p];
  const Component point = project(d, r, f);
  const double amp = std::hypot(point.c, point.s);
  if (!(amp > 0.0)) return {0.0, 0.0};
  std::vector<double> along;
  for (const auto& rep : reps) {
    for (std::size_t p = 0; p < y.size(); ++p) r[p] = rep[p] - base[p];
    const Component c = project(d, r, f);
    if (std::isfinite(c.c) && std::isfinite(c.s)) along.push_back((c.c * point.c + c.s * point.s) / amp);
  }
  return {amp, sample_std(along)};
}

double weighted_mean(const Design& d, std::span<const double> y) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) {
    const double w = d.sqrt_w[p] * d.sqrt_w[p];
    num += w * y[p];
    den += w;
  }
  return num / den;
}

std::string describe(const Model& m, int status, Eigen::Index evaluations) {
  std::ostringstream out;
  out << "status " << status << ", evaluations " << evaluations << ", A0 " << m.a0
      << ", components [";
  for (std::size_t i = 0; i < m.parts.size(); ++i) {
    out << (i ? ", " : "") << "f=" << m.parts[i].f << " A=" << std::hypot(m.parts[i].c, m.parts[i].s);
  }
  out << "]";
  return out.str();
}

/// Merges components closer than `tolerance` and removes ones outside
/// [lo, hi]. Returns true if anything changed.
bool tidy(Model& m, double tolerance, double lo, double hi) {
  bool changed = false;
  std::erase_if(m.parts, [&](const Component& p) {
    const bool out = !(p.f >= lo && p.f <= hi);
    changed |= out;
    return out;
  });
  std::sort(m.parts.begin(), m.parts.end(),
            [](const Component& a, const Component& b) { return a.f < b.f; });
  for (std::size_t i = 1; i < m.parts.size();) {
    if (m.parts[i].f - m.parts[i - 1].f < tolerance) {
      auto& keep = m.parts[i - 1];
      const auto& drop = m.parts[i];
      const double wa = std::hypot(keep.c, keep.s);
      const double wb = std::hypot(drop.c, drop.s);
      keep.f = (wa + wb) > 0.0 ? (wa * keep.f + wb * drop.f) / (wa + wb) : keep.f;
      keep.c += drop.c;
      keep.s += drop.s;
      m.parts.erase(m.parts.begin() + static_cast<std::ptrdiff_t>(i));
      changed = true;
    } else {
      ++i;
    }
  }
  return changed;
}

double residual_rms(const Design& d, std::span<const double> y, const Model& m) {
  double ss = 0.0;
  for (std::size_t p = 0; p < y.size(); ++p) {
    const double r = y[p] - evaluate(m, d.u[p]);
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

/// Parameter covariance (J^T J)^+ at the solution; scaled by the reduced
/// chi-square when the curve carries no sigma.
Eigen::MatrixXd covariance(const Design& d, std::span<const double> y, const Model& m,
                           bool always_scale = false) {
  const Eigen::VectorXd x = m.pack();
  HarmonicResiduals functor(d, y, static_cast<int>(x.size()));
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(y.size()), x.size());
  functor.df(x, jac);
  Eigen::MatrixXd cov = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
  if (!d.weighted || always_scale) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
    functor(x, r);
    const double dof = std::max<double>(1.0, static_cast<double>(y.size()) - static_cast<double>(x.size()));
    cov *= r.squaredNorm() / dof;
  }
  return cov;
}

int kappa_for(double f, int order) {
  const long r = std::lround(f);
  return (r >= 1 && r % (order - 1) == 0) ? static_cast<int>(r / (order - 1)) : 0;
}

bool use_replicates(const CorrelationCurve& curve, const FitOptions& options) {
  return options.use_replicates && curve.sigma_reliable && curve.replicates.size() >= 2;
}

}  // namespace

ModulationSpectrum fit_fixed(const CorrelationCurve& curve, int order, const FitOptions& options) {
  const Design d = make_design(curve, order);
  const int step = order - 1;
  const int kmax = options.span_bound / step;
  const auto n = static_cast<Eigen::Index>(curve.size());
  const Eigen::Index params = 1 + 2 * kmax;

  Eigen::MatrixXd a(n, params);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double u = d.u[static_cast<std::size_t>(p)];
    const double w = d.sqrt_w[static_cast<std::size_t>(p)];
    a(p, 0) = w;
    for (int k = 1; k <= kmax; ++k) {
      a(p, 2 * k - 1) = w * std::cos(k * step * u);
      a(p, 2 * k) = w * std::sin(k * step * u);
    }
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (n < params || qr.rank() < params) {
    throw FitError("fixed-frequency design is rank deficient",
                   std::to_string(n) + " samples, " + std::to_string(params) + " parameters, rank " +
                       std::to_string(qr.rank()));
  }
  auto solve = [&](std::span<const double> y) {
    Eigen::VectorXd b(n);
    for (Eigen::Index p = 0; p < n; ++p) {
      b[p] = d.sqrt_w[static_cast<std::size_t>(p)] * y[static_cast<std::size_t>(p)];
    }
    return Eigen::VectorXd(qr.solve(b));
  };

  const Eigen::VectorXd x = solve(curve.values);
  ModulationSpectrum spec;
  spec.order = order;
  spec.kind = FitKind::fixed_frequency;
  spec.offset = x[0];

  Model model{x[0], {}};
  for (int k = 1; k <= kmax; ++k) {
    model.parts.push_back({static_cast<double>(k * step), x[2 * k - 1], x[2 * k]});
  }
  spec.residual_rms = residual_rms(d, curve.values, model);

  std::vector<double> sigma_a(static_cast<std::size_t>(kmax), 0.0);
  if (use_replicates(curve, options)) {
    std::vector<double> a0s;
    std::vector<std::vector<double>> proj(static_cast<std::size_t>(kmax));
    for (const auto& rep : curve.replicates) {
      const Eigen::VectorXd xr = solve(rep);
      if (!xr.allFinite()) continue;
      a0s.push_back(xr[0]);
      for (int k = 1; k <= kmax; ++k) {
        const double amp = std::hypot(x[2 * k - 1], x[2 * k]);
        const double ec = amp > 0.0 ? x[2 * k - 1] / amp : 1.0;
        const double es = amp > 0.0 ? x[2 * k] / amp : 0.0;
        proj[static_cast<std::size_t>(k - 1)].push_back(ec * xr[2 * k - 1] + es * xr[2 * k]);
      }
    }
    spec.sigma_offset = sample_std(a0s);
    for (int k = 0; k < kmax; ++k) sigma_a[static_cast<std::size_t>(k)] = sample_std(proj[static_cast<std::size_t>(k)]);
  } else {
    Eigen::MatrixXd cov = (a.transpose() * a).inverse();
    if (!d.weighted) {
      Eigen::VectorXd b(n);
      for (Eigen::Index p = 0; p < n; ++p) b[p] = curve.values[static_cast<std::size_t>(p)];
      const double dof = std::max<double>(1.0, static_cast<double>(n - params));
      cov *= (a * x - b).squaredNorm() / dof;
    }
    spec.sigma_offset = std::sqrt(std::max(0.0, cov(0, 0)));
    for (int k = 1; k <= kmax; ++k) {
      const double c = x[2 * k - 1], s = x[2 * k];
      const double amp = std::hypot(c, s);
      const double ec = amp > 0.0 ? c / amp : 1.0;
      const double es = amp > 0.0 ? s / amp : 0.0;
      const double var = ec * ec * cov(2 * k - 1, 2 * k - 1) + 2.0 * ec * es * cov(2 * k - 1, 2 * k) +
                         es * es * cov(2 * k, 2 * k);
      sigma_a[static_cast<std::size_t>(k - 1)] = std::sqrt(std::max(0.0, var));
    }
  }
  for (int k = 1; k <= kmax; ++k) {
    spec.harmonics.push_back({k, static_cast<double>(k * step), 0.0, std::hypot(x[2 * k - 1], x[2 * k]),
                              sigma_a[static_cast<std::size_t>(k - 1)]});
  }
  return spec;
}

namespace {

struct Uncertainty {
  double offset = 0.0;
  std::vector<double> frequency;
  std::vector<double> amplitude;
};

double projected_variance(const Eigen::MatrixXd& cov, Eigen::Index j, double ec, double es) {
  return ec * ec * cov(j, j) + 2.0 * ec * es * cov(j, j + 1) + es * es * cov(j + 1, j + 1);
}

Uncertainty from_covariance(const Design& d, std::span<const double> y, const Model& model) {
  const Eigen::MatrixXd cov = covariance(d, y, model);
  Uncertainty u;
  u.offset = std::sqrt(std::max(0.0, cov(0, 0)));
  for (std::size_t i = 0; i < model.parts.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(1 + 3 * i);
    const auto& part = model.parts[i];
    const double amp = std::hypot(part.c, part.s);
    const double ec = amp > 0.0 ? part.c / amp : 1.0;
    const double es = amp > 0.0 ? part.s / amp : 0.0;
    u.frequency.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    u.amplitude.push_back(std::sqrt(std::max(0.0, projected_variance(cov, j + 1, ec, es))));
  }
  return u;
}

/// Spread of replicate refits started from the point estimate. A refit that
/// moves a component further than `jump` says that component is unstable;
/// too many of those and its sigma is unbounded.
Uncertainty from_replicates(const Design& d, const std::vector<std::vector<double>>& reps,
                            const Model& model, const FitOptions& options) {
  const std::size_t k = model.parts.size();
  std::vector<RefineResult> fits(reps.size());
  parallel_for(reps.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      if (std::all_of(reps[r].begin(), reps[r].end(), [](double v) { return std::isfinite(v); })) {
        fits[r] = refine(d, reps[r], model, options.max_evaluations);
      }
    }
  });
  std::vector<double> a0s;
  std::vector<std::vector<double>> fs(k), as(k);
  for (const auto& fit : fits) {
    if (!fit.converged || fit.model.parts.size() != k) continue;
    bool intact = true;
    for (std::size_t i = 0; i < k; ++i) {
      intact &= std::abs(fit.model.parts[i].f - model.parts[i].f) <= options.replicate_jump;
    }
    if (intact) a0s.push_back(fit.model.a0);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& base = model.parts[i];
      const auto& moved = fit.model.parts[i];
      if (std::abs(moved.f - base.f) > options.replicate_jump) continue;
      const double amp = std::hypot(base.c, base.s);
      const double ec = amp > 0.0 ? base.c / amp : 1.0;
      const double es = amp > 0.0 ? base.s / amp : 0.0;
      fs[i].push_back(moved.f);
      as[i].push_back(ec * moved.c + es * moved.s);
    }
  }
  const double needed = (1.0 - options.max_unstable_fraction) * static_cast<double>(reps.size());
  const double inf = std::numeric_limits<double>::infinity();
  Uncertainty u;
  u.offset = sample_std(a0s);
  for (std::size_t i = 0; i < k; ++i) {
    const bool stable = static_cast<double>(fs[i].size()) >= needed;
    u.frequency.push_back(stable ? sample_std(fs[i]) : inf);
    u.amplitude.push_back(stable ? sample_std(as[i]) : inf);
  }
  return u;
}

/// Refines and removes components that escaped the frequency window or
/// collapsed onto each other, refitting until the set is stable.
Model refine_or_throw(const Design& d, std::span<const double> y, Model model, int order,
                      const FitOptions& options, const char* stage) {
  const double lo = 0.5 * options.min_frequency;
  const double hi = options.span_bound + 1.0;
  for (std::size_t pass = 0; pass <= options.max_harmonics; ++pass) {
    const auto r = refine(d, y, model, options.max_evaluations);
    if (!r.converged) {
      // a component sliding onto another never converges: the pair trade
      // ever larger cancelling amplitudes; merge and start again
      Model merged = r.model;
      if (r.model.pack().allFinite() && tidy(merged, options.min_separation, lo, hi)) {
        model = merged;
        continue;
      }
      throw FitError(std::string("free-frequency fit did not converge ") + stage + " at order " +
                         std::to_string(order),
                     describe(r.model, r.status, r.evaluations));
    }
    model = r.model;
    if (!tidy(model, options.min_separation, lo, hi)) break;
  }
  return model;
}

}  // namespace

ModulationSpectrum fit_free(const CorrelationCurve& curve, int order, const FitOptions& options) {
  const Design d = make_design(curve, order);
  const std::span<const double> y(curve.values);
  const double f_lo = options.min_frequency;
  const double f_hi = options.span_bound + 0.5;
  const Periodogram periodogram(d, f_lo, f_hi, options.periodogram_step);
  const bool with_replicates = use_replicates(curve, options);

  // forward: add periodogram peaks one at a time, refitting jointly
  Model model{weighted_mean(d, y), {}};
  std::vector<double> residual(y.size());
  for (std::size_t attempt = 0; attempt < options.max_harmonics; ++attempt) {
    for (std::size_t p = 0; p < y.size(); ++p) residual[p] = y[p] - evaluate(model, d.u[p]);
    std::vector<double> taken;
    for (const auto& part : model.parts) taken.push_back(part.f);
    const auto [f, amp] = periodogram.peak(residual, taken, options.min_separation);
    if (!(amp > options.amplitude_floor * std::max(std::abs(model.a0), 1e-300))) break;
    if (with_replicates) {
      const auto [proj, spread] = peak_significance(d, y, curve.replicates, model, f);
      if (!(proj >= options.significance * spread)) break;
    }
    model.parts.push_back(project(d, residual, f));
    model = refine_or_throw(d, y, model, order, options, "while adding components");
  }

  ModulationSpectrum spec;
  spec.order = order;
  spec.kind = FitKind::free_frequency;
  auto emit = [&](const Component& part, double sf, double sa) {
    spec.harmonics.push_back({kappa_for(part.f, order), part.f, sf, std::hypot(part.c, part.s), sa});
  };

  Uncertainty unc;
  if (!with_replicates) {
    unc = from_covariance(d, y, model);
  } else {
    // backward: insignificant components destabilize the refits of their
    // neighbours, so drop the smallest insignificant one at a time and
    // refit; dropped components are still reported with the sigma they had
    for (;;) {
      unc = from_replicates(d, curve.replicates, model, options);
      // sigma_f is a fit-quality figure: least-squares standard error scaled
      // by the residual, kept infinite for components the refits lose
      const Eigen::MatrixXd cov = covariance(d, y, model, true);
      for (std::size_t i = 0; i < model.parts.size(); ++i) {
        const auto j = static_cast<Eigen::Index>(1 + 3 * i);
        if (std::isfinite(unc.frequency[i])) unc.frequency[i] = std::sqrt(std::max(0.0, cov(j, j)));
      }
      std::size_t weakest = model.parts.size();
      double smallest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < model.parts.size(); ++i) {
        const double amp = std::hypot(model.parts[i].c, model.parts[i].s);
        if (!(amp >= options.significance * unc.amplitude[i]) && amp < smallest) {
          smallest = amp;
          weakest = i;
        }
      }
      if (weakest == model.parts.size()) break;
      emit(model.parts[weakest], unc.frequency[weakest], unc.amplitude[weakest]);
      model.parts.erase(model.parts.begin() + static_cast<std::ptrdiff_t>(weakest));
      model = refine_or_throw(d, y, model, order, options, "after pruning");
    }
  }
  spec.offset = model.a0;
  spec.sigma_offset = unc.offset;
  spec.residual_rms = residual_rms(d, y, model);
  for (std::size_t i = 0; i < model.parts.size(); ++i) {
    emit(model.parts[i], unc.frequency[i], unc.amplitude[i]);
  }
  std::sort(spec.harmonics.begin(), spec.harmonics.end(),
            [](const Harmonic& a, const Harmonic& b) { return a.frequency < b.frequency; });
  return spec;
}

std::vector<GateDecision> gate_decisions(const ModulationSpectrum& spectrum, const GatePolicy& policy) {
  std::vector<GateDecision> out;
  for (const auto& h : spectrum.harmonics) {
    GateDecision g{h, false, static_cast<int>(std::lround(h.frequency)), {}};
    std::ostringstream why;
    if (h.amplitude <= policy.min_relative_amplitude * std::abs(spectrum.offset)) {
      why << "amplitude below floor";
    } else if (!(h.amplitude >= policy.k_amplitude * h.sigma_amplitude)) {
      why << "A < " << policy.k_amplitude << " sigma_A";
    } else if (!(h.sigma_frequency <= policy.sigma_frequency_max)) {
      why << "sigma_f > " << policy.sigma_frequency_max;
    } else if (!(std::abs(h.frequency - g.frequency) <= policy.integer_tolerance)) {
      why << "|f - round(f)| > " << policy.integer_tolerance;
    } else if (g.frequency < 1) {
      why << "rounds to zero";
    } else {
      g.accepted = true;
    }
    g.reason = why.str();
    out.push_back(std::move(g));
  }
  return out;
}

ModulationSpectrum gate(const ModulationSpectrum& spectrum, const GatePolicy& policy) {
  ModulationSpectrum out = spectrum;
  out.harmonics.clear();
  for (const auto& decision : gate_decisions(spectrum, policy)) {
    if (!decision.accepted) continue;
    Harmonic h = decision.harmonic;
    h.frequency = decision.frequency;
    h.kappa = kappa_for(h.frequency, spectrum.order);
    // two fitted components can round onto the same integer; keep the stronger
    auto same = std::find_if(out.harmonics.begin(), out.harmonics.end(),
                             [&](const Harmonic& o) { return o.frequency == h.frequency; });
    if (same == out.harmonics.end()) {
      out.harmonics.push_back(h);
    } else if (h.amplitude > same->amplitude) {
      *same = h;
    }
  }
  return out;
}

double calibrate_d(std::span<const std::pair<double, double>> sin_pairs, double wavelength_m,
                   int order) {
  if (order < 2) {
    throw OrderError("calibration needs order >= 2");
  }
  if (sin_pairs.empty()) {
    throw DegenerateError("no detector pairs to calibrate from");
  }
  double sum = 0.0;
  for (const auto& [now, before] : sin_pairs) {
    const double sep = now - before;
    if (sep == 0.0) {
      throw DegenerateError("zero angular separation between magic-position detectors");
    }
    sum += wavelength_m / ((order - 1) * sep);
  }
  return sum / static_cast<double>(sin_pairs.size());
}

}  // namespace superres
