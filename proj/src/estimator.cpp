#include "dppfit/estimator.hpp"

#include "dppfit/error.hpp"
#include "dppfit/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dppfit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Coefficients c_k of the angular integral of gamma_D(s w) over the unit
// sphere, sum_k c_k s^k, valid while s <= min side.
std::vector<double> angular_covariance_poly(const RectWindow& w) {
  const int d = w.dim();
  std::vector<double> c(d + 1, 0.0);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int k = 0;
    double prod = 1.0;
    for (int i = 0; i < d; ++i) {
      if (mask & (1u << i))
        ++k;
      else
        prod *= w.side(i);
    }
    // int over the sphere of prod_{i in S} |w_i| = 2 pi^{(d-k)/2} / Gamma((d+k)/2)
    const double moment = 2.0 * std::pow(std::numbers::pi, 0.5 * (d - k)) / std::tgamma(0.5 * (d + k));
    c[k] += (k % 2 ? -1.0 : 1.0) * prod * moment;
  }
  return c;
}

// Angular integral of gamma_D(s w) over the unit sphere for any s. Beyond the
// shortest side the polynomial no longer applies: d = 1 and 2 are exact,
// d = 3 uses a composite product rule on the octant.
double angular_covariance(const RectWindow& w, const std::vector<double>& poly, double s) {
  const int d = w.dim();
  if (s <= w.min_side()) {
    double cov = 0.0;
    for (int k = d; k >= 0; --k) cov = cov * s + poly[k];
    return cov;
  }
  if (d == 1) return 2.0 * std::max(0.0, w.side(0) - s);
  if (d == 2) {
    const double l1 = w.side(0), l2 = w.side(1);
    const double t1 = std::acos(std::min(1.0, l1 / s)), t2 = std::asin(std::min(1.0, l2 / s));
    if (t1 >= t2) return 0.0;
    auto prim = [&](double t) {
      const double sn = std::sin(t);
      return l1 * l2 * t + l1 * s * std::cos(t) - l2 * s * sn + 0.5 * s * s * sn * sn;
    };
    return 4.0 * (prim(t2) - prim(t1));
  }
  const double half_pi = 0.5 * std::numbers::pi;
  double acc = 0.0;
  for (int pa = 0; pa < 16; ++pa) {
    const QuadRule qa = gauss_legendre(16, pa * half_pi / 16, (pa + 1) * half_pi / 16);
    for (int pb = 0; pb < 16; ++pb) {
      const QuadRule qb = gauss_legendre(16, pb * half_pi / 16, (pb + 1) * half_pi / 16);
      for (std::size_t i = 0; i < qa.nodes.size(); ++i) {
        const double sp = std::sin(qa.nodes[i]), cp = std::cos(qa.nodes[i]);
        for (std::size_t j = 0; j < qb.nodes.size(); ++j) {
          const double g = std::max(0.0, w.side(0) - s * sp * std::cos(qb.nodes[j])) *
                           std::max(0.0, w.side(1) - s * sp * std::sin(qb.nodes[j])) *
                           std::max(0.0, w.side(2) - s * cp);
          acc += qa.weights[i] * qb.weights[j] * sp * g;
        }
      }
    }
  }
  return 8.0 * acc;
}

Normalizer k2_polar(const KernelModel& model, double alpha, const RectWindow& w, double r) {
  const std::vector<double> poly = angular_covariance_poly(w);
  const int d = w.dim();
  // Separate rules below and above the shortest side, where the angular
  // factor has a kink.
  QuadRule q = radial_rule(std::min(r, w.min_side()), alpha);
  if (r > w.min_side()) {
    std::vector<double> breaks{w.min_side()};
    for (int a = 0; a < d; ++a)
      if (w.side(a) > w.min_side() && w.side(a) < r) breaks.push_back(w.side(a));
    breaks.push_back(r);
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      const int panels = 8;
      const double h = (breaks[b + 1] - breaks[b]) / panels;
      for (int k = 0; k < panels && h > 0.0; ++k) {
        const QuadRule g = gauss_legendre(20, breaks[b] + k * h, breaks[b] + (k + 1) * h);
        q.nodes.insert(q.nodes.end(), g.nodes.begin(), g.nodes.end());
        q.weights.insert(q.weights.end(), g.weights.begin(), g.weights.end());
      }
    }
  }
  Normalizer out;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const double s = q.nodes[i];
    const double cov = angular_covariance(w, poly, s);
    if (cov == 0.0) continue;
    const double jac = q.weights[i] * cov * std::pow(s, d - 1);
    const RadialCorr c = corr_derivatives(model, alpha, s);
    out.value += jac * one_minus_corr_sq(model, alpha, s);
    out.d_alpha += jac * (-2.0 * c.value * c.d_alpha);
    out.d2_alpha += jac * (-2.0 * (c.d_alpha * c.d_alpha + c.value * c.d2_alpha));
  }
  return out;
}

Normalizer k2_tensor(const KernelModel& model, double alpha, const RectWindow& w, double r, int nodes) {
  const int d = w.dim();
  if (d > 3) throw DomainError("tensor normalizer supports dimensions 1 to 3");
  const QuadRule q = gauss_legendre(nodes, -r, r);
  const auto n = q.nodes.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> u(d);
  Normalizer out;
  for (;;) {
    double weight = 1.0, s2 = 0.0;
    for (int a = 0; a < d; ++a) {
      u[a] = q.nodes[idx[a]];
      weight *= q.weights[idx[a]];
      s2 += u[a] * u[a];
    }
    if (s2 <= r * r) {
      const double s = std::sqrt(s2);
      const double jac = weight * w.set_covariance(u);
      const RadialCorr c = corr_derivatives(model, alpha, s);
      out.value += jac * one_minus_corr_sq(model, alpha, s);
      out.d_alpha += jac * (-2.0 * c.value * c.d_alpha);
      out.d2_alpha += jac * (-2.0 * (c.d_alpha * c.d_alpha + c.value * c.d2_alpha));
    }
    int a = 0;
    while (a < d && idx[a] == n - 1) idx[a++] = 0;
    if (a == d) break;
    ++idx[a];
  }
  return out;
}

// det[C] of a p-tuple from its pairwise distances, listed as (1,2), (1,3),
// ..., (1,p), (2,3), ... Floored at kDeterminantFloor.
struct TupleDet {
  double value;
  bool degenerate;
};

TupleDet tuple_det(const KernelModel& model, double alpha, const double* dist, int p) {
  double v = 0.0;
  if (p == 2) {
    v = one_minus_corr_sq(model, alpha, dist[0]);
  } else if (p == 3) {
    const double a = corr_radial(model, alpha, dist[0]);
    const double b = corr_radial(model, alpha, dist[1]);
    const double c = corr_radial(model, alpha, dist[2]);
    v = 1.0 - a * a - b * b - c * c + 2.0 * a * b * c;
  } else {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p);
    int k = 0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) m(i, j) = m(j, i) = corr_radial(model, alpha, dist[k++]);
    v = m.determinant();
  }
  if (!(v >= kDeterminantFloor)) return {kDeterminantFloor, true};
  return {v, false};
}

int pairs_in_tuple(int p) { return p * (p - 1) / 2; }

void tuple_distances(const PointPattern& pattern, const std::uint32_t* t, int p, double* out) {
  int k = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) out[k++] = distance(pattern.point(t[i]), pattern.point(t[j]));
}

// QMC normalizer for a fixed point set. Pairwise distances of every sampled
// tuple that lands inside D^p (anywhere, for the limiting kind) are cached, so
// evaluating at a new alpha only recomputes determinants.
class TupleNormalizer {
 public:
  TupleNormalizer(const RectWindow& window, double r, int order, const QmcOptions& options, NormalizerKind kind)
      : order_(order), shifts_(options.shifts) {
    const bool clip = kind == NormalizerKind::window;
    const int d = window.dim();
    const ShiftedSobol sobol(d * order, options);
    scale_ = window.area() * std::pow(ball_volume(d, r), order - 1);
    points_per_shift_ = options.points;
    const int m = pairs_in_tuple(order);
    std::vector<double> t(d * order), x(d * order), ball(d);
    offsets_.assign(shifts_ + 1, 0);
    for (int s = 0; s < shifts_; ++s) {
      for (std::size_t i = 0; i < options.points; ++i) {
        sobol.point(s, i, t);
        bool inside = true;
        for (int a = 0; a < d; ++a) x[a] = window.lower()[a] + t[a] * window.side(a);
        for (int j = 1; j < order && inside; ++j) {
          map_to_ball(std::span<const double>(t).subspan(j * d, d), r, ball);
          for (int a = 0; a < d; ++a) x[j * d + a] = x[a] + ball[a];
          inside = !clip || window.contains(std::span<const double>(x).subspan(j * d, d));
        }
        if (!inside) continue;
        for (int i1 = 0; i1 < order; ++i1)
          for (int j1 = i1 + 1; j1 < order; ++j1)
            dist_.push_back(distance(std::span<const double>(x).subspan(i1 * d, d),
                                     std::span<const double>(x).subspan(j1 * d, d)));
      }
      offsets_[s + 1] = dist_.size() / m;
    }
  }

  QmcEstimate operator()(const KernelModel& model, double alpha) const {
    const int m = pairs_in_tuple(order_);
    std::vector<double> means(shifts_);
    for (int s = 0; s < shifts_; ++s) {
      double acc = 0.0;
      for (std::size_t i = offsets_[s]; i < offsets_[s + 1]; ++i)
        acc += tuple_det(model, alpha, &dist_[i * m], order_).value;
      means[s] = scale_ * acc / static_cast<double>(points_per_shift_);
    }
    return ShiftedSobol::summarize(means);
  }

 private:
  int order_;
  int shifts_;
  double scale_ = 0.0;
  std::size_t points_per_shift_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> dist_;
};

// Smallest point count (doubling from options.points) meeting the target.
struct SizedNormalizer {
  QmcOptions options;
  NormalizerEstimate estimate;
};

SizedNormalizer size_normalizer(const KernelModel& model, double alpha, const RectWindow& window, double r,
                                int order, QmcOptions options, double target, std::size_t max_points,
                                NormalizerKind kind) {
  for (;;) {
    const TupleNormalizer k(window, r, order, options, kind);
    const QmcEstimate e = k(model, alpha);
    NormalizerEstimate out{e.value, e.value > 0.0 ? e.std_error / e.value : 1.0, false};
    if (out.rel_error <= target) return {options, out};
    if (options.points * 2 > max_points) {
      out.imprecise = true;
      return {options, out};
    }
    options.points *= 2;
  }
}

void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("radius r must be positive and finite");
}

}  // namespace

std::string_view to_string(NormalizerKind kind) {
  return kind == NormalizerKind::window ? "window" : "limiting";
}

NormalizerKind normalizer_kind_from_string(std::string_view name) {
  if (name == "window") return NormalizerKind::window;
  if (name == "limiting") return NormalizerKind::limiting;
  throw DomainError("unknown normalizer kind '" + std::string(name) + "'");
}

void CLConfig::validate(const KernelModel& model) const {
  check_radius(radius);
  if (order < 2 || order > kDefaultMaxTupleOrder) throw DomainError("composite likelihood order must be 2, 3 or 4");
  alpha_box.validate();
  if (alpha_box.dim() != model.num_alpha()) throw DomainError("alpha box has the wrong dimension");
  if (!(alpha_box.lower[0] > 0.0)) throw DomainError("alpha box must lie in alpha > 0");
}

IntensityFit fit_intensity(const PointPattern& pattern) {
  return {static_cast<double>(pattern.size()) / pattern.window().area(), pattern.empty()};
}

Normalizer normalizer_k2(const KernelModel& model, double alpha, const RectWindow& window, double r) {
  if (window.dim() != model.dim()) throw DomainError("window and kernel dimensions differ");
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(r >= 0.0)) throw DomainError("radius r must be non-negative");
  if (r == 0.0) throw NormalizerDegenerate("normalizer vanishes at r = 0");
  const Normalizer k = k2_polar(model, alpha, window, r);
  if (!(k.value > 0.0)) throw NormalizerDegenerate("second-order normalizer is not positive");
  return k;
}

Normalizer limiting_normalizer(const KernelModel& model, double alpha, double r) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const int d = model.dim();
  const QuadRule q = radial_rule(r, alpha);
  Normalizer out;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const double s = q.nodes[i];
    const double w = q.weights[i] * std::pow(s, d - 1);
    const RadialCorr c = corr_derivatives(model, alpha, s);
    out.value += w * one_minus_corr_sq(model, alpha, s);
    out.d_alpha += w * (-2.0 * c.value * c.d_alpha);
    out.d2_alpha += w * (-2.0 * (c.d_alpha * c.d_alpha + c.value * c.d2_alpha));
  }
  const double area = unit_sphere_area(d);
  out.value *= area;
  out.d_alpha *= area;
  out.d2_alpha *= area;
  return out;
}

Normalizer normalizer_k2(const KernelModel& model, double alpha, const RectWindow& window, double r,
                         NormalizerKind kind) {
  if (kind == NormalizerKind::window) return normalizer_k2(model, alpha, window, r);
  if (window.dim() != model.dim()) throw DomainError("window and kernel dimensions differ");
  if (!(r > 0.0)) throw NormalizerDegenerate("normalizer vanishes at r = 0");
  Normalizer k = limiting_normalizer(model, alpha, r);
  const double area = window.area();
  k.value *= area;
  k.d_alpha *= area;
  k.d2_alpha *= area;
  if (!(k.value > 0.0)) throw NormalizerDegenerate("second-order normalizer is not positive");
  return k;
}

double normalizer_k2_tensor(const KernelModel& model, double alpha, const RectWindow& window, double r,
                            int nodes) {
  return k2_tensor(model, alpha, window, r, nodes).value;
}

PairContrast::PairContrast(const KernelModel& model, const PointPattern& pattern, double r, NormalizerKind kind)
    : model_(model), window_(pattern.window()), r_(r), kind_(kind) {
  check_radius(r);
  if (pattern.dim() != model.dim()) throw DomainError("pattern and kernel dimensions differ");
  for (const auto& [i, j] : close_pairs(pattern, r))
    if (i < j) distances_.push_back(distance(pattern.point(i), pattern.point(j)));
  if (distances_.empty()) throw NoPairs("no pair of points lies within r");
}

double PairContrast::cl(double alpha) const {
  const double log_k = std::log(normalizer_k2(model_, alpha, window_, r_, kind_).value);
  double s = 0.0;
  for (double t : distances_) s += pair_log_term(model_, alpha, t).log_value;
  return 2.0 * s - static_cast<double>(pairs()) * log_k;
}

double PairContrast::score(double alpha) const {
  const Normalizer k = normalizer_k2(model_, alpha, window_, r_, kind_);
  double s = 0.0;
  for (double t : distances_) s += pair_log_term(model_, alpha, t).d_alpha;
  return 2.0 * s - static_cast<double>(pairs()) * k.d_alpha / k.value;
}

std::size_t PairContrast::degenerate_pairs(double alpha) const {
  std::size_t n = 0;
  for (double t : distances_) n += pair_log_term(model_, alpha, t).degenerate ? 2 : 0;
  return n;
}

double cl2(const KernelModel& model, std::span<const double> alpha, const PointPattern& pattern, double r,
           NormalizerKind kind) {
  validate_alpha(model, alpha);
  return PairContrast(model, pattern, r, kind).cl(alpha[0]);
}

std::vector<double> score2(const KernelModel& model, std::span<const double> alpha, const PointPattern& pattern,
                           double r, NormalizerKind kind) {
  validate_alpha(model, alpha);
  return {PairContrast(model, pattern, r, kind).score(alpha[0])};
}

AlphaFit fit_alpha2(const KernelModel& model, const PointPattern& pattern, double r, const ParamBox& alpha_box,
                    int grid_points, double tolerance, NormalizerKind kind) {
  alpha_box.validate();
  if (alpha_box.dim() != model.num_alpha() || !(alpha_box.lower[0] > 0.0))
    throw DomainError("alpha box must be one-dimensional and positive");
  const PairContrast contrast(model, pattern, r, kind);
  auto objective = [&](double a) {
    try {
      return contrast.cl(a);
    } catch (const NormalizerDegenerate&) {
      return kNegInf;
    }
  };
  const double lo = alpha_box.lower[0], hi = alpha_box.upper[0];
  const ScalarMax m = maximize_scalar(objective, lo, hi, grid_points, tolerance);
  if (!std::isfinite(m.value)) throw DegenerateLikelihood("composite likelihood is -inf over the whole box");

  AlphaFit out;
  out.n_tuples = contrast.pairs();
  out.diagnostics.evaluations = m.evaluations;
  out.diagnostics.boundary_hit = m.boundary_hit;
  double alpha = m.argmax, value = m.value;

  // The golden-section bracket pins alpha to the tolerance; a root solve of
  // the score inside the neighbouring grid cells recovers the stationary point.
  if (!m.boundary_hit && hi > lo) {
    const double step = (hi - lo) / (std::max(grid_points, 3) - 1);
    const double a = std::max(lo, alpha - step), b = std::min(hi, alpha + step);
    const double sa = contrast.score(a), sb = contrast.score(b);
    if (sa > 0.0 && sb < 0.0) {
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve([&](double x) { return contrast.score(x); }, a, b, sa,
                                                          sb, boost::math::tools::eps_tolerance<double>(52), iters);
      const double x = 0.5 * (root.first + root.second);
      const double v = contrast.cl(x);
      if (v >= value - 1e-12 * std::max(1.0, std::abs(value))) {
        alpha = x;
        value = std::max(v, value);
        out.diagnostics.score_polished = true;
      }
      out.diagnostics.evaluations += static_cast<int>(iters) + 3;
    }
  }

  const std::size_t degenerate = contrast.degenerate_pairs(alpha);
  if (degenerate == contrast.pairs())
    throw DegenerateLikelihood("every close pair is degenerate under the fitted kernel");
  out.alpha_hat = {alpha};
  out.cl_value = value;
  out.score_norm = std::abs(contrast.score(alpha));
  out.normalizer = normalizer_k2(model, alpha, pattern.window(), r, kind).value;
  out.diagnostics.degenerate_tuples = degenerate;
  return out;
}

NormalizerEstimate normalizer_kp(const KernelModel& model, double alpha, const RectWindow& window, double r,
                                 int order, const QmcOptions& options, double target, std::size_t max_points,
                                 NormalizerKind kind) {
  check_radius(r);
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (window.dim() != model.dim()) throw DomainError("window and kernel dimensions differ");
  if (order < 2 || order > kDefaultMaxTupleOrder) throw DomainError("normalizer order must be 2, 3 or 4");
  const NormalizerEstimate e = size_normalizer(model, alpha, window, r, order, options, target, max_points, kind).estimate;
  if (!(e.value > 0.0)) throw NormalizerDegenerate("normalizer estimate is not positive");
  return e;
}

namespace {

struct TupleContrast {
  int order;
  std::size_t count = 0;
  std::vector<double> dist;

  TupleContrast(const PointPattern& pattern, double r, int p) : order(p) {
    const std::vector<std::uint32_t> tuples = close_tuples(pattern, r, p);
    count = tuples.size() / p;
    if (count == 0) throw NoPairs("no close tuple of order " + std::to_string(p) + " within r");
    dist.resize(count * pairs_in_tuple(p));
    for (std::size_t i = 0; i < count; ++i) tuple_distances(pattern, &tuples[i * p], p, &dist[i * pairs_in_tuple(p)]);
  }

  double log_sum(const KernelModel& model, double alpha, std::size_t* degenerate = nullptr) const {
    const int m = pairs_in_tuple(order);
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const TupleDet t = tuple_det(model, alpha, &dist[i * m], order);
      s += std::log(t.value);
      if (degenerate && t.degenerate) ++*degenerate;
    }
    return s;
  }
};

}  // namespace

double clp(const KernelModel& model, double alpha, const PointPattern& pattern, double r, int order,
           const QmcOptions& options, NormalizerKind kind) {
  if (order == 2) return cl2(model, std::span<const double>(&alpha, 1), pattern, r, kind);
  const NormalizerEstimate k = normalizer_kp(model, alpha, pattern.window(), r, order, options,
                                             kNormalizerTargetRelError, kNormalizerMaxPoints, kind);
  const TupleContrast t(pattern, r, order);
  return t.log_sum(model, alpha) - static_cast<double>(t.count) * std::log(k.value);
}

AlphaFit fit_alphap(const KernelModel& model, const PointPattern& pattern, const CLConfig& config) {
  config.validate(model);
  if (config.order == 2)
    return fit_alpha2(model, pattern, config.radius, config.alpha_box, config.grid_points, config.tolerance,
                      config.normalizer);

  const TupleContrast tuples(pattern, config.radius, config.order);
  const double lo = config.alpha_box.lower[0], hi = config.alpha_box.upper[0];
  const SizedNormalizer sized =
      size_normalizer(model, std::sqrt(lo * hi), pattern.window(), config.radius, config.order, config.qmc,
                      kNormalizerTargetRelError, kNormalizerMaxPoints, config.normalizer);
  const TupleNormalizer normalizer(pattern.window(), config.radius, config.order, sized.options, config.normalizer);
  auto objective = [&](double a) {
    const double k = normalizer(model, a).value;
    if (!(k > 0.0)) return kNegInf;
    return tuples.log_sum(model, a) - static_cast<double>(tuples.count) * std::log(k);
  };
  const ScalarMax m = maximize_scalar(objective, lo, hi, config.grid_points, config.tolerance);
  if (!std::isfinite(m.value)) throw DegenerateLikelihood("composite likelihood is -inf over the whole box");

  AlphaFit out;
  out.alpha_hat = {m.argmax};
  out.cl_value = m.value;
  out.n_tuples = tuples.count;
  const QmcEstimate k = normalizer(model, m.argmax);
  out.normalizer = k.value;
  // No analytic score above order two; report a central difference.
  const double h = 1e-5 * m.argmax;
  out.score_norm = std::abs(objective(m.argmax + h) - objective(m.argmax - h)) / (2.0 * h);
  out.diagnostics.boundary_hit = m.boundary_hit;
  out.diagnostics.evaluations = m.evaluations;
  out.diagnostics.normalizer_imprecise = sized.estimate.imprecise;
  out.diagnostics.normalizer_rel_error = k.std_error / k.value;
  std::size_t degenerate = 0;
  tuples.log_sum(model, m.argmax, &degenerate);
  out.diagnostics.degenerate_tuples = degenerate;
  if (degenerate == tuples.count) throw DegenerateLikelihood("every close tuple is degenerate under the fitted kernel");
  return out;
}

FitResult fit_two_step(const KernelModel& model, const PointPattern& pattern, const CLConfig& config) {
  const IntensityFit intensity = fit_intensity(pattern);
  const AlphaFit a = fit_alphap(model, pattern, config);
  FitResult out;
  out.lambda_hat = intensity.lambda_hat;
  out.alpha_hat = a.alpha_hat;
  out.cl_value = a.cl_value;
  out.score_norm = a.score_norm;
  out.normalizer = a.normalizer;
  out.n_tuples = a.n_tuples;
  out.diagnostics = a.diagnostics;
  out.diagnostics.empty_pattern = intensity.empty_pattern;
  return out;
}

}  // namespace dppfit
