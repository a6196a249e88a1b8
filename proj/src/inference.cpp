#include "dppfit/inference.hpp"

#include "dppfit/error.hpp"
#include "dppfit/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dppfit {
namespace {

// Radius beyond which |C_alpha| < cutoff.
double corr_radius(const KernelModel& model, double alpha, double cutoff) {
  switch (model.family()) {
    case Family::gaussian:
      return alpha * std::sqrt(-std::log(cutoff));
    case Family::laplace:
      return -alpha * std::log(cutoff);
    case Family::cauchy:
      return alpha * std::sqrt(std::pow(cutoff, -1.0 / (*model.shape() + 1.0)) - 1.0);
  }
  return 0.0;
}

double norm(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// h(s) = d log(1 - C^2) - k'/k on |u| <= r.
struct Estimating {
  const KernelModel& model;
  double alpha;
  double r;
  double ratio;  // k'/k

  Estimating(const KernelModel& m, double a, double radius) : model(m), alpha(a), r(radius) {
    const Normalizer k = limiting_normalizer(m, a, radius);
    ratio = k.d_alpha / k.value;
  }
  double operator()(double s) const { return s <= r ? pair_log_term(model, alpha, s).d_alpha - ratio : 0.0; }
};

// int over the ball of radius r of f(|u|) du.
template <class F>
double radial_integral(int d, double r, double scale, F&& f, int nodes = 32) {
  const QuadRule q = radial_rule(r, scale, nodes);
  double s = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], d - 1) * f(q.nodes[i]);
  return unit_sphere_area(d) * s;
}

void check_inputs(const KernelModel& model, const Theta& theta, double r) {
  validate_theta(model, theta);
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("radius r must be positive and finite");
  if (model.dim() > 3) throw DomainError("asymptotic blocks support dimensions 1 to 3");
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

// Composite rule on [a, b] with breaks refining geometrically around each centre.
QuadRule centred_rule(double a, double b, std::span<const double> centres, double scale, int nodes) {
  std::vector<double> breaks{a, b};
  for (double c : centres) {
    if (c > a && c < b) breaks.push_back(c);
    for (double w = 0.25 * scale; w < b - a; w *= 2.0) {
      if (c - w > a && c - w < b) breaks.push_back(c - w);
      if (c + w > a && c + w < b) breaks.push_back(c + w);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  QuadRule out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const QuadRule p = gauss_legendre(nodes, breaks[k], breaks[k + 1]);
    out.nodes.insert(out.nodes.end(), p.nodes.begin(), p.nodes.end());
    out.weights.insert(out.weights.end(), p.weights.begin(), p.weights.end());
  }
  return out;
}

// Autocorrelation A(s) = int C(|v|) C(|v - s e_1|) dv, reduced to the axial
// coordinate and the distance from the axis.
double autocorrelation(const KernelModel& model, double alpha, double s, double reach, int nodes) {
  const int d = model.dim();
  const double centres[] = {0.0, s};
  const QuadRule axial = centred_rule(-reach, s + reach, centres, alpha, nodes);
  if (d == 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < axial.nodes.size(); ++i) {
      const double v = axial.nodes[i];
      acc += axial.weights[i] * corr_radial(model, alpha, std::abs(v)) * corr_radial(model, alpha, std::abs(v - s));
    }
    return acc;
  }
  const QuadRule radial = radial_rule(reach, alpha, nodes);
  double acc = 0.0;
  for (std::size_t i = 0; i < axial.nodes.size(); ++i) {
    const double v = axial.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < radial.nodes.size(); ++j) {
      const double rho = radial.nodes[j];
      inner += radial.weights[j] * std::pow(rho, d - 2) * corr_radial(model, alpha, std::hypot(v, rho)) *
               corr_radial(model, alpha, std::hypot(v - s, rho));
    }
    acc += axial.weights[i] * inner;
  }
  return unit_sphere_area(d - 1) * acc;
}

double sigma12_with(const KernelModel& model, const Theta& theta, double r, int nodes) {
  const double alpha = theta.alpha[0];
  const Estimating h(model, alpha, r);
  const double c2 = integral_corr_squared(model, alpha);
  const double reach = corr_radius(model, alpha, 1e-8);
  const double integral = radial_integral(
      model.dim(), r, alpha,
      [&](double s) { return h(s) * (corr_radial(model, alpha, s) * autocorrelation(model, alpha, s, reach, nodes) - c2); },
      nodes);
  return 2.0 * theta.lambda * theta.lambda * integral;
}

// Determinant of the 4 x 4 correlation matrix from its six off-diagonal entries.
double det4(double c12, double c13, double c14, double c23, double c24, double c34) {
  Eigen::Matrix4d m;
  m << 1.0, c12, c13, c14, c12, 1.0, c23, c24, c13, c23, 1.0, c34, c14, c24, c34, 1.0;
  return m.determinant();
}

}  // namespace

double sigma11(const KernelModel& model, const Theta& theta) {
  validate_theta(model, theta);
  return 1.0 / theta.lambda - integral_corr_squared(model, theta.alpha[0]);
}

double expected_score2(const KernelModel& model, const Theta& truth, double alpha, double r) {
  check_inputs(model, truth, r);
  const Estimating h(model, alpha, r);
  const double a0 = truth.alpha[0];
  return truth.lambda * truth.lambda *
         radial_integral(model.dim(), r, std::min(alpha, a0),
                         [&](double s) { return h(s) * one_minus_corr_sq(model, a0, s); });
}

Eigen::MatrixXd info22(const KernelModel& model, const Theta& theta, double r) {
  check_inputs(model, theta, r);
  const double alpha = theta.alpha[0];
  const Normalizer k = limiting_normalizer(model, alpha, r);
  const double dratio = k.d2_alpha / k.value - (k.d_alpha / k.value) * (k.d_alpha / k.value);
  const double v = -theta.lambda * theta.lambda * radial_integral(model.dim(), r, alpha, [&](double s) {
    const PairLogTerm t = pair_log_term(model, alpha, s);
    return (t.d2_alpha - dratio) * one_minus_corr_sq(model, alpha, s);
  });
  if (!(v > 0.0)) throw InfoNotPD("I22 is not positive definite at this parameter");
  return scalar(v);
}

BlockEstimate sigma22(const KernelModel& model, const Theta& theta, double r, const Sigma22Options& options) {
  check_inputs(model, theta, r);
  const int d = model.dim();
  const double alpha = theta.alpha[0];
  const double lam = theta.lambda;
  const Estimating h(model, alpha, r);
  const double vb = ball_volume(d, r);
  auto c = [&](double s) { return corr_radial(model, alpha, s); };

  BlockEstimate out;
  out.pair_term = 2.0 * lam * lam * radial_integral(d, r, alpha, [&](double s) {
                    return h(s) * h(s) * one_minus_corr_sq(model, alpha, s);
                  });

  // Triple term. The part of det[C](0, u2, u3) that separates in u2 and u3 is
  // integrated exactly: with a = int_B h, it contributes -a^2 because
  // int_B h (1 - C^2) = 0.
  const double a = radial_integral(d, r, alpha, h);
  std::vector<double> u2(d), u3(d);
  const ShiftedSobol sobol3(2 * d, options.qmc);
  const QmcEstimate cross = sobol3.integrate([&](std::span<const double> t) {
    map_to_ball(t.subspan(0, d), r, u2);
    map_to_ball(t.subspan(d, d), r, u3);
    const double s2 = norm(u2), s3 = norm(u3), s23 = diff_norm(u2, u3);
    const double c23 = c(s23);
    return h(s2) * h(s3) * (2.0 * c(s2) * c(s3) * c23 - c23 * c23);
  });
  const double l3 = 4.0 * lam * lam * lam;
  out.triple_term = l3 * (vb * vb * cross.value - a * a);
  const double triple_se = l3 * vb * vb * cross.std_error;

  // Centered quadruple term: points 0, u2, v, v + w with u2, w in B and |v| <= R.
  std::vector<double> v(d), w(d), vw(d);
  auto quadruple = [&](double reach) {
    const ShiftedSobol sobol4(3 * d, options.qmc);
    const QmcEstimate e = sobol4.integrate([&](std::span<const double> t) {
      map_to_ball(t.subspan(0, d), r, u2);
      map_to_ball(t.subspan(d, d), r, w);
      map_to_ball(t.subspan(2 * d, d), reach, v);
      for (int k = 0; k < d; ++k) vw[k] = v[k] + w[k];
      const double s2 = norm(u2), sw = norm(w);
      const double hh = h(s2) * h(sw);
      if (hh == 0.0) return 0.0;
      const double c12 = c(s2), c34 = c(sw);
      const double full = det4(c12, c(norm(v)), c(norm(vw)), c(diff_norm(u2, v)), c(diff_norm(u2, vw)), c34);
      return hh * (full - (1.0 - c12 * c12) * (1.0 - c34 * c34));
    });
    const double scale = lam * lam * lam * lam * vb * vb * ball_volume(d, reach);
    return QmcEstimate{scale * e.value, scale * e.std_error};
  };
  double reach = 2.0 * r + corr_radius(model, alpha, options.corr_cutoff);
  QmcEstimate quad = quadruple(reach);
  for (int k = 0; k < options.max_doublings; ++k) {
    const QmcEstimate wider = quadruple(2.0 * reach);
    const double total = std::abs(out.pair_term + out.triple_term + wider.value);
    const double change = std::abs(wider.value - quad.value);
    const double noise = 2.0 * std::hypot(wider.std_error, quad.std_error);
    reach *= 2.0;
    quad = wider;
    ++out.doublings;
    if (change <= std::max(options.truncation_change * total, noise)) break;
  }
  out.truncation_radius = reach;
  out.quadruple_term = quad.value;

  double value = out.pair_term + out.triple_term + out.quadruple_term;
  const double se = std::hypot(triple_se, quad.std_error);
  if (value < 0.0) {
    value = 0.0;
    out.psd_repaired = true;
  }
  out.value = scalar(value);
  out.error = scalar(se);
  out.imprecise = !(se <= options.target_rel_error * value);
  return out;
}

VectorEstimate sigma12(const KernelModel& model, const Theta& theta, double r) {
  check_inputs(model, theta, r);
  const double fine = sigma12_with(model, theta, r, 20);
  const double coarse = sigma12_with(model, theta, r, 8);
  VectorEstimate out;
  out.value = Eigen::VectorXd::Constant(1, fine);
  out.error = Eigen::VectorXd::Constant(1, std::abs(fine - coarse));
  return out;
}

AsymptoticBlocks asymptotic_blocks(const KernelModel& model, const Theta& theta, double r,
                                   const Sigma22Options& options) {
  AsymptoticBlocks b;
  b.sigma11 = sigma11(model, theta);
  const VectorEstimate s12 = sigma12(model, theta, r);
  const BlockEstimate s22 = sigma22(model, theta, r, options);
  b.sigma12 = s12.value;
  b.sigma12_error = s12.error;
  b.sigma22 = s22.value;
  b.sigma22_error = s22.error;
  b.sigma22_imprecise = s22.imprecise;
  b.psd_repaired = s22.psd_repaired;
  b.info22 = info22(model, theta, r);

  const auto q = static_cast<Eigen::Index>(model.num_alpha());
  b.sigma = Eigen::MatrixXd::Zero(q + 1, q + 1);
  b.sigma(0, 0) = b.sigma11;
  b.sigma.block(0, 1, 1, q) = b.sigma12.transpose();
  b.sigma.block(1, 0, q, 1) = b.sigma12;
  b.sigma.block(1, 1, q, q) = b.sigma22;
  Eigen::MatrixXd info_inv = Eigen::MatrixXd::Zero(q + 1, q + 1);
  info_inv(0, 0) = theta.lambda;
  info_inv.block(1, 1, q, q) = b.info22.inverse();
  b.sandwich = info_inv * b.sigma * info_inv;
  b.sandwich = 0.5 * (b.sandwich + b.sandwich.transpose()).eval();
  return b;
}

SandwichResult sandwich(const AsymptoticBlocks& blocks, const RectWindow& window, const Theta& estimate,
                        double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  SandwichResult out;
  out.covariance = blocks.sandwich / window.area();
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  std::vector<double> centre{estimate.lambda};
  centre.insert(centre.end(), estimate.alpha.begin(), estimate.alpha.end());
  if (static_cast<Eigen::Index>(centre.size()) != out.covariance.rows())
    throw DomainError("estimate does not match the covariance dimension");
  for (std::size_t i = 0; i < centre.size(); ++i) {
    const double se = std::sqrt(std::max(0.0, out.covariance(i, i)));
    out.std_errors.push_back(se);
    out.intervals.push_back({centre[i] - z * se, centre[i] + z * se});
  }
  return out;
}

ICReport ic2(const KernelModel& model, const FitResult& fit, double r, const Sigma22Options& options) {
  const Theta theta{fit.lambda_hat, fit.alpha_hat};
  const BlockEstimate s22 = sigma22(model, theta, r, options);
  const Eigen::MatrixXd i22 = info22(model, theta, r);
  ICReport out;
  out.model = model.name();
  out.cl_at_optimum = fit.cl_value;
  out.penalty = 2.0 * (s22.value * i22.inverse()).trace();
  out.ic_value = -2.0 * out.cl_at_optimum + out.penalty;
  out.unreliable = fit.diagnostics.boundary_hit;
  out.imprecise = s22.imprecise;
  return out;
}

std::vector<std::size_t> compare_models(std::span<const ICReport> reports) {
  std::vector<std::size_t> order(reports.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (reports[i].ic_value != reports[j].ic_value) return reports[i].ic_value < reports[j].ic_value;
    return reports[i].cl_at_optimum > reports[j].cl_at_optimum;
  });
  return order;
}

}  // namespace dppfit
