#include "dppfit/kernel.hpp"

#include "dppfit/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dppfit {
namespace {

constexpr double kPi = std::numbers::pi;

double norm(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

// c_d with F[exp(-|x|)](xi) = c_d (1 + 4 pi^2 |xi|^2)^{-(d+1)/2}.
double laplace_constant(int d) {
  return std::tgamma(0.5 * (d + 1)) * std::pow(2.0, d) * std::pow(kPi, 0.5 * (d - 1));
}

double cauchy_exponent(const KernelModel& model) { return *model.shape() + 1.0; }

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::gaussian:
      return "gaussian";
    case Family::laplace:
      return "laplace";
    case Family::cauchy:
      return "cauchy";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gaussian" || lower == "gauss") return Family::gaussian;
  if (lower == "laplace") return Family::laplace;
  if (lower == "cauchy") return Family::cauchy;
  throw DomainError("unknown kernel family '" + std::string(name) + "'");
}

KernelModel::KernelModel(Family family, std::optional<double> shape, int dim)
    : family_(family), shape_(shape), dim_(dim) {
  if (dim < 1) throw DomainError("kernel dimension must be >= 1");
  if (family == Family::cauchy) {
    if (!shape || !(*shape > 0.0)) throw DomainError("Cauchy kernel needs a shape nu > 0");
  } else if (shape) {
    throw DomainError("only the Cauchy kernel takes a shape parameter");
  }
}

KernelModel KernelModel::gaussian(int dim) { return KernelModel(Family::gaussian, std::nullopt, dim); }
KernelModel KernelModel::laplace(int dim) { return KernelModel(Family::laplace, std::nullopt, dim); }
KernelModel KernelModel::cauchy(double shape, int dim) { return KernelModel(Family::cauchy, shape, dim); }
KernelModel KernelModel::make(Family family, std::optional<double> shape, int dim) {
  return KernelModel(family, shape, dim);
}

std::string KernelModel::name() const {
  if (family_ != Family::cauchy) return std::string(to_string(family_));
  std::ostringstream os;
  os << "cauchy(nu=" << *shape_ << ")";
  return os.str();
}

void validate_alpha(const KernelModel& model, std::span<const double> alpha) {
  if (alpha.size() != model.num_alpha())
    throw DomainError("alpha must have length " + std::to_string(model.num_alpha()));
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("alpha must be positive and finite");
}

void validate_theta(const KernelModel& model, const Theta& theta) {
  if (!(theta.lambda > 0.0) || !std::isfinite(theta.lambda))
    throw DomainError("lambda must be positive and finite");
  validate_alpha(model, theta.alpha);
}

double corr_radial(const KernelModel& model, double alpha, double s) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  switch (model.family()) {
    case Family::gaussian:
      return std::exp(-(s * s) / (alpha * alpha));
    case Family::laplace:
      return std::exp(-s / alpha);
    case Family::cauchy:
      return std::pow(1.0 + (s * s) / (alpha * alpha), -cauchy_exponent(model));
  }
  return 0.0;
}

double corr(const KernelModel& model, std::span<const double> alpha, std::span<const double> u) {
  validate_alpha(model, alpha);
  return corr_radial(model, alpha[0], norm(u));
}

double one_minus_corr_sq(const KernelModel& model, double alpha, double s) {
  switch (model.family()) {
    case Family::gaussian:
      return -std::expm1(-2.0 * (s * s) / (alpha * alpha));
    case Family::laplace:
      return -std::expm1(-2.0 * s / alpha);
    case Family::cauchy:
      return -std::expm1(-2.0 * cauchy_exponent(model) * std::log1p((s * s) / (alpha * alpha)));
  }
  return 0.0;
}

RadialCorr corr_derivatives(const KernelModel& model, double alpha, double s) {
  RadialCorr out;
  const double a2 = alpha * alpha;
  const double s2 = s * s;
  switch (model.family()) {
    case Family::gaussian: {
      const double c = std::exp(-s2 / a2);
      out.value = c;
      out.d_alpha = 2.0 * s2 / (a2 * alpha) * c;
      out.d2_alpha = (4.0 * s2 * s2 / (a2 * a2 * a2) - 6.0 * s2 / (a2 * a2)) * c;
      break;
    }
    case Family::laplace: {
      const double c = std::exp(-s / alpha);
      out.value = c;
      out.d_alpha = s / a2 * c;
      out.d2_alpha = (s2 / (a2 * a2) - 2.0 * s / (a2 * alpha)) * c;
      break;
    }
    case Family::cauchy: {
      const double nu1 = cauchy_exponent(model);
      const double t = s2 / a2;
      const double base = 1.0 + t;
      out.value = std::pow(base, -nu1);
      out.d_alpha = 2.0 * nu1 * s2 / (a2 * alpha) * std::pow(base, -(nu1 + 1.0));
      out.d2_alpha = 2.0 * nu1 * s2 / (a2 * a2) * std::pow(base, -(nu1 + 2.0)) *
                     (2.0 * (nu1 + 1.0) * t - 3.0 * base);
      break;
    }
  }
  return out;
}

PairLogTerm pair_log_term(const KernelModel& model, double alpha, double s) {
  PairLogTerm out;
  const double g = one_minus_corr_sq(model, alpha, s);
  if (!(g > kDeterminantFloor)) {
    out.log_value = std::log(kDeterminantFloor);
    out.degenerate = true;
    return out;
  }
  const RadialCorr c = corr_derivatives(model, alpha, s);
  const double cc1 = c.value * c.d_alpha;
  out.log_value = std::log(g);
  out.d_alpha = -2.0 * cc1 / g;
  out.d2_alpha = -2.0 * (c.d_alpha * c.d_alpha + c.value * c.d2_alpha) / g - 4.0 * cc1 * cc1 / (g * g);
  return out;
}

double spectral_density_radial(const KernelModel& model, const Theta& theta, double xi_norm) {
  validate_theta(model, theta);
  const int d = model.dim();
  const double alpha = theta.alpha[0];
  const double rho = alpha * xi_norm;
  const double scale = theta.lambda * std::pow(alpha, d);
  switch (model.family()) {
    case Family::gaussian:
      return scale * std::pow(kPi, 0.5 * d) * std::exp(-kPi * kPi * rho * rho);
    case Family::laplace:
      return scale * laplace_constant(d) * std::pow(1.0 + 4.0 * kPi * kPi * rho * rho, -0.5 * (d + 1));
    case Family::cauchy: {
      // F[(1+|x|^2)^{-s}](xi) = 2 pi^s / Gamma(s) |xi|^{s-d/2} K_{s-d/2}(2 pi |xi|).
      const double s = cauchy_exponent(model);
      const double order = s - 0.5 * d;
      if (order <= 0.0) throw DomainError("Cauchy kernel needs nu + 1 > d/2 for a finite spectral density");
      if (rho == 0.0) return scale * std::pow(kPi, 0.5 * d) * std::tgamma(order) / std::tgamma(s);
      const double arg = 2.0 * kPi * rho;
      if (arg > 700.0) return 0.0;
      return scale * 2.0 * std::pow(kPi, s) / std::tgamma(s) * std::pow(rho, order) *
             std::cyl_bessel_k(order, arg);
    }
  }
  return 0.0;
}

double spectral_density(const KernelModel& model, const Theta& theta, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != model.dim()) throw DomainError("frequency has wrong dimension");
  return spectral_density_radial(model, theta, norm(xi));
}

double existence_margin(const KernelModel& model, const Theta& theta) {
  // All three families have radially decreasing spectral densities.
  return 1.0 - spectral_density_radial(model, theta, 0.0);
}

double check_existence(const KernelModel& model, const Theta& theta) {
  const double margin = existence_margin(model, theta);
  if (margin < 0.0) {
    std::ostringstream os;
    os << "no DPP exists for " << model.name() << " with lambda=" << theta.lambda
       << ", alpha=" << theta.alpha[0] << ": spectral density peaks at " << 1.0 - margin << " > 1";
    throw ExistenceViolated(os.str(), margin);
  }
  return margin;
}

double integral_corr_squared(const KernelModel& model, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const int d = model.dim();
  switch (model.family()) {
    case Family::gaussian:
      return std::pow(0.5 * kPi * alpha * alpha, 0.5 * d);
    case Family::laplace:
      return std::pow(0.5 * alpha, d) * laplace_constant(d);
    case Family::cauchy: {
      const double s2 = 2.0 * cauchy_exponent(model);
      if (s2 <= 0.5 * d) throw DomainError("Cauchy kernel is not square integrable for this shape");
      return std::pow(alpha, d) * std::pow(kPi, 0.5 * d) * std::tgamma(s2 - 0.5 * d) / std::tgamma(s2);
    }
  }
  return 0.0;
}

double unit_sphere_area(int dim) { return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim); }

double ball_volume(int dim, double r) {
  return std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0) * std::pow(r, dim);
}

namespace {

double distance(PointView a, PointView b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

void check_points(const KernelModel& model, std::span<const PointView> points) {
  if (points.empty()) throw DomainError("need at least one point");
  for (const auto& p : points)
    if (static_cast<int>(p.size()) != model.dim()) throw DomainError("point has wrong dimension");
}

}  // namespace

Eigen::MatrixXd corr_matrix(const KernelModel& model, std::span<const double> alpha,
                            std::span<const PointView> points) {
  validate_alpha(model, alpha);
  check_points(model, points);
  const auto p = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      c(i, j) = c(j, i) = corr_radial(model, alpha[0], distance(points[i], points[j]));
  return c;
}

Determinant corr_determinant(const Eigen::MatrixXd& corr) {
  Determinant out;
  if (corr.rows() == 1) {
    out.value = corr(0, 0);
  } else if (corr.rows() == 2) {
    out.value = 1.0 - corr(0, 1) * corr(0, 1);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(corr);
    out.value = ldlt.info() == Eigen::Success ? ldlt.vectorD().prod() : 0.0;
  }
  if (!(out.value >= kDeterminantFloor)) {
    out.value = kDeterminantFloor;
    out.degenerate = true;
  }
  return out;
}

Determinant reduced_joint_intensity(const KernelModel& model, std::span<const double> alpha,
                                    std::span<const PointView> points) {
  if (points.size() == 2) {
    validate_alpha(model, alpha);
    check_points(model, points);
    Determinant out{one_minus_corr_sq(model, alpha[0], distance(points[0], points[1])), false};
    if (!(out.value >= kDeterminantFloor)) out = {kDeterminantFloor, true};
    return out;
  }
  return corr_determinant(corr_matrix(model, alpha, points));
}

Determinant joint_intensity(const KernelModel& model, const Theta& theta,
                            std::span<const PointView> points) {
  validate_theta(model, theta);
  Determinant d = reduced_joint_intensity(model, theta.alpha, points);
  d.value *= std::pow(theta.lambda, static_cast<double>(points.size()));
  return d;
}

std::vector<double> grad_log_reduced(const KernelModel& model, std::span<const double> alpha,
                                     std::span<const PointView> points) {
  const Eigen::MatrixXd c = corr_matrix(model, alpha, points);
  const auto p = c.rows();
  if (p == 1) return std::vector<double>(model.num_alpha(), 0.0);
  if (corr_determinant(c).degenerate)
    throw DegenerateConfiguration("correlation matrix is numerically singular");
  Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      dc(i, j) = dc(j, i) = corr_derivatives(model, alpha[0], distance(points[i], points[j])).d_alpha;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  return {ldlt.solve(dc).trace()};
}

}  // namespace dppfit
