#pragma once

// Stationary DPP kernels K(x, y) = lambda * C_alpha(x - y) for the Gaussian,
// Laplace and Cauchy correlation families.
//
// Fourier convention throughout: F f(xi) = int f(u) exp(-2 pi i u.xi) du, so a
// kernel defines a DPP iff its spectral density lies in [0, 1].

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dppfit {

enum class Family { gaussian, laplace, cauchy };

std::string_view to_string(Family family);
/// Accepts "gaussian", "laplace", "cauchy" (case-insensitive).
Family family_from_string(std::string_view name);

/// A parametric correlation family with its fixed (non-estimated) settings.
class KernelModel {
 public:
  static KernelModel gaussian(int dim = 2);
  static KernelModel laplace(int dim = 2);
  /// Cauchy family with fixed shape nu > 0.
  static KernelModel cauchy(double shape, int dim = 2);
  static KernelModel make(Family family, std::optional<double> shape, int dim = 2);

  Family family() const { return family_; }
  std::optional<double> shape() const { return shape_; }
  int dim() const { return dim_; }
  /// Length q of the correlation parameter vector alpha.
  std::size_t num_alpha() const { return 1; }
  /// "gaussian", "laplace" or "cauchy(nu=0.5)".
  std::string name() const;

  friend bool operator==(const KernelModel&, const KernelModel&) = default;

 private:
  KernelModel(Family family, std::optional<double> shape, int dim);

  Family family_;
  std::optional<double> shape_;
  int dim_;
};

/// Parameter point theta = (lambda, alpha).
struct Theta {
  double lambda = 0.0;
  std::vector<double> alpha;
};

/// Throws DomainError unless alpha has length q and positive entries.
void validate_alpha(const KernelModel& model, std::span<const double> alpha);
void validate_theta(const KernelModel& model, const Theta& theta);

/// C_alpha(u) for a displacement u in R^d.
double corr(const KernelModel& model, std::span<const double> alpha, std::span<const double> u);

/// C_alpha at distance s = |u|; `alpha` is the scalar scale parameter.
double corr_radial(const KernelModel& model, double alpha, double s);

/// 1 - C_alpha(s)^2 without cancellation for small s.
double one_minus_corr_sq(const KernelModel& model, double alpha, double s);

struct RadialCorr {
  double value = 0.0;
  double d_alpha = 0.0;
  double d2_alpha = 0.0;
};

/// C_alpha(s) with its first and second derivatives in alpha.
RadialCorr corr_derivatives(const KernelModel& model, double alpha, double s);

inline constexpr double kDeterminantFloor = 1e-12;

/// log(1 - C^2) at distance s and its alpha derivatives, floored at
/// kDeterminantFloor. At the floor the derivatives are zero.
struct PairLogTerm {
  double log_value = 0.0;
  double d_alpha = 0.0;
  double d2_alpha = 0.0;
  bool degenerate = false;
};
PairLogTerm pair_log_term(const KernelModel& model, double alpha, double s);

/// lambda times the Fourier transform of C_alpha at frequency xi.
double spectral_density(const KernelModel& model, const Theta& theta, std::span<const double> xi);
/// Same, for a frequency of Euclidean norm `xi_norm`.
double spectral_density_radial(const KernelModel& model, const Theta& theta, double xi_norm);

/// 1 - sup spectral density. Non-negative iff the DPP exists.
double existence_margin(const KernelModel& model, const Theta& theta);
/// As existence_margin, but throws ExistenceViolated when the margin is negative.
double check_existence(const KernelModel& model, const Theta& theta);

/// Integral of C_alpha^2 over R^d (closed form for all three families).
double integral_corr_squared(const KernelModel& model, double alpha);

/// Surface measure of the unit sphere in R^d.
double unit_sphere_area(int dim);
/// Lebesgue measure of the ball of radius r in R^d.
double ball_volume(int dim, double r);

using PointView = std::span<const double>;

/// The p x p matrix (C_alpha(x_i - x_j)).
Eigen::MatrixXd corr_matrix(const KernelModel& model, std::span<const double> alpha,
                            std::span<const PointView> points);

struct Determinant {
  double value = 0.0;
  /// True when the determinant fell below kDeterminantFloor and was clamped.
  bool degenerate = false;
};

/// Determinant of a symmetric correlation matrix by LDL^T factorization,
/// clamped below at kDeterminantFloor.
Determinant corr_determinant(const Eigen::MatrixXd& corr);

/// det[C_alpha](x_1..x_p), the joint intensity divided by lambda^p.
Determinant reduced_joint_intensity(const KernelModel& model, std::span<const double> alpha,
                                    std::span<const PointView> points);

/// rho^(p)(x_1..x_p) = lambda^p det[C_alpha](x_1..x_p).
Determinant joint_intensity(const KernelModel& model, const Theta& theta,
                            std::span<const PointView> points);

/// d/d alpha of log det[C_alpha] = tr(C^{-1} dC/d alpha).
/// Throws DegenerateConfiguration when the matrix is numerically singular.
std::vector<double> grad_log_reduced(const KernelModel& model, std::span<const double> alpha,
                                     std::span<const PointView> points);

}  // namespace dppfit
