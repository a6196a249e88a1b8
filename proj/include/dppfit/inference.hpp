#pragma once

// Asymptotic covariance of the two-step estimator and the composite
// likelihood information criterion, for the second-order likelihood.
//
// All blocks use the limiting normalizer k(alpha) = int_{|u| <= r} (1 - C^2) du
// in place of Ktilde_2 / |D|, and the per-pair estimating function
//   h(u) = d/d alpha log(1 - C_alpha(u)^2) - k'(alpha) / k(alpha),  |u| <= r.

#include "dppfit/estimator.hpp"
#include "dppfit/geometry.hpp"
#include "dppfit/kernel.hpp"
#include "dppfit/qmc.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace dppfit {

/// 1 / lambda - int C_alpha^2.
double sigma11(const KernelModel& model, const Theta& theta);

/// Expected second-order score per unit area when the data come from `truth`
/// and the score is evaluated at `alpha`. Zero at alpha = truth.alpha.
double expected_score2(const KernelModel& model, const Theta& truth, double alpha, double r);

/// Limit of minus the Hessian of the alpha score per unit area:
///   -lambda^2 int_{|u| <= r} dh/d alpha (1 - C^2) du.
/// Throws InfoNotPD when the result is not positive definite.
Eigen::MatrixXd info22(const KernelModel& model, const Theta& theta, double r);

struct Sigma22Options {
  /// QMC settings for the three- and four-point terms.
  QmcOptions qmc{std::size_t{1} << 13, 16, 0x51a22ULL};
  /// Initial truncation uses the radius where |C| falls below this.
  double corr_cutoff = 1e-3;
  /// Doubling of the truncation radius stops once the four-point term moves
  /// by less than this fraction of the total (or within QMC noise).
  double truncation_change = 0.005;
  int max_doublings = 3;
  /// Relative standard error above which the estimate is flagged imprecise.
  double target_rel_error = 0.05;
};

struct BlockEstimate {
  Eigen::MatrixXd value;
  /// QMC standard error, entrywise.
  Eigen::MatrixXd error;
  bool imprecise = false;
  /// Negative eigenvalues were clipped after symmetrization.
  bool psd_repaired = false;
  double truncation_radius = 0.0;
  int doublings = 0;
  /// The three terms of the variance: pair, triple and centered quadruple.
  double pair_term = 0.0;
  double triple_term = 0.0;
  double quadruple_term = 0.0;
};

/// Limiting variance of the alpha score per unit area,
///   2 int h^2 rho2 + 4 int int h h rho3 + int int int h h (rho4 - rho2 x rho2).
BlockEstimate sigma22(const KernelModel& model, const Theta& theta, double r, const Sigma22Options& options = {});

struct VectorEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd error;
};

/// Limiting covariance of the lambda score N / lambda - |D| with the alpha
/// score, per unit area. Evaluated by deterministic quadrature; the error is
/// the change against a rule with half the nodes per panel.
VectorEstimate sigma12(const KernelModel& model, const Theta& theta, double r);

struct AsymptoticBlocks {
  double sigma11 = 0.0;
  Eigen::VectorXd sigma12;
  Eigen::MatrixXd sigma22;
  Eigen::MatrixXd info22;
  /// Full (q+1) x (q+1) Sigma and I^{-1} Sigma I^{-1} with I = diag(1/lambda, I22).
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sandwich;
  Eigen::VectorXd sigma12_error;
  Eigen::MatrixXd sigma22_error;
  bool sigma22_imprecise = false;
  bool psd_repaired = false;
};

AsymptoticBlocks asymptotic_blocks(const KernelModel& model, const Theta& theta, double r,
                                   const Sigma22Options& options = {});

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

struct SandwichResult {
  /// Covariance of (lambda_hat, alpha_hat): sandwich / |D|.
  Eigen::MatrixXd covariance;
  std::vector<double> std_errors;
  /// Wald intervals, lambda first.
  std::vector<Interval> intervals;
};

SandwichResult sandwich(const AsymptoticBlocks& blocks, const RectWindow& window, const Theta& estimate,
                        double level = 0.95);

struct ICReport {
  std::string model;
  double cl_at_optimum = 0.0;
  /// 2 tr(Sigma22 I22^{-1}) at the estimate.
  double penalty = 0.0;
  double ic_value = 0.0;
  /// The fit sat on the boundary of the parameter box.
  bool unreliable = false;
  bool imprecise = false;
};

/// IC = -2 CL(alpha_hat) + 2 tr(Sigma22 I22^{-1}) evaluated at (lambda_hat, alpha_hat).
ICReport ic2(const KernelModel& model, const FitResult& fit, double r, const Sigma22Options& options = {});

/// Indices of `reports` by ascending IC; ties go to the larger CL, then to
/// input order.
std::vector<std::size_t> compare_models(std::span<const ICReport> reports);

}  // namespace dppfit
