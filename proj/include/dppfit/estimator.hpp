#pragma once

// Two-step estimation for stationary DPPs: lambda from the point count, then
// alpha by maximizing the p-th order composite likelihood
//
//   CL(alpha) = sum over ordered close p-tuples of
//               log det[C_alpha](x_1..x_p) - log Ktilde_p(r; alpha),
//
// where a p-tuple is close when |x_1 - x_j| <= r for every j, and Ktilde_p is
// the integral of det[C_alpha] over the close p-tuples of the window.

#include "dppfit/geometry.hpp"
#include "dppfit/kernel.hpp"
#include "dppfit/optimize.hpp"
#include "dppfit/patterns.hpp"
#include "dppfit/qmc.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace dppfit {

/// How the likelihood normalizer treats the window edge. `window` integrates
/// over close tuples of D^p exactly; `limiting` uses |D| times the integral
/// over the balls around the first point, ignoring the edge.
enum class NormalizerKind { window, limiting };

std::string_view to_string(NormalizerKind kind);
/// Accepts "window" or "limiting".
NormalizerKind normalizer_kind_from_string(std::string_view name);

struct CLConfig {
  int order = 2;
  NormalizerKind normalizer = NormalizerKind::window;
  double radius = 0.0;
  ParamBox alpha_box;
  int grid_points = kDefaultGridPoints;
  double tolerance = kDefaultArgTolerance;
  /// QMC settings for the p >= 3 normalizer.
  QmcOptions qmc{};

  /// Throws DomainError on r <= 0, an order outside 2..4 or a bad box.
  void validate(const KernelModel& model) const;
};

struct FitDiagnostics {
  bool empty_pattern = false;
  bool boundary_hit = false;
  /// Close tuples whose determinant was floored at the optimum.
  std::size_t degenerate_tuples = 0;
  /// The golden-section answer was refined by a root solve of the score.
  bool score_polished = false;
  bool normalizer_imprecise = false;
  double normalizer_rel_error = 0.0;
  int evaluations = 0;
};

struct FitResult {
  double lambda_hat = 0.0;
  std::vector<double> alpha_hat;
  double cl_value = 0.0;
  /// Euclidean norm of the score at alpha_hat.
  double score_norm = 0.0;
  double normalizer = 0.0;
  /// Number of ordered close tuples entering the likelihood.
  std::size_t n_tuples = 0;
  FitDiagnostics diagnostics;
};

struct IntensityFit {
  double lambda_hat = 0.0;
  bool empty_pattern = false;
};

/// lambda_hat = N / |D|. An empty pattern gives 0 with the warning flag set.
IntensityFit fit_intensity(const PointPattern& pattern);

/// Ktilde_2 and its first two alpha derivatives.
struct Normalizer {
  double value = 0.0;
  double d_alpha = 0.0;
  double d2_alpha = 0.0;
};

/// Ktilde_2(r; alpha) = int_{|u| <= r} gamma_D(u) (1 - C_alpha(u)^2) du.
/// Polar reduction: the angular factor is an exact polynomial in |u| up to the
/// shortest side and is clipped beyond it. Throws NormalizerDegenerate if
/// the value is not positive.
Normalizer normalizer_k2(const KernelModel& model, double alpha, const RectWindow& window, double r);

/// k(alpha) = int_{|u| <= r} (1 - C_alpha(u)^2) du and its alpha derivatives,
/// the per-unit-area limit of Ktilde_2.
Normalizer limiting_normalizer(const KernelModel& model, double alpha, double r);

/// Ktilde_2 of the requested kind; `limiting` gives |D| k(alpha).
Normalizer normalizer_k2(const KernelModel& model, double alpha, const RectWindow& window, double r,
                         NormalizerKind kind);

/// The same integral by masked tensor Gauss-Legendre on [-r, r]^d. The mask
/// cuts through the rule, so expect errors near 1%; a coarse cross-check only.
double normalizer_k2_tensor(const KernelModel& model, double alpha, const RectWindow& window, double r,
                            int nodes = 64);

/// Second-order contrast for one pattern with the close-pair distances cached.
class PairContrast {
 public:
  /// Throws NoPairs when no two points are within r.
  PairContrast(const KernelModel& model, const PointPattern& pattern, double r,
               NormalizerKind kind = NormalizerKind::window);

  double cl(double alpha) const;
  double score(double alpha) const;
  /// Ordered close pairs.
  std::size_t pairs() const { return 2 * distances_.size(); }
  std::size_t degenerate_pairs(double alpha) const;
  std::span<const double> distances() const { return distances_; }

 private:
  KernelModel model_;
  RectWindow window_;
  double r_;
  NormalizerKind kind_;
  std::vector<double> distances_;  // one per unordered pair
};

double cl2(const KernelModel& model, std::span<const double> alpha, const PointPattern& pattern, double r,
           NormalizerKind kind = NormalizerKind::window);
std::vector<double> score2(const KernelModel& model, std::span<const double> alpha, const PointPattern& pattern,
                           double r, NormalizerKind kind = NormalizerKind::window);

struct AlphaFit {
  std::vector<double> alpha_hat;
  double cl_value = 0.0;
  double score_norm = 0.0;
  double normalizer = 0.0;
  std::size_t n_tuples = 0;
  FitDiagnostics diagnostics;
};

/// Maximizer of cl2 over the box: 64-point grid, golden section to the
/// tolerance, then a bracketed root solve of the score when interior.
/// Throws NoPairs or DegenerateLikelihood (every grid value is -inf).
AlphaFit fit_alpha2(const KernelModel& model, const PointPattern& pattern, double r, const ParamBox& alpha_box,
                    int grid_points = kDefaultGridPoints, double tolerance = kDefaultArgTolerance,
                    NormalizerKind kind = NormalizerKind::window);

inline constexpr double kNormalizerTargetRelError = 1e-3;
inline constexpr std::size_t kNormalizerMaxPoints = std::size_t{1} << 17;

struct NormalizerEstimate {
  double value = 0.0;
  double rel_error = 0.0;
  /// The point budget ran out before the error target was met.
  bool imprecise = false;
};

/// Ktilde_p by randomized QMC over x_1 in D and x_2..x_p in the ball of radius
/// r around x_1. The point count doubles from options.points until the
/// relative standard error is at most `target` or `max_points` is reached.
NormalizerEstimate normalizer_kp(const KernelModel& model, double alpha, const RectWindow& window, double r,
                                 int order, const QmcOptions& options = {},
                                 double target = kNormalizerTargetRelError,
                                 std::size_t max_points = kNormalizerMaxPoints,
                                 NormalizerKind kind = NormalizerKind::window);

/// CL of order p. For p = 2 this is cl2; otherwise the normalizer is supplied.
double clp(const KernelModel& model, double alpha, const PointPattern& pattern, double r, int order,
           const QmcOptions& options = {}, NormalizerKind kind = NormalizerKind::window);

/// Maximizer of the order-p likelihood; p = 2 delegates to fit_alpha2. The
/// QMC normalizer uses one fixed point set for every alpha, so the objective
/// is a smooth function of alpha. Throws NoPairs when there is no close tuple.
AlphaFit fit_alphap(const KernelModel& model, const PointPattern& pattern, const CLConfig& config);

/// lambda_hat from fit_intensity, alpha_hat from fit_alphap.
FitResult fit_two_step(const KernelModel& model, const PointPattern& pattern, const CLConfig& config);

}  // namespace dppfit
