#pragma once

// Derivative-free maximization over compact boxes: a coarse grid to locate the
// basin, then golden-section refinement (coordinate-wise sweeps for q > 1).

#include <functional>
#include <span>
#include <vector>

namespace dppfit {

/// Compact parameter box; lower[i] <= upper[i]. A collapsed axis is allowed.
struct ParamBox {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
  /// Throws DomainError on mismatched sizes, inverted or non-finite bounds.
  void validate() const;
};

inline constexpr int kDefaultGridPoints = 64;
inline constexpr double kDefaultArgTolerance = 1e-8;

struct ScalarMax {
  double argmax = 0.0;
  double value = 0.0;
  /// Final golden-section bracket.
  double bracket_lower = 0.0;
  double bracket_upper = 0.0;
  bool boundary_hit = false;
  int evaluations = 0;
};

/// Maximizes f on [lo, hi]. Values of -inf and NaN rank below every finite value.
ScalarMax maximize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          int grid_points = kDefaultGridPoints, double tol = kDefaultArgTolerance);

struct BoxMax {
  std::vector<double> argmax;
  double value = 0.0;
  bool boundary_hit = false;
  int evaluations = 0;
  int sweeps = 0;
};

/// Maximizes f over a box of dimension 1 to 3: full grid, then coordinate-wise
/// golden-section sweeps until no coordinate moves by more than tol.
BoxMax maximize_in_box(const std::function<double(std::span<const double>)>& f, const ParamBox& box,
                       int grid_points = kDefaultGridPoints, double tol = kDefaultArgTolerance,
                       int max_sweeps = 200);

}  // namespace dppfit
