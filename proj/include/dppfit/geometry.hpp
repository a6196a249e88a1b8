#pragma once

#include <span>
#include <vector>

namespace dppfit {

/// Axis-aligned observation window [lower, upper) in R^d.
class RectWindow {
 public:
  /// Throws DomainError unless upper[i] > lower[i] for every axis.
  RectWindow(std::vector<double> lower, std::vector<double> upper);

  /// The corner-anchored square [0, n]^d.
  static RectWindow cube(double side, int dim = 2);

  int dim() const { return static_cast<int>(lower_.size()); }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  double side(int axis) const { return upper_[axis] - lower_[axis]; }
  double min_side() const;
  double area() const;

  /// |D intersect (D - u)| = prod_i (side_i - |u_i|)_+.
  double set_covariance(std::span<const double> u) const;

  /// Window shrunk by r on every side. Throws EmptyErosion when r reaches
  /// half of the shortest side.
  RectWindow erode(double r) const;

  /// Lower-inclusive, upper-exclusive membership.
  bool contains(std::span<const double> x) const;

  friend bool operator==(const RectWindow&, const RectWindow&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

}  // namespace dppfit
