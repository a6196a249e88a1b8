#include "dppfit/geometry.hpp"

#include "dppfit/error.hpp"

#include <algorithm>
#include <cmath>

namespace dppfit {

RectWindow::RectWindow(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size())
    throw DomainError("window bounds must be non-empty and of equal dimension");
  for (std::size_t i = 0; i < lower_.size(); ++i)
    if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
      throw DomainError("window needs finite bounds with upper > lower on every axis");
}

RectWindow RectWindow::cube(double side, int dim) {
  return RectWindow(std::vector<double>(dim, 0.0), std::vector<double>(dim, side));
}

double RectWindow::min_side() const {
  double m = side(0);
  for (int i = 1; i < dim(); ++i) m = std::min(m, side(i));
  return m;
}

double RectWindow::area() const {
  double a = 1.0;
  for (int i = 0; i < dim(); ++i) a *= side(i);
  return a;
}

double RectWindow::set_covariance(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != dim()) throw DomainError("displacement has wrong dimension");
  double g = 1.0;
  for (int i = 0; i < dim(); ++i) {
    const double overlap = side(i) - std::abs(u[i]);
    if (overlap <= 0.0) return 0.0;
    g *= overlap;
  }
  return g;
}

RectWindow RectWindow::erode(double r) const {
  if (!(r >= 0.0)) throw DomainError("erosion radius must be non-negative");
  if (2.0 * r >= min_side()) throw EmptyErosion("erosion removes the whole window");
  std::vector<double> lo(lower_), hi(upper_);
  for (int i = 0; i < dim(); ++i) {
    lo[i] += r;
    hi[i] -= r;
  }
  return RectWindow(std::move(lo), std::move(hi));
}

bool RectWindow::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (!(x[i] >= lower_[i] && x[i] < upper_[i])) return false;
  return true;
}

}  // namespace dppfit
