#include "dppfit/optimize.hpp"

#include "dppfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dppfit {
namespace {

constexpr double kInvPhi = 0.6180339887498949;

double rank_value(double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; }

bool near_bound(double x, double lo, double hi, double tol) {
  return hi > lo && (x - lo <= tol || hi - x <= tol);
}

}  // namespace

bool ParamBox::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

void ParamBox::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw DomainError("parameter box has mismatched bounds");
  for (std::size_t i = 0; i < dim(); ++i)
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
      throw DomainError("parameter box needs finite bounds with lower <= upper");
}

ScalarMax maximize_scalar(const std::function<double(double)>& f, double lo, double hi, int grid_points,
                          double tol) {
  if (!(lo <= hi)) throw DomainError("empty search interval");
  ScalarMax out;
  auto eval = [&](double x) {
    ++out.evaluations;
    const double v = rank_value(f(x));
    if (out.evaluations == 1 || v > out.value) {
      out.value = v;
      out.argmax = x;
    }
    return v;
  };
  if (lo == hi) {
    eval(lo);
    out.bracket_lower = out.bracket_upper = lo;
    return out;
  }

  const int n = std::max(grid_points, 3);
  const double step = (hi - lo) / (n - 1);
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double v = eval(i + 1 == n ? hi : lo + i * step);
    if (i == 0 || v > best_value) {
      best_value = v;
      best = i;
    }
  }

  double a = best == 0 ? lo : lo + (best - 1) * step;
  double b = best == n - 1 ? hi : lo + (best + 1) * step;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval(d);
    }
  }
  eval(0.5 * (a + b));
  out.bracket_lower = a;
  out.bracket_upper = b;
  out.boundary_hit = near_bound(out.argmax, lo, hi, 2.0 * tol);
  return out;
}

BoxMax maximize_in_box(const std::function<double(std::span<const double>)>& f, const ParamBox& box,
                       int grid_points, double tol, int max_sweeps) {
  box.validate();
  const std::size_t q = box.dim();
  if (q > 3) throw DomainError("box maximization supports at most 3 parameters");
  BoxMax out;
  std::vector<double> x(box.lower);

  if (q == 1) {
    const ScalarMax s = maximize_scalar([&](double a) { return f(std::span<const double>(&a, 1)); },
                                        box.lower[0], box.upper[0], grid_points, tol);
    out.argmax = {s.argmax};
    out.value = s.value;
    out.boundary_hit = s.boundary_hit;
    out.evaluations = s.evaluations;
    return out;
  }

  // Full product grid.
  const int n = std::max(grid_points, 3);
  std::vector<int> idx(q, 0);
  std::vector<double> step(q);
  for (std::size_t i = 0; i < q; ++i) step[i] = (box.upper[i] - box.lower[i]) / (n - 1);
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> best(box.lower);
  bool first = true;
  for (;;) {
    for (std::size_t i = 0; i < q; ++i) x[i] = idx[i] + 1 == n ? box.upper[i] : box.lower[i] + idx[i] * step[i];
    const double v = rank_value(f(x));
    ++out.evaluations;
    if (first || v > best_value) {
      best_value = v;
      best = x;
      first = false;
    }
    std::size_t k = 0;
    while (k < q && idx[k] == n - 1) idx[k++] = 0;
    if (k == q) break;
    ++idx[k];
  }

  x = best;
  std::vector<double> half_width(step);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ++out.sweeps;
    double largest_move = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      if (box.upper[i] == box.lower[i]) continue;
      const double lo = std::max(box.lower[i], x[i] - half_width[i]);
      const double hi = std::min(box.upper[i], x[i] + half_width[i]);
      std::vector<double> trial(x);
      const ScalarMax s = maximize_scalar(
          [&](double a) {
            trial[i] = a;
            return f(trial);
          },
          lo, hi, 3, tol);
      out.evaluations += s.evaluations;
      if (s.value > best_value) {
        largest_move = std::max(largest_move, std::abs(s.argmax - x[i]));
        x[i] = s.argmax;
        best_value = s.value;
      }
      half_width[i] = std::max(4.0 * std::abs(s.argmax - x[i]), std::max(half_width[i] * 0.5, 4.0 * tol));
    }
    if (largest_move < tol) break;
  }
  out.argmax = x;
  out.value = best_value;
  for (std::size_t i = 0; i < q; ++i) out.boundary_hit |= near_bound(x[i], box.lower[i], box.upper[i], 2.0 * tol);
  return out;
}

}  // namespace dppfit
