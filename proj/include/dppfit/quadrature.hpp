#pragma once

#include <vector>

namespace dppfit {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b]; n in {8, 16, 20, 32, 64}.
QuadRule gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre rule on [0, r] with panel breaks at
/// scale * 2^k (k = -2, -1, 0, ...), so features of width `scale` near the
/// origin are resolved for any r.
QuadRule radial_rule(double r, double scale, int nodes_per_panel = 32);

}  // namespace dppfit
