#include "dppfit/quadrature.hpp"

#include "dppfit/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace dppfit {
namespace {

template <int N>
QuadRule make_rule(double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  QuadRule q;
  q.nodes.reserve(N);
  q.weights.reserve(N);
  // Boost stores the non-negative half; odd N has the origin at index 0.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      q.nodes.push_back(mid);
      q.weights.push_back(half * w[i]);
      continue;
    }
    q.nodes.push_back(mid - half * x[i]);
    q.weights.push_back(half * w[i]);
    q.nodes.push_back(mid + half * x[i]);
    q.weights.push_back(half * w[i]);
  }
  return q;
}

}  // namespace

QuadRule gauss_legendre(int n, double a, double b) {
  switch (n) {
    case 8:
      return make_rule<8>(a, b);
    case 16:
      return make_rule<16>(a, b);
    case 20:
      return make_rule<20>(a, b);
    case 32:
      return make_rule<32>(a, b);
    case 64:
      return make_rule<64>(a, b);
    default:
      throw DomainError("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

QuadRule radial_rule(double r, double scale, int nodes_per_panel) {
  QuadRule out;
  if (!(r > 0.0)) return out;
  std::vector<double> breaks{0.0};
  for (double b = 0.25 * scale; b < r; b *= 2.0) breaks.push_back(b);
  breaks.push_back(r);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    QuadRule panel = gauss_legendre(nodes_per_panel, breaks[k], breaks[k + 1]);
    out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return out;
}

}  // namespace dppfit
