#pragma once

// Randomized quasi-Monte Carlo on the unit cube: a Sobol point set replicated
// under independent Cranley-Patterson shifts. The spread across shifts gives
// an unbiased error estimate.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dppfit {

struct QmcOptions {
  std::size_t points = 1u << 13;
  int shifts = 16;
  std::uint64_t seed = 0x5eedULL;
};

struct QmcEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

class ShiftedSobol {
 public:
  ShiftedSobol(int dim, const QmcOptions& options);

  int dim() const { return dim_; }
  std::size_t points() const { return points_; }
  int shifts() const { return static_cast<int>(shifts_.size() / dim_); }

  /// Point i of replicate `shift`, written to `out` (length dim).
  void point(int shift, std::size_t i, std::span<double> out) const {
    const double* base = &base_[i * dim_];
    const double* s = &shifts_[static_cast<std::size_t>(shift) * dim_];
    for (int k = 0; k < dim_; ++k) {
      const double v = base[k] + s[k];
      out[k] = v >= 1.0 ? v - 1.0 : v;
    }
  }

  /// Integral of f over [0,1)^dim. f takes std::span<const double>.
  template <class F>
  QmcEstimate integrate(F&& f) const {
    std::vector<double> u(dim_);
    const int m = shifts();
    std::vector<double> means(m, 0.0);
    for (int s = 0; s < m; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < points_; ++i) {
        point(s, i, u);
        acc += f(std::span<const double>(u));
      }
      means[s] = acc / static_cast<double>(points_);
    }
    return summarize(means);
  }

  static QmcEstimate summarize(std::span<const double> replicate_means);

 private:
  int dim_;
  std::size_t points_;
  std::vector<double> base_;
  std::vector<double> shifts_;
};

/// Maps a point of [0,1)^d (d = 1, 2, 3) to the ball of radius r centred at
/// the origin so that uniform inputs give uniform outputs.
void map_to_ball(std::span<const double> t, double r, std::span<double> out);

}  // namespace dppfit
