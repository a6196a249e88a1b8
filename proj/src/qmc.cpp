#include "dppfit/qmc.hpp"

#include "dppfit/error.hpp"
#include "dppfit/rng.hpp"

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <numbers>

namespace dppfit {

ShiftedSobol::ShiftedSobol(int dim, const QmcOptions& options) : dim_(dim), points_(options.points) {
  if (dim < 1) throw DomainError("QMC dimension must be >= 1");
  if (options.points == 0 || options.shifts < 2) throw DomainError("QMC needs points > 0 and >= 2 shifts");
  boost::random::sobol engine(static_cast<std::size_t>(dim));
  base_.resize(points_ * dim_);
  for (double& v : base_) v = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  RngStream rng(options.seed, 0x9acULL);
  shifts_.resize(static_cast<std::size_t>(options.shifts) * dim_);
  for (double& v : shifts_) v = rng.uniform();
}

QmcEstimate ShiftedSobol::summarize(std::span<const double> replicate_means) {
  const auto m = static_cast<double>(replicate_means.size());
  double mean = 0.0;
  for (double v : replicate_means) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : replicate_means) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (m - 1.0) / m)};
}

void map_to_ball(std::span<const double> t, double r, std::span<double> out) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  switch (t.size()) {
    case 1:
      out[0] = (2.0 * t[0] - 1.0) * r;
      return;
    case 2: {
      const double rho = r * std::sqrt(t[0]);
      out[0] = rho * std::cos(kTwoPi * t[1]);
      out[1] = rho * std::sin(kTwoPi * t[1]);
      return;
    }
    case 3: {
      const double rho = r * std::cbrt(t[0]);
      const double z = 2.0 * t[1] - 1.0;
      const double planar = rho * std::sqrt(std::max(0.0, 1.0 - z * z));
      out[0] = planar * std::cos(kTwoPi * t[2]);
      out[1] = planar * std::sin(kTwoPi * t[2]);
      out[2] = rho * z;
      return;
    }
    default:
      throw DomainError("ball sampling supports dimensions 1 to 3");
  }
}

}  // namespace dppfit
