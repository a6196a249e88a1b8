#pragma once

// Simulation of stationary DPPs on a rectangle through the periodic Fourier
// approximation of the kernel: eigenvalue of mode k is the spectral density at
// k / L (L the side lengths), eigenfunction exp(2 pi i k.x / L) / sqrt|D|.

#include "dppfit/geometry.hpp"
#include "dppfit/kernel.hpp"
#include "dppfit/patterns.hpp"
#include "dppfit/rng.hpp"

#include <cstdint>
#include <vector>

namespace dppfit {

inline constexpr double kDefaultTailTolerance = 1e-3;
inline constexpr int kDefaultMaxTruncationOrder = 256;

/// Truncated spectral representation of lambda C_alpha on a window: modes
/// k in {-M..M}^d stored in mixed-radix order (axis 0 fastest).
struct SpectralApprox {
  RectWindow window;
  int truncation_order = 0;
  std::vector<double> eigenvalues;
  /// lambda |D| minus the retained eigenvalue mass.
  double tail_mass = 0.0;
  /// lambda |D|.
  double target_mass = 0.0;

  std::size_t num_modes() const { return eigenvalues.size(); }
  /// Integer frequency vector of mode `index`.
  std::vector<int> mode(std::size_t index) const;
  double eigenvalue_sum() const;
};

/// Smallest M whose box of modes leaves at most tail_tol * lambda |D| of the
/// expected count untruncated.
/// Throws ExistenceViolated, DomainError (tail_tol outside (0, 0.1]) or
/// TruncationFailure (M would exceed max_order).
SpectralApprox build_spectral_approx(const KernelModel& model, const Theta& theta, const RectWindow& window,
                                     double tail_tol = kDefaultTailTolerance,
                                     int max_order = kDefaultMaxTruncationOrder);

inline constexpr std::uint64_t kMaxProposalsPerPoint = 10'000'000;

/// One realization: Bernoulli selection of modes, then sequential sampling of
/// the projection DPP spanned by the selected eigenfunctions.
/// Throws SamplerStall if a point needs more than kMaxProposalsPerPoint proposals.
PointPattern sample_dpp(const SpectralApprox& approx, RngStream& rng);

/// Homogeneous Poisson process with intensity lambda on the window.
PointPattern sample_poisson(double lambda, const RectWindow& window, RngStream& rng);

}  // namespace dppfit
