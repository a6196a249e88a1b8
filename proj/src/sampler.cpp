#include "dppfit/sampler.hpp"

#include "dppfit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace dppfit {
namespace {

// Calls f(k) for every integer vector k with max_i |k_i| == m. The first axis
// attaining |k_j| = m owns each vector, so the shell is visited exactly once.
template <class F>
void for_each_in_shell(int dim, int m, F&& f) {
  std::vector<int> k(dim);
  if (m == 0) {
    f(k);
    return;
  }
  for (int owner = 0; owner < dim; ++owner) {
    for (int sign : {-1, 1}) {
      k[owner] = sign * m;
      std::vector<int> lo(dim), hi(dim);
      for (int a = 0; a < dim; ++a) {
        if (a == owner) continue;
        lo[a] = a < owner ? -(m - 1) : -m;
        hi[a] = a < owner ? m - 1 : m;
        k[a] = lo[a];
      }
      bool empty = false;
      for (int a = 0; a < owner; ++a) empty |= lo[a] > hi[a];
      if (empty) continue;
      for (;;) {
        f(k);
        int a = 0;
        while (a < dim && (a == owner || k[a] == hi[a])) {
          if (a != owner) k[a] = lo[a];
          ++a;
        }
        if (a == dim) break;
        ++k[a];
      }
    }
  }
}

double mode_frequency_norm(const std::vector<int>& k, const RectWindow& w) {
  double s = 0.0;
  for (int a = 0; a < w.dim(); ++a) {
    const double xi = k[a] / w.side(a);
    s += xi * xi;
  }
  return std::sqrt(s);
}

void uniform_in_window(const RectWindow& w, RngStream& rng, std::vector<double>& x) {
  for (int a = 0; a < w.dim(); ++a) {
    x[a] = w.lower()[a] + rng.uniform() * w.side(a);
    if (x[a] >= w.upper()[a]) x[a] = std::nextafter(w.upper()[a], w.lower()[a]);
  }
}

}  // namespace

std::vector<int> SpectralApprox::mode(std::size_t index) const {
  const int d = window.dim();
  const auto width = static_cast<std::size_t>(2 * truncation_order + 1);
  std::vector<int> k(d);
  for (int a = 0; a < d; ++a) {
    k[a] = static_cast<int>(index % width) - truncation_order;
    index /= width;
  }
  return k;
}

double SpectralApprox::eigenvalue_sum() const {
  double s = 0.0;
  for (double e : eigenvalues) s += e;
  return s;
}

SpectralApprox build_spectral_approx(const KernelModel& model, const Theta& theta, const RectWindow& window,
                                     double tail_tol, int max_order) {
  validate_theta(model, theta);
  if (window.dim() != model.dim()) throw DomainError("window and kernel dimensions differ");
  if (!(tail_tol > 0.0 && tail_tol <= 0.1)) throw DomainError("tail_tol must lie in (0, 0.1]");
  check_existence(model, theta);

  const double target = theta.lambda * window.area();
  const int d = window.dim();
  double retained = 0.0;
  int order = -1;
  for (int m = 0; m <= max_order; ++m) {
    for_each_in_shell(d, m, [&](const std::vector<int>& k) {
      retained += spectral_density_radial(model, theta, mode_frequency_norm(k, window));
    });
    if (target - retained <= tail_tol * target) {
      order = m;
      break;
    }
  }
  if (order < 0)
    throw TruncationFailure("spectral truncation needs more than " + std::to_string(max_order) +
                            " modes per axis for tail tolerance " + std::to_string(tail_tol));

  SpectralApprox approx{window, order, {}, 0.0, target};
  const auto width = static_cast<std::size_t>(2 * order + 1);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= width;
  approx.eigenvalues.resize(total);
  std::vector<int> k(d, -order);
  for (std::size_t idx = 0; idx < total; ++idx) {
    approx.eigenvalues[idx] = spectral_density_radial(model, theta, mode_frequency_norm(k, window));
    for (int a = 0; a < d; ++a) {
      if (++k[a] <= order) break;
      k[a] = -order;
    }
  }
  approx.tail_mass = target - approx.eigenvalue_sum();
  return approx;
}

PointPattern sample_dpp(const SpectralApprox& approx, RngStream& rng) {
  const RectWindow& w = approx.window;
  const int d = w.dim();
  PointPattern pattern(w);

  std::vector<std::size_t> active;
  for (std::size_t idx = 0; idx < approx.eigenvalues.size(); ++idx)
    if (rng.uniform() < approx.eigenvalues[idx]) active.push_back(idx);
  const auto n = static_cast<Eigen::Index>(active.size());
  if (n == 0) return pattern;

  // Eigenfunctions factor over axes, so features come from per-axis tables
  // of exp(2 pi i k x_a / L_a), k = -M..M.
  const int order = approx.truncation_order;
  const int width = 2 * order + 1;
  std::vector<int> slot(static_cast<std::size_t>(n) * d);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto k = approx.mode(active[j]);
    for (int a = 0; a < d; ++a) slot[j * d + a] = a * width + k[a] + order;
  }
  std::vector<std::complex<double>> table(static_cast<std::size_t>(width) * d);

  const double area = w.area();
  const double amplitude = 1.0 / std::sqrt(area);
  const double bound = static_cast<double>(n) / area;

  // The current basis of the span orthogonal to the accepted features is the
  // first m columns of B0 H_1 ... H_k. Pending Householder reflectors H_j are
  // folded into B0 in blocks (compact WY form), and proposals are scored in
  // batches, so the n x m basis is streamed once per batch, not per proposal.
  constexpr int kBlock = 16;
  constexpr Eigen::Index kMaxBatch = 64;
  Eigen::MatrixXcd basis = Eigen::MatrixXcd::Identity(n, n);
  Eigen::Index m0 = n;
  Eigen::MatrixXcd v(n, kBlock);
  std::vector<double> tau;
  Eigen::MatrixXcd features(n, kMaxBatch), coeffs(n, kMaxBatch);
  std::vector<double> xs(static_cast<std::size_t>(kMaxBatch) * d), us(kMaxBatch);
  std::vector<double> x(d);

  auto flush = [&](Eigen::Index keep) {
    const auto k = static_cast<Eigen::Index>(tau.size());
    if (k == 0) return;
    auto vk = v.topLeftCorner(m0, k);
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      t(j, j) = tau[j];
      if (j > 0)
        t.col(j).head(j) = -tau[j] * t.topLeftCorner(j, j) * (vk.leftCols(j).adjoint() * vk.col(j));
    }
    auto b0 = basis.leftCols(m0);
    const Eigen::MatrixXcd bv = b0 * vk;
    basis.leftCols(keep).noalias() -= bv * t * vk.topRows(keep).adjoint();
    m0 = keep;
    tau.clear();
  };

  for (Eigen::Index m = n; m > 0; --m) {
    std::uint64_t proposals = 0;
    Eigen::Index hit = -1;
    while (hit < 0) {
      const auto batch = std::clamp<Eigen::Index>(
          static_cast<Eigen::Index>(std::ceil(1.25 * static_cast<double>(n) / static_cast<double>(m))), 1,
          kMaxBatch);
      for (Eigen::Index s = 0; s < batch; ++s) {
        uniform_in_window(w, rng, x);
        us[s] = rng.uniform();
        std::copy(x.begin(), x.end(), xs.begin() + s * d);
        for (int a = 0; a < d; ++a) {
          const double step = 2.0 * std::numbers::pi * (x[a] - w.lower()[a]) / w.side(a);
          for (int q = 0; q < width; ++q) table[a * width + q] = std::polar(1.0, step * (q - order));
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          std::complex<double> f = amplitude;
          for (int a = 0; a < d; ++a) f *= table[slot[j * d + a]];
          features(j, s) = f;
        }
      }
      auto g = coeffs.topLeftCorner(m0, batch);
      g.noalias() = basis.leftCols(m0).adjoint() * features.leftCols(batch);
      for (std::size_t r = 0; r < tau.size(); ++r) {
        auto vr = v.col(static_cast<Eigen::Index>(r)).head(m0);
        g -= (tau[r] * vr) * (vr.adjoint() * g);
      }
      for (Eigen::Index s = 0; s < batch; ++s) {
        if (++proposals > kMaxProposalsPerPoint)
          throw SamplerStall("projection DPP sampler exceeded the proposal budget");
        if (us[s] * bound < g.col(s).head(m).squaredNorm()) {
          hit = s;
          break;
        }
      }
    }
    pattern.add(std::span<const double>(xs).subspan(hit * d, d));
    if (m == 1) break;

    // Householder reflection sending the coefficients to a multiple of
    // e_{m-1}; the first m-1 reflected columns span the orthocomplement.
    const auto c = coeffs.col(hit).head(m);
    const double norm = c.norm();
    const std::complex<double> last = c(m - 1);
    const std::complex<double> unit = std::abs(last) > 0.0 ? last / std::abs(last) : std::complex<double>(1.0);
    const auto r = static_cast<Eigen::Index>(tau.size());
    v.col(r).setZero();
    v.col(r).head(m) = c;
    v(m - 1, r) += unit * norm;
    tau.push_back(2.0 / v.col(r).head(m).squaredNorm());
    if (static_cast<int>(tau.size()) == kBlock) flush(m - 1);
  }
  return pattern;
}

PointPattern sample_poisson(double lambda, const RectWindow& window, RngStream& rng) {
  if (!(lambda >= 0.0)) throw DomainError("Poisson intensity must be non-negative");
  PointPattern pattern(window);
  const std::uint64_t count = rng.poisson(lambda * window.area());
  std::vector<double> x(window.dim());
  for (std::uint64_t i = 0; i < count; ++i) {
    uniform_in_window(window, rng, x);
    pattern.add(x);
  }
  return pattern;
}

}  // namespace dppfit
