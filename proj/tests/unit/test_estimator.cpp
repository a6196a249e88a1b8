#include "dppfit/error.hpp"
#include "dppfit/estimator.hpp"
#include "dppfit/quadrature.hpp"
#include "dppfit/rng.hpp"
#include "dppfit/sampler.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace dppfit;

namespace {

constexpr double kPi = std::numbers::pi;

// Ktilde_2 with C = 0 on a rectangle L1 x L2, r <= min side:
// int_{|u| <= r} (L1 - |u1|)(L2 - |u2|) du.
double no_correlation_k2(double l1, double l2, double r) {
  return kPi * r * r * l1 * l2 - 4.0 / 3.0 * r * r * r * (l1 + l2) + r * r * r * r / 2.0;
}

PointPattern simulated(double n, std::uint64_t index, const KernelModel& m = KernelModel::gaussian()) {
  const SpectralApprox a = build_spectral_approx(m, {10.0, {0.1}}, RectWindow::cube(n));
  RngStream rng(2024, index);
  return sample_dpp(a, rng);
}

// Ktilde_2 by direct numerical integration of gamma_D over spheres of radius
// s (angular product rule) and then over s.
double k2_oracle(const KernelModel& m, double alpha, const RectWindow& w, double r) {
  const int d = w.dim();
  auto cov = [&](std::span<const double> u) { return w.set_covariance(u); };
  auto angular = [&](double s) {
    double acc = 0.0;
    if (d == 2) {
      const int n = 4000;
      for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * 2 * kPi / n;
        const double u[] = {s * std::cos(t), s * std::sin(t)};
        acc += cov(u) * 2 * kPi / n;
      }
    } else {
      const int n = 300;
      for (int i = 0; i < n; ++i) {
        const double ph = (i + 0.5) * kPi / n;
        for (int j = 0; j < 2 * n; ++j) {
          const double ps = (j + 0.5) * kPi / n;
          const double u[] = {s * std::sin(ph) * std::cos(ps), s * std::sin(ph) * std::sin(ps), s * std::cos(ph)};
          acc += cov(u) * std::sin(ph) * (kPi / n) * (kPi / n);
        }
      }
    }
    return acc;
  };
  double total = 0.0;
  const int panels = 60;
  for (int k = 0; k < panels; ++k) {
    // Panels graded towards the origin, where 1 - C^2 varies on the scale alpha.
    const double a = r * std::pow(static_cast<double>(k) / panels, 2.0), b = r * std::pow((k + 1.0) / panels, 2.0);
    const QuadRule q = gauss_legendre(d == 2 ? 16 : 8, a, b);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double s = q.nodes[i];
      total += q.weights[i] * angular(s) * std::pow(s, d - 1) * one_minus_corr_sq(m, alpha, s);
    }
  }
  return total;
}

CLConfig config(int order, double r, NormalizerKind kind = NormalizerKind::window) {
  CLConfig c;
  c.order = order;
  c.radius = r;
  c.normalizer = kind;
  c.alpha_box = ParamBox{{0.01}, {1.0}};
  return c;
}

}  // namespace

TEST_SUITE("estimator") {
  TEST_CASE("intensity estimate") {
    const PointPattern p(RectWindow::cube(2.0), {0.1, 0.1, 1.0, 1.0, 1.5, 0.2});
    CHECK(fit_intensity(p).lambda_hat == doctest::Approx(0.75));
    const IntensityFit e = fit_intensity(PointPattern(RectWindow::cube(2.0)));
    CHECK(e.lambda_hat == 0.0);
    CHECK(e.empty_pattern);
  }

  TEST_CASE("normalizer without correlation reduces to the window integral") {
    const auto g = KernelModel::gaussian();
    const RectWindow w({0.0, 0.0}, {3.0, 2.0});
    for (double r : {0.1, 0.9, 2.0}) {
      CHECK(normalizer_k2(g, 1e-6, w, r).value == doctest::Approx(no_correlation_k2(3.0, 2.0, r)).epsilon(1e-10));
    }
  }

  TEST_CASE("polar normalizer agrees with direct integration") {
    const RectWindow w({0.0, 0.0}, {5.0, 4.0});
    for (const auto& m : {KernelModel::gaussian(), KernelModel::laplace(), KernelModel::cauchy(0.5)}) {
      for (double a : {0.05, 0.3}) {
        for (double r : {0.3, 1.5}) {
          INFO(m.name(), " alpha=", a, " r=", r);
          const double k = normalizer_k2(m, a, w, r).value;
          CHECK(k == doctest::Approx(k2_oracle(m, a, w, r)).epsilon(1e-6));
          // The masked tensor rule is coarse.
          CHECK(k == doctest::Approx(normalizer_k2_tensor(m, a, w, r, 64)).epsilon(2e-2));
        }
      }
    }
  }

  TEST_CASE("normalizer in one and three dimensions") {
    const double a = 0.2, r = 0.5;
    const auto g1 = KernelModel::gaussian(1);
    const RectWindow w1({0.0}, {3.0});
    // 2 int_0^r (L - s)(1 - C(s)^2) ds by the trapezoid-free midpoint sum.
    double oracle = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double s = (i + 0.5) * r / n;
      oracle += 2.0 * (3.0 - s) * one_minus_corr_sq(g1, a, s) * r / n;
    }
    CHECK(normalizer_k2(g1, a, w1, r).value == doctest::Approx(oracle).epsilon(1e-8));
    // Beyond the side only lags below L contribute.
    double wide = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = (i + 0.5) * 3.0 / n;
      wide += 2.0 * (3.0 - s) * one_minus_corr_sq(g1, a, s) * 3.0 / n;
    }
    CHECK(normalizer_k2(g1, a, w1, 4.0).value == doctest::Approx(wide).epsilon(1e-8));

    const auto g3 = KernelModel::gaussian(3);
    const RectWindow w3({0.0, 0.0, 0.0}, {2.0, 2.5, 3.0});
    for (double r3 : {0.5, 2.2}) {
      INFO("r=", r3);
      CHECK(normalizer_k2(g3, a, w3, r3).value == doctest::Approx(k2_oracle(g3, a, w3, r3)).epsilon(1e-5));
    }
  }

  TEST_CASE("normalizer derivatives") {
    const RectWindow w = RectWindow::cube(5.0);
    for (const auto& m : {KernelModel::gaussian(), KernelModel::laplace(), KernelModel::cauchy(1.0)}) {
      for (auto kind : {NormalizerKind::window, NormalizerKind::limiting}) {
        const double a = 0.1, h = 1e-5, r = 0.625;
        const Normalizer k = normalizer_k2(m, a, w, r, kind);
        const double up = normalizer_k2(m, a + h, w, r, kind).value, dn = normalizer_k2(m, a - h, w, r, kind).value;
        CHECK(k.d_alpha == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
        CHECK(k.d2_alpha == doctest::Approx((up - 2 * k.value + dn) / (h * h)).epsilon(1e-3));
      }
    }
  }

  TEST_CASE("limiting normalizer is the area times the ball integral") {
    const RectWindow w = RectWindow::cube(5.0);
    for (const auto& m : {KernelModel::gaussian(), KernelModel::laplace(), KernelModel::cauchy(0.5)}) {
      const double a = 0.1, r = 0.625;
      double k = 0.0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) * r / n;
        k += 2 * kPi * s * one_minus_corr_sq(m, a, s) * r / n;
      }
      CHECK(limiting_normalizer(m, a, r).value == doctest::Approx(k).epsilon(1e-7));
      CHECK(normalizer_k2(m, a, w, r, NormalizerKind::limiting).value == doctest::Approx(25.0 * k).epsilon(1e-7));
      // The edge only removes mass.
      CHECK(normalizer_k2(m, a, w, r).value < 25.0 * k);
    }
  }

  TEST_CASE("radius beyond the shortest side") {
    const auto g = KernelModel::gaussian();
    const RectWindow w({0.0, 0.0}, {1.0, 0.6});
    for (double r : {0.8, 1.1, 1.3}) {
      INFO("r=", r);
      CHECK(normalizer_k2(g, 0.1, w, r).value == doctest::Approx(k2_oracle(g, 0.1, w, r)).epsilon(1e-6));
    }
    // Every lag of the window is inside the ball: the full integral of gamma_D (1 - C^2).
    CHECK(normalizer_k2(g, 1e-6, w, 1.3).value == doctest::Approx(0.36).epsilon(1e-8));
  }

  TEST_CASE("one pair gives the closed-form contrast") {
    const auto g = KernelModel::gaussian();
    const RectWindow w = RectWindow::cube(5.0);
    const PointPattern p(w, {1.0, 1.0, 1.03, 1.04});
    const double a = 0.08, r = 0.625;
    const double expect = 2.0 * (std::log(one_minus_corr_sq(g, a, 0.05)) - std::log(normalizer_k2(g, a, w, r).value));
    const double alpha[] = {a};
    CHECK(cl2(g, alpha, p, r) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(PairContrast(g, p, r).pairs() == 2);
  }

  TEST_CASE("contrast invariances") {
    const auto g = KernelModel::gaussian();
    const PointPattern p = simulated(3.0, 1);
    const double r = 0.375, alpha[] = {0.09};
    const double base = cl2(g, alpha, p, r);

    std::vector<double> coords(p.coords().begin(), p.coords().end());
    // A point farther than r from every other leaves the pairs unchanged.
    std::vector<double> extended = coords;
    extended.insert(extended.end(), {5.9, 5.9});
    const PointPattern near(RectWindow::cube(6.0), coords);
    const PointPattern far(RectWindow::cube(6.0), extended);
    CHECK(cl2(g, alpha, far, r) == doctest::Approx(cl2(g, alpha, near, r)).epsilon(1e-12));

    // Relabeling by reversal.
    std::vector<double> reversed;
    for (std::size_t i = p.size(); i-- > 0;) reversed.insert(reversed.end(), {p.point(i)[0], p.point(i)[1]});
    CHECK(cl2(g, alpha, PointPattern(p.window(), reversed), r) == doctest::Approx(base).epsilon(1e-12));

    // Translating pattern and window together.
    std::vector<double> shifted = coords;
    for (std::size_t i = 0; i < shifted.size(); i += 2) {
      shifted[i] += 10.0;
      shifted[i + 1] -= 4.0;
    }
    const PointPattern moved(RectWindow({10.0, -4.0}, {13.0, -1.0}), shifted);
    CHECK(cl2(g, alpha, moved, r) == doctest::Approx(base).epsilon(1e-9));
  }

  TEST_CASE("no pairs") {
    const auto g = KernelModel::gaussian();
    const PointPattern p(RectWindow::cube(5.0), {1.0, 1.0, 3.0, 3.0});
    const double alpha[] = {0.1};
    CHECK_THROWS_AS(cl2(g, alpha, p, 0.5), NoPairs);
    CHECK_THROWS_AS(fit_alpha2(g, p, 0.5, ParamBox{{0.01}, {1.0}}), NoPairs);
    CHECK_THROWS_AS(fit_two_step(g, PointPattern(RectWindow::cube(5.0)), config(2, 0.5)), NoPairs);
    CHECK_THROWS_AS(cl2(g, alpha, p, 0.0), DomainError);
  }

  TEST_CASE("score matches a central difference of the contrast") {
    const PointPattern p = simulated(4.0, 2);
    for (const auto& m : {KernelModel::gaussian(), KernelModel::laplace(), KernelModel::cauchy(0.5)}) {
      for (auto kind : {NormalizerKind::window, NormalizerKind::limiting}) {
        const PairContrast c(m, p, 0.5, kind);
        for (double a : {0.05, 0.1, 0.2}) {
          const double h = 1e-6;
          CHECK(c.score(a) == doctest::Approx((c.cl(a + h) - c.cl(a - h)) / (2 * h)).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }

  TEST_CASE("fit reaches a stationary point of the contrast") {
    const auto g = KernelModel::gaussian();
    const PointPattern p = simulated(5.0, 3);
    for (auto kind : {NormalizerKind::window, NormalizerKind::limiting}) {
      const AlphaFit f = fit_alpha2(g, p, 0.625, ParamBox{{0.01}, {1.0}}, 64, 1e-8, kind);
      const double a = f.alpha_hat[0];
      CHECK(a > 0.05);
      CHECK(a < 0.15);
      CHECK_FALSE(f.diagnostics.boundary_hit);
      CHECK(f.score_norm <= 1e-8 * static_cast<double>(f.n_tuples));
      const PairContrast c(g, p, 0.625, kind);
      CHECK(f.cl_value >= c.cl(a * (1 + 1e-4)));
      CHECK(f.cl_value >= c.cl(a * (1 - 1e-4)));
    }
  }

  TEST_CASE("collapsed box returns its point") {
    const auto g = KernelModel::gaussian();
    const PointPattern p = simulated(3.0, 4);
    const AlphaFit f = fit_alpha2(g, p, 0.375, ParamBox{{0.1}, {0.1}});
    CHECK(f.alpha_hat[0] == 0.1);
    CHECK_THROWS_AS(fit_alpha2(g, p, 0.375, ParamBox{{0.2}, {0.1}}), DomainError);
  }

  TEST_CASE("one close pair: a pair near the radius favours long range") {
    const auto g = KernelModel::gaussian();
    const RectWindow w = RectWindow::cube(5.0);
    const ParamBox box{{0.01}, {1.0}};
    const AlphaFit near = fit_alpha2(g, PointPattern(w, {2.0, 2.0, 2.1, 2.0}), 0.5, box);
    const AlphaFit far = fit_alpha2(g, PointPattern(w, {2.0, 2.0, 2.45, 2.0}), 0.5, box);
    // As alpha grows the pair distance density tends to s^2 on the ball, so a
    // pair beyond r / sqrt(2) drives alpha to the upper bound.
    CHECK(near.alpha_hat[0] < far.alpha_hat[0]);
    CHECK_FALSE(near.diagnostics.boundary_hit);
    CHECK(far.diagnostics.boundary_hit);
    CHECK(far.alpha_hat[0] == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("coincident points are flagged degenerate") {
    const auto g = KernelModel::gaussian();
    const PointPattern p(RectWindow::cube(5.0), {1.0, 1.0, 1.0, 1.0});
    CHECK_THROWS_AS(fit_alpha2(g, p, 0.5, ParamBox{{0.01}, {1.0}}), DegenerateLikelihood);
  }

  TEST_CASE("QMC normalizer of order two agrees with the exact one") {
    const auto g = KernelModel::gaussian();
    const RectWindow w = RectWindow::cube(5.0);
    for (auto kind : {NormalizerKind::window, NormalizerKind::limiting}) {
      const NormalizerEstimate e = normalizer_kp(g, 0.1, w, 0.625, 2, {}, 1e-3, kNormalizerMaxPoints, kind);
      const double exact = normalizer_k2(g, 0.1, w, 0.625, kind).value;
      CHECK(std::abs(e.value - exact) / exact < std::max(5.0 * e.rel_error, 1e-4));
      CHECK(e.rel_error <= 1e-3);
    }
  }

  TEST_CASE("third-order normalizer against plain Monte Carlo") {
    const auto g = KernelModel::gaussian();
    const RectWindow w = RectWindow::cube(2.0);
    const double a = 0.1, r = 0.3;
    const NormalizerEstimate e = normalizer_kp(g, a, w, r, 3);
    const double vb = kPi * r * r;
    CHECK(e.value > 0.0);
    CHECK(e.value <= w.area() * vb * vb);

    RngStream rng(99, 0);
    const int n = 400000;
    double s = 0.0, s2 = 0.0;
    double x[3][2];
    const double alpha[] = {a};
    for (int i = 0; i < n; ++i) {
      x[0][0] = 2.0 * rng.uniform();
      x[0][1] = 2.0 * rng.uniform();
      bool inside = true;
      for (int j = 1; j < 3; ++j) {
        double u, v;
        do {
          u = 2 * rng.uniform() - 1;
          v = 2 * rng.uniform() - 1;
        } while (u * u + v * v > 1.0);
        x[j][0] = x[0][0] + r * u;
        x[j][1] = x[0][1] + r * v;
        inside = inside && w.contains(std::span<const double>(x[j], 2));
      }
      double f = 0.0;
      if (inside) {
        const PointView pts[] = {std::span<const double>(x[0], 2), std::span<const double>(x[1], 2),
                                 std::span<const double>(x[2], 2)};
        f = reduced_joint_intensity(g, alpha, pts).value;
      }
      s += f;
      s2 += f * f;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    const double scale = w.area() * vb * vb;
    CHECK(std::abs(e.value - scale * mean) < 4.0 * scale * se + 3.0 * e.rel_error * e.value);

    const NormalizerEstimate lim = normalizer_kp(g, a, w, r, 3, {}, 1e-3, kNormalizerMaxPoints, NormalizerKind::limiting);
    CHECK(lim.value > e.value);
  }

  TEST_CASE("higher-order fits") {
    const auto g = KernelModel::gaussian();
    const PointPattern p = simulated(4.0, 5);
    const AlphaFit f2 = fit_alphap(g, p, config(2, 0.5));
    const AlphaFit d2 = fit_alpha2(g, p, 0.5, ParamBox{{0.01}, {1.0}});
    CHECK(f2.alpha_hat[0] == d2.alpha_hat[0]);
    CHECK(f2.cl_value == d2.cl_value);

    CLConfig c3 = config(3, 0.5);
    c3.qmc.points = 1u << 10;
    const AlphaFit f3 = fit_alphap(g, p, c3);
    CHECK(f3.alpha_hat[0] > 0.04);
    CHECK(f3.alpha_hat[0] < 0.2);
    CHECK(f3.n_tuples > 0);

    // Two isolated pairs: pairs exist but no close triple.
    const PointPattern sparse(RectWindow::cube(5.0), {1.0, 1.0, 1.1, 1.0, 3.0, 3.0, 3.1, 3.0});
    CHECK_THROWS_AS(fit_alphap(g, sparse, c3), NoPairs);
  }

  TEST_CASE("config validation") {
    const auto g = KernelModel::gaussian();
    CHECK_THROWS_AS(config(5, 0.5).validate(g), DomainError);
    CHECK_THROWS_AS(config(2, -1.0).validate(g), DomainError);
    CHECK(normalizer_kind_from_string("limiting") == NormalizerKind::limiting);
    CHECK(to_string(NormalizerKind::window) == "window");
    CHECK_THROWS_AS(normalizer_kind_from_string("edge"), DomainError);
  }

  TEST_CASE("two-step fit") {
    const auto g = KernelModel::gaussian();
    const PointPattern p = simulated(5.0, 6);
    const FitResult f = fit_two_step(g, p, config(2, 0.625));
    CHECK(f.lambda_hat == doctest::Approx(static_cast<double>(p.size()) / 25.0));
    CHECK(f.n_tuples == PairContrast(g, p, 0.625).pairs());
    CHECK(f.normalizer == doctest::Approx(normalizer_k2(g, f.alpha_hat[0], p.window(), 0.625).value));
  }
}
