#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wosno/greens.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace wosno;
using std::numbers::pi;

namespace {

double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-11);
}

// phi(R) for phi'' + (2 / rho) phi' = sigma_bar phi, phi(0) = 1, phi'(0) = 0,
// by RK4 started from the series phi = 1 + sigma_bar rho^2 / 6 near the origin.
double shoot(double sigma_bar, double R, int steps = 20000) {
  double rho = 1e-6 * R;
  double y = 1.0 + sigma_bar * rho * rho / 6.0;
  double dy = sigma_bar * rho / 3.0;
  const double h = (R - rho) / steps;
  auto f = [&](double x, double u, double du) { return sigma_bar * u - 2.0 / x * du; };
  for (int i = 0; i < steps; ++i) {
    const double k1 = dy, l1 = f(rho, y, dy);
    const double k2 = dy + 0.5 * h * l1, l2 = f(rho + 0.5 * h, y + 0.5 * h * k1, dy + 0.5 * h * l1);
    const double k3 = dy + 0.5 * h * l2, l3 = f(rho + 0.5 * h, y + 0.5 * h * k2, dy + 0.5 * h * l2);
    const double k4 = dy + h * l3, l4 = f(rho + h, y + h * k3, dy + h * l3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    dy += h / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
    rho += h;
  }
  return y;
}

}  // namespace

TEST_CASE("greens_ball examples") {
  CHECK(greens_ball(2, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(greens_ball(2, 1.0, std::exp(-1.0)) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-12));
  CHECK(greens_ball(3, 1.0, 0.5) == doctest::Approx(1.0 / (4 * pi)).epsilon(1e-12));
  CHECK(greens_ball(3, 2.0, 0.5) == doctest::Approx((2.0 - 0.5) / (4 * pi)).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(greens_ball(2, 1.0, 0.0), "singular query", Error);
}

TEST_CASE("greens_ball is positive, decreasing and zero on the sphere") {
  for (int d : {2, 3})
    for (double r : {0.5, 1.0, 2.0}) {
      double prev = INFINITY;
      for (int i = 1; i <= 1000; ++i) {
        const double g = greens_ball(d, r, r * i / 1000.0);
        CHECK(g >= 0.0);
        CHECK(g < prev);
        prev = g;
      }
      CHECK(greens_ball(d, r, r) == doctest::Approx(0.0));
    }
}

TEST_CASE("greens_ball_mass against radial quadrature") {
  CHECK(greens_ball_mass(2, 1.0) == doctest::Approx(0.25));
  CHECK(greens_ball_mass(3, 1.0) == doctest::Approx(1.0 / 6.0));
  CHECK(greens_ball_mass(2, 2.0) == doctest::Approx(1.0));
  for (double r : {0.5, 1.0, 2.0}) {
    const double m2 = quad([&](double rho) { return rho > 0 ? 2 * pi * rho * greens_ball(2, r, rho) : 0.0; }, 0, r);
    const double m3 = quad([&](double rho) { return rho > 0 ? 4 * pi * rho * rho * greens_ball(3, r, rho) : 0.0; }, 0, r);
    CHECK(greens_ball_mass(2, r) == doctest::Approx(m2).epsilon(1e-10));
    CHECK(greens_ball_mass(3, r) == doctest::Approx(m3).epsilon(1e-10));
  }
}

TEST_CASE("Monte Carlo Green's mass, 1e6 plain uniform samples") {
  // Plain (unstratified) estimate; tolerance is the mass identity's 0.5% at
  // roughly 3 standard errors for d = 3.
  for (int d : {2, 3})
    for (double r : {0.5, 1.0, 2.0}) {
      Rng rng(1000 + d * 10 + static_cast<int>(r * 2));
      double sum = 0.0;
      const int n = 1'000'000;
      for (int i = 0; i < n; ++i) {
        double u;
        do u = uniform01(rng);
        while (u == 0.0);
        sum += greens_ball(d, r, r * (d == 2 ? std::sqrt(u) : std::cbrt(u)));
      }
      const double mc = ball_volume(d, r) * sum / n;
      CHECK(std::abs(mc / greens_ball_mass(d, r) - 1.0) < 5e-3);
    }
}

TEST_CASE("screened kernels: harmonic limit") {
  const auto k0 = screened_kernels_ball_3d(1.3, 0.0);
  CHECK(k0.surface_mass() == 1.0);
  CHECK(k0.volume_mass() == 0.0);
  const double s = screened_kernels_ball_3d(1.0, 1e-8).surface_mass();
  CHECK(s >= 1.0 - 1e-6);
  CHECK(s <= 1.0);
}

TEST_CASE("screened surface mass r=1, sigma_bar=1") {
  const auto k = screened_kernels_ball_3d(1.0, 1.0);
  CHECK(k.surface_mass() == doctest::Approx(1.0 / std::sinh(1.0)).epsilon(1e-12));
  CHECK(k.surface_mass() == doctest::Approx(0.8509181282).epsilon(1e-9));
  CHECK(k.surface_mass() == doctest::Approx(1.0 / shoot(1.0, 1.0)).epsilon(1e-8));
}

TEST_CASE("screened kernels against the ODE and quadrature oracles") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const double r = uniform(rng, 0.05, 2.0);
    const double sigma_bar = std::pow(10.0, uniform(rng, -4.0, 2.0));
    const auto k = screened_kernels_ball_3d(r, sigma_bar);
    const double integral = quad([&](double rho) { return rho > 0 ? 4 * pi * rho * rho * k.green(rho) : 0.0; }, 0, r);
    // Balance identity with an independently integrated Green's function.
    CHECK(std::abs(k.surface_mass() + sigma_bar * integral - 1.0) < 1e-6);
    CHECK(k.green_integral() == doctest::Approx(integral).epsilon(1e-9));
    // Surface mass from radial shooting.
    CHECK(k.surface_mass() == doctest::Approx(1.0 / shoot(sigma_bar, r)).epsilon(1e-6));
  }
}

TEST_CASE("screened Green's function solves the radial equation") {
  const double r = 1.2, sigma_bar = 3.0;
  const auto k = screened_kernels_ball_3d(r, sigma_bar);
  CHECK(k.green(r) == doctest::Approx(0.0));
  for (double rho : {0.2, 0.5, 0.9}) {
    const double h = 1e-4;
    const double g0 = k.green(rho), gp = k.green(rho + h), gm = k.green(rho - h);
    const double lap = (gp - 2 * g0 + gm) / (h * h) + 2.0 / rho * (gp - gm) / (2 * h);
    CHECK(lap - sigma_bar * g0 == doctest::Approx(0.0).epsilon(1e-5).scale(g0));
  }
  // Fundamental singularity 1 / (4 pi rho).
  CHECK(k.green(1e-8) * 4 * pi * 1e-8 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("screened radial sampler follows rho^2 G(rho)") {
  for (double s : {0.3, 0.99, 1.0, 4.0, 30.0}) {
    const double r = 1.5, sigma_bar = (s / r) * (s / r);
    const auto k = screened_kernels_ball_3d(r, sigma_bar);
    auto density = [&](double rho) { return rho > 0 ? rho * rho * k.green(rho) : 0.0; };
    const double total = quad(density, 0, r);
    Rng rng(static_cast<std::uint64_t>(s * 100));
    const int n = 200000;
    std::vector<double> xs(n);
    for (auto& x : xs) {
      x = k.sample_radius(rng);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= r);
    }
    std::sort(xs.begin(), xs.end());
    // Kolmogorov-Smirnov distance against the quadrature CDF.
    double ks = 0.0;
    for (int q = 1; q < 50; ++q) {
      const double x = xs[static_cast<std::size_t>(q * n / 50)];
      const double cdf = quad(density, 0, x) / total;
      ks = std::max(ks, std::abs(cdf - double(q) / 50));
    }
    CHECK(ks < 0.006);
  }
}

TEST_CASE("volume sampling needs sigma_bar > 0") {
  Rng rng(1);
  CHECK_THROWS_AS(screened_kernels_ball_3d(1.0, 0.0).sample_radius(rng), Error);
}
