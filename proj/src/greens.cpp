#include "wosno/greens.hpp"

#include "wosno/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wosno {

namespace {

constexpr double kPi = std::numbers::pi;

// sinh(a) / sinh(b) for 0 <= a <= b, without overflow for large b.
double sinh_ratio(double a, double b) {
  if (b == 0.0) return 1.0;
  if (b < 20.0) return std::sinh(a) / std::sinh(b);
  return std::exp(a - b) * (-std::expm1(-2.0 * a)) / (-std::expm1(-2.0 * b));
}

// x / sinh(x)
double x_over_sinh(double x) {
  if (x < 1e-4) return 1.0 - x * x / 6.0;
  if (x > 700.0) return 0.0;
  return x / std::sinh(x);
}

}  // namespace

double ball_volume(int dim, double r) {
  if (dim == 2) return kPi * r * r;
  if (dim == 3) return 4.0 / 3.0 * kPi * r * r * r;
  throw Error("ball_volume: dimension must be 2 or 3");
}

double greens_ball(int dim, double r, double rho) {
  if (!(r > 0.0)) throw Error("greens_ball: radius must be positive");
  if (rho == 0.0) throw Error("singular query");
  if (rho < 0.0 || rho > r) throw Error("greens_ball: rho outside [0, r]");
  if (dim == 2) return std::log(r / rho) / (2.0 * kPi);
  if (dim < 2) throw Error("greens_ball: dimension must be >= 2");
  const double d = dim;
  const double prefactor = std::tgamma(d / 2.0 - 1.0) / (4.0 * std::pow(kPi, d / 2.0));
  return prefactor * (std::pow(rho, 2.0 - d) - std::pow(r, 2.0 - d));
}

double greens_ball_mass(int dim, double r) {
  if (!(r > 0.0)) throw Error("greens_ball_mass: radius must be positive");
  return r * r / (2.0 * dim);
}

ScreenedBallKernels::ScreenedBallKernels(double r, double sigma_bar)
    : r_(r), sigma_bar_(sigma_bar), k_(std::sqrt(std::max(sigma_bar, 0.0))) {
  if (!(r > 0.0)) throw Error("screened kernels: radius must be positive");
  if (!(sigma_bar >= 0.0) || !std::isfinite(sigma_bar))
    throw Error("screened kernels: sigma_bar must be >= 0");
  const double x = k_ * r_;
  surface_mass_ = x_over_sinh(x);
  if (x < 1e-4) {
    // (1 - x / sinh x) / k^2 expanded around x = 0
    green_integral_ = r_ * r_ * (1.0 / 6.0 - 7.0 * x * x / 360.0);
  } else {
    green_integral_ = (1.0 - surface_mass_) / sigma_bar_;
  }
}

ScreenedBallKernels screened_kernels_ball_3d(double r, double sigma_bar) {
  return ScreenedBallKernels(r, sigma_bar);
}

double ScreenedBallKernels::green(double rho) const {
  if (rho == 0.0) throw Error("singular query");
  if (rho < 0.0 || rho > r_) throw Error("screened green: rho outside [0, r]");
  if (k_ == 0.0) return (1.0 / rho - 1.0 / r_) / (4.0 * kPi);
  return sinh_ratio(k_ * (r_ - rho), k_ * r_) / (4.0 * kPi * rho);
}

double ScreenedBallKernels::sample_radius(Rng& rng) const {
  if (!(sigma_bar_ > 0.0)) throw Error("screened kernels: volume sampling needs sigma_bar > 0");
  const double s = k_ * r_;

  if (s < 1.0) {
    // Harmonic radial density 6 t (1 - t) is Beta(2, 2), the median of three
    // uniforms; correct by sinh(s(1-t)) / (s(1-t)), which is maximal at t = 0.
    const double bound = std::sinh(s) / s;
    for (;;) {
      double u[3] = {uniform01(rng), uniform01(rng), uniform01(rng)};
      std::sort(u, u + 3);
      const double t = u[1];
      const double a = s * (1.0 - t);
      const double ratio = a > 0.0 ? std::sinh(a) / a : 1.0;
      if (uniform01(rng) * bound <= ratio) return t * r_;
    }
  }

  // Invert the normalized radial CDF in t = rho / r. Both numerator and
  // denominator are scaled by 2 e^{-s}:
  //   F(t) = [(1 - e^{-2s}) - s t e^{-st}(1 + e^{-2s(1-t)}) - e^{-st}(1 - e^{-2s(1-t)})]
  //          / [(1 - e^{-2s}) - 2 s e^{-s}]
  const double norm = -std::expm1(-2.0 * s) - 2.0 * s * std::exp(-s);
  auto cdf = [&](double t) {
    const double e = std::exp(-s * t);
    const double w = std::exp(-2.0 * s * (1.0 - t));
    return (-std::expm1(-2.0 * s) - s * t * e * (1.0 + w) - e * (1.0 - w)) / norm;
  };
  auto pdf = [&](double t) {
    const double e = std::exp(-s * t);
    return s * s * t * e * (-std::expm1(-2.0 * s * (1.0 - t))) / norm;
  };

  const double u = uniform01(rng);
  double lo = 0.0, hi = 1.0, t = 0.5;
  for (int it = 0; it < 100; ++it) {
    const double f = cdf(t) - u;
    if (std::abs(f) < 1e-14) break;
    if (f > 0.0) hi = t; else lo = t;
    const double d = pdf(t);
    double next = d > 0.0 ? t - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15) break;
    t = next;
  }
  return t * r_;
}

}  // namespace wosno
