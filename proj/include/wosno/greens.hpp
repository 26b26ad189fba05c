#pragma once

#include "wosno/rng.hpp"

namespace wosno {

// Volume of the d-ball of radius r (d = 2 or 3).
double ball_volume(int dim, double r);

// Harmonic Green's function of the ball B_r for the Laplacian, evaluated
// between the centre and a point at distance rho:
//   d = 2:  (1 / 2 pi) log(r / rho)
//   d > 2:  Gamma(d/2 - 1) / (4 pi^{d/2}) (rho^{2-d} - r^{2-d})
// Throws "singular query" at rho = 0.
double greens_ball(int dim, double r, double rho);

// Integral of greens_ball over B_r: r^2 / (2d).
double greens_ball_mass(int dim, double r);

// Closed-form kernels of the screened operator  Delta u - sigma_bar u  on a 3D
// ball, seen from the centre, with k = sqrt(sigma_bar):
//   G(rho)       = sinh(k (r - rho)) / (4 pi rho sinh(k r))
//   surface mass = k r / sinh(k r)
// The identity surface_mass + sigma_bar * green_integral = 1 holds exactly
// (u = 1 solves Delta u - sigma_bar u = -sigma_bar).
class ScreenedBallKernels {
 public:
  ScreenedBallKernels(double r, double sigma_bar);

  double radius() const { return r_; }
  double sigma_bar() const { return sigma_bar_; }

  // Probability that the screened walk leaves through the sphere.
  double surface_mass() const { return surface_mass_; }
  // Probability of a volume event, sigma_bar * green_integral.
  double volume_mass() const { return 1.0 - surface_mass_; }
  // Integral of G over the ball, closed form.
  double green_integral() const { return green_integral_; }

  double green(double rho) const;

  // Radius of a volume event drawn with density proportional to
  // sigma_bar * G(rho) * 4 pi rho^2 on [0, r]. Requires sigma_bar > 0.
  double sample_radius(Rng& rng) const;

 private:
  double r_, sigma_bar_, k_;
  double surface_mass_;
  double green_integral_;
};

ScreenedBallKernels screened_kernels_ball_3d(double r, double sigma_bar);

}  // namespace wosno
