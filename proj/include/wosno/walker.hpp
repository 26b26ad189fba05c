#pragma once

#include "wosno/geometry.hpp"
#include "wosno/rng.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace wosno {

struct WalkConfig {
  // Capture tolerance, relative to the domain scale (Domain::scale()).
  double eps_shell = 1e-3;
  int max_steps = 1000;
  bool antithetic = false;
  // Screening majorant; delta-tracking walks only.
  double sigma_bar = 0.0;
  std::uint64_t rng_seed = 0;
};

// `absorbed`: a delta-tracking walk whose throughput reached zero; the rest of
// the trajectory cannot contribute.
enum class Termination : std::uint8_t { boundary, max_steps, absorbed };

struct TrajectoryResult {
  double value = 0.0;
  int steps_taken = 0;
  Termination terminated_by = Termination::boundary;
};

// Delta u = f in the domain, u = g on the boundary. An empty source means
// f = 0 and is never evaluated.
template <int D>
struct PoissonProblem {
  const Domain<D>* domain = nullptr;
  std::function<double(const Vec<D>&)> source;
  std::function<double(const Vec<D>&)> boundary;
};

// Optional per-step record, for diagnostics and tests.
template <int D>
struct WalkTrace {
  std::vector<Vec<D>> centers;
  std::vector<double> radii;
};

// One walk-on-spheres trajectory. Returns
//   g(xi_K) - sum_k |B_{r_k}| f(gamma_k) G_{r_k}(gamma_k, xi_k)
// with one uniform gamma_k per sphere. Walks stop inside the eps shell or after
// max_steps; both read g at the closest boundary point.
template <int D>
TrajectoryResult walk_poisson(const PoissonProblem<D>& problem, const Vec<D>& xi,
                              const WalkConfig& cfg, Rng& rng, WalkTrace<D>* trace = nullptr);

// Two walks driven by antipodal draws: the second uses -direction for both the
// next sphere point and the source sample. Each is marginally a plain walk.
template <int D>
std::pair<TrajectoryResult, TrajectoryResult> walk_poisson_antithetic(
    const PoissonProblem<D>& problem, const Vec<D>& xi, const WalkConfig& cfg, Rng& rng,
    std::pair<WalkTrace<D>, WalkTrace<D>>* trace = nullptr);

struct ScreenedCoefficients {
  double alpha = 1.0;        // diffusion coefficient
  double sigma_prime = 0.0;  // transformed absorption of the screened form
  double source = 0.0;       // f of  div(alpha grad u) - sigma u = -f
};

// div(alpha grad u) - sigma u = -f, u = g, after the substitution U = sqrt(alpha) u
// that turns it into  Delta U - sigma' U = -f / sqrt(alpha).
struct ScreenedProblem {
  const Domain<3>* domain = nullptr;
  std::function<ScreenedCoefficients(const Vec3&)> coefficients;
  std::function<double(const Vec3&)> boundary;
};

// One delta-tracking trajectory estimating u(xi). Uses cfg.sigma_bar as the
// constant screening majorant; throws NumericalError("majorant violated") if a
// visited point has sigma' > sigma_bar.
TrajectoryResult walk_screened_delta(const ScreenedProblem& problem, const Vec3& xi,
                                     const WalkConfig& cfg, Rng& rng);

}  // namespace wosno
