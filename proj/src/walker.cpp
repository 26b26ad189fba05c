#include "wosno/walker.hpp"

#include "wosno/greens.hpp"

#include <cmath>

namespace wosno {

namespace {

template <int D>
void check_problem(const PoissonProblem<D>& problem, const WalkConfig& cfg) {
  if (problem.domain == nullptr) throw Error("walk: problem has no domain");
  if (!problem.boundary) throw Error("walk: problem has no boundary function");
  if (!(cfg.eps_shell > 0.0)) throw Error("walk: eps_shell must be positive");
  if (cfg.max_steps < 1) throw Error("walk: max_steps must be >= 1");
}

template <int D>
double radius_fraction(Rng& rng) {
  if constexpr (D == 2) {
    return std::sqrt(uniform01(rng));
  } else {
    return std::cbrt(uniform01(rng));
  }
}

// Draws for one sphere step, shared between the two walks of an antithetic pair.
template <int D>
struct StepDraws {
  Vec<D> direction;
  double source_fraction = 0.0;  // gamma = centre + r * source_fraction * source_direction
  Vec<D> source_direction;
};

template <int D>
StepDraws<D> draw_step(Rng& rng, bool with_source) {
  StepDraws<D> s;
  if (with_source) {
    // Uniform point of the ball away from the Green's function singularity.
    do {
      s.source_fraction = radius_fraction<D>(rng);
    } while (s.source_fraction < 1e-12);
    s.source_direction = uniform_direction<D>(rng);
  }
  s.direction = uniform_direction<D>(rng);
  return s;
}

// State of one walk advanced with externally supplied draws.
template <int D>
struct PoissonWalkState {
  explicit PoissonWalkState(const Vec<D>& start) : x(start) {}

  Vec<D> x;
  double source_sum = 0.0;
  int steps = 0;
  bool done = false;
  TrajectoryResult result;

  // `sign` flips every draw for the antithetic partner.
  void advance(const PoissonProblem<D>& problem, double eps, const StepDraws<D>& draws,
               double sign, WalkTrace<D>* trace) {
    const auto cp = problem.domain->closest_boundary_point(x);
    if (cp.distance < eps) {
      finish(problem, cp.point, Termination::boundary);
      return;
    }
    const double r = cp.distance;
    if (trace) {
      trace->centers.push_back(x);
      trace->radii.push_back(r);
    }
    if (problem.source) {
      const double rho = r * draws.source_fraction;
      const Vec<D> gamma = x + sign * rho * draws.source_direction;
      source_sum += ball_volume(D, r) * problem.source(gamma) * greens_ball(D, r, rho);
    }
    x += sign * r * draws.direction;
    ++steps;
  }

  void finish(const PoissonProblem<D>& problem, const Vec<D>& boundary_point, Termination how) {
    result.value = problem.boundary(boundary_point) - source_sum;
    result.steps_taken = steps;
    result.terminated_by = how;
    done = true;
  }

  // Called once max_steps sphere jumps have been taken.
  void truncate(const PoissonProblem<D>& problem, double eps) {
    const auto cp = problem.domain->closest_boundary_point(x);
    finish(problem, cp.point, cp.distance < eps ? Termination::boundary : Termination::max_steps);
  }
};

}  // namespace

template <int D>
TrajectoryResult walk_poisson(const PoissonProblem<D>& problem, const Vec<D>& xi,
                              const WalkConfig& cfg, Rng& rng, WalkTrace<D>* trace) {
  check_problem(problem, cfg);
  if (!problem.domain->contains(xi)) throw Error("exterior query");
  const double eps = cfg.eps_shell * problem.domain->scale();
  const bool with_source = static_cast<bool>(problem.source);

  PoissonWalkState<D> walk(xi);
  while (!walk.done) {
    if (walk.steps >= cfg.max_steps) {
      walk.truncate(problem, eps);
      break;
    }
    walk.advance(problem, eps, draw_step<D>(rng, with_source), 1.0, trace);
  }
  return walk.result;
}

template <int D>
std::pair<TrajectoryResult, TrajectoryResult> walk_poisson_antithetic(
    const PoissonProblem<D>& problem, const Vec<D>& xi, const WalkConfig& cfg, Rng& rng,
    std::pair<WalkTrace<D>, WalkTrace<D>>* trace) {
  check_problem(problem, cfg);
  if (!problem.domain->contains(xi)) throw Error("exterior query");
  const double eps = cfg.eps_shell * problem.domain->scale();
  const bool with_source = static_cast<bool>(problem.source);

  PoissonWalkState<D> a(xi);
  PoissonWalkState<D> b(xi);
  while (!a.done || !b.done) {
    const StepDraws<D> draws = draw_step<D>(rng, with_source);
    if (!a.done) {
      if (a.steps >= cfg.max_steps) a.truncate(problem, eps);
      else a.advance(problem, eps, draws, 1.0, trace ? &trace->first : nullptr);
    }
    if (!b.done) {
      if (b.steps >= cfg.max_steps) b.truncate(problem, eps);
      else b.advance(problem, eps, draws, -1.0, trace ? &trace->second : nullptr);
    }
  }
  return {a.result, b.result};
}

template TrajectoryResult walk_poisson<2>(const PoissonProblem<2>&, const Vec2&, const WalkConfig&,
                                          Rng&, WalkTrace<2>*);
template TrajectoryResult walk_poisson<3>(const PoissonProblem<3>&, const Vec3&, const WalkConfig&,
                                          Rng&, WalkTrace<3>*);
template std::pair<TrajectoryResult, TrajectoryResult> walk_poisson_antithetic<2>(
    const PoissonProblem<2>&, const Vec2&, const WalkConfig&, Rng&,
    std::pair<WalkTrace<2>, WalkTrace<2>>*);
template std::pair<TrajectoryResult, TrajectoryResult> walk_poisson_antithetic<3>(
    const PoissonProblem<3>&, const Vec3&, const WalkConfig&, Rng&,
    std::pair<WalkTrace<3>, WalkTrace<3>>*);

TrajectoryResult walk_screened_delta(const ScreenedProblem& problem, const Vec3& xi,
                                     const WalkConfig& cfg, Rng& rng) {
  if (problem.domain == nullptr || !problem.coefficients || !problem.boundary)
    throw Error("walk: incomplete screened problem");
  if (!(cfg.eps_shell > 0.0)) throw Error("walk: eps_shell must be positive");
  if (cfg.max_steps < 1) throw Error("walk: max_steps must be >= 1");
  if (!(cfg.sigma_bar > 0.0)) throw Error("walk: delta tracking needs sigma_bar > 0");
  if (!problem.domain->contains(xi)) throw Error("exterior query");

  const double sigma_bar = cfg.sigma_bar;
  const double eps = cfg.eps_shell * problem.domain->scale();
  const double sqrt_alpha_start = std::sqrt(problem.coefficients(xi).alpha);

  Vec3 x = xi;
  double throughput = 1.0;
  double accumulated = 0.0;
  TrajectoryResult result;

  auto finish_at_boundary = [&](const Vec3& point, Termination how) {
    // g' = sqrt(alpha) g
    const double g_prime = std::sqrt(problem.coefficients(point).alpha) * problem.boundary(point);
    result.value = (accumulated + throughput * g_prime) / sqrt_alpha_start;
    result.terminated_by = how;
    return result;
  };

  for (int k = 0; k < cfg.max_steps; ++k) {
    const auto cp = problem.domain->closest_boundary_point(x);
    if (cp.distance < eps) return finish_at_boundary(cp.point, Termination::boundary);

    const double r = cp.distance;
    const ScreenedBallKernels kernels(r, sigma_bar);
    result.steps_taken = k + 1;
    if (uniform01(rng) < kernels.surface_mass()) {
      x += r * uniform_direction<3>(rng);
      continue;
    }

    // Volume event: y ~ sigma_bar G(x, .) / volume_mass. The estimator of
    // int G [f' + (sigma_bar - sigma') U] is f'(y)/sigma_bar + (1 - sigma'(y)/sigma_bar) U(y).
    const double rho = kernels.sample_radius(rng);
    const Vec3 y = x + rho * uniform_direction<3>(rng);
    const ScreenedCoefficients c = problem.coefficients(y);
    if (c.sigma_prime > sigma_bar * (1.0 + 1e-12))
      throw NumericalError("majorant violated: sigma' = " + std::to_string(c.sigma_prime) +
                           " > sigma_bar = " + std::to_string(sigma_bar));
    accumulated += throughput * (c.source / std::sqrt(c.alpha)) / sigma_bar;
    throughput *= 1.0 - c.sigma_prime / sigma_bar;
    x = y;
    if (throughput == 0.0) {
      result.value = accumulated / sqrt_alpha_start;
      result.terminated_by = Termination::absorbed;
      return result;
    }
  }
  const auto cp = problem.domain->closest_boundary_point(x);
  return finish_at_boundary(cp.point,
                            cp.distance < eps ? Termination::boundary : Termination::max_steps);
}

}  // namespace wosno
