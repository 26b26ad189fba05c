#pragma once

#include "wosno/geometry.hpp"
#include "wosno/walker.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace wosno {

// Poisson problem  Delta u = f  on a polar domain, with
//   f(x) = sum_i beta_i exp(-|x - mu_i|^2)
//   g(x) = b0 + b1 cos(t) + b2 sin(t) + b3 cos(2t) + b4 sin(2t),  t = atan2(y, x).
struct LinearInstance {
  double c1 = 0.0, c2 = 0.0;
  std::array<double, 2> beta{};
  std::array<Vec2, 2> mu{Vec2::Zero(), Vec2::Zero()};
  std::array<double, 5> b{};

  PolarDomain domain(std::size_t angular_samples = PolarDomain::kDefaultSamples) const {
    return PolarDomain(1.0, c1, c2, angular_samples);
  }
};

// c1, c2 ~ U(-0.2, 0.2); beta ~ U(-1, 1); mu ~ U([-0.5, 0.5]^2); b ~ U(-1, 1).
LinearInstance sample_linear_instance(Rng& rng);

double eval_boundary_linear(const LinearInstance& inst, const Vec2& x);
double eval_source_linear(const LinearInstance& inst, const Vec2& x);

// Point and the 13 instance parameters: c1, c2, beta1, beta2, mu1, mu2, b0..b4.
constexpr std::size_t kLinearFeatureCount = 15;
std::vector<double> linear_features(const LinearInstance& inst, const Vec2& x);

PoissonProblem<2> make_linear_problem(const LinearInstance& inst, const Domain<2>& domain);

// Varying-coefficient problem  div(alpha grad u) - sigma u = -f  on a mesh, with
// a manufactured solution u = g.
struct VcInstance {
  double phi_alpha = 1.0;
  double a_min = 0.5;
  double a_max = 1.0;
  std::string mesh;  // OBJ path of the domain
};

// phi_alpha ~ U(0.5, 1.5); a_min ~ U(0.1, 1); a_max = a_min + U(0, 2).
VcInstance sample_vc_instance(Rng& rng, const std::string& mesh);

struct VcFields {
  double alpha = 1.0;
  Vec3 grad_alpha = Vec3::Zero();
  double lap_alpha = 0.0;
  double sigma = 0.0;
  double g = 0.0;
  Vec3 grad_g = Vec3::Zero();
  double lap_g = 0.0;
  double f = 0.0;
  // sigma / alpha + Delta sqrt(alpha) / sqrt(alpha)
  double sigma_prime = 0.0;
};

VcFields eval_vc_fields(const VcInstance& inst, const Vec3& x);

ScreenedCoefficients vc_coefficients(const VcInstance& inst, const Vec3& x);

// 1.1 * max sigma' over `probes` interior points, floored at a_min.
double estimate_sigma_bar(const VcInstance& inst, const Domain<3>& domain, Rng& rng,
                          std::size_t probes = 10000);

ScreenedProblem make_vc_problem(const VcInstance& inst, const Domain<3>& domain);

// Point and phi_alpha, a_min, a_max.
constexpr std::size_t kVcFeatureCount = 6;
std::vector<double> vc_features(const VcInstance& inst, const Vec3& x);

void to_json(nlohmann::json& j, const LinearInstance& inst);
void from_json(const nlohmann::json& j, LinearInstance& inst);
void to_json(nlohmann::json& j, const VcInstance& inst);
void from_json(const nlohmann::json& j, VcInstance& inst);

// Writes one JSON file per instance plus manifest.json listing them.
void write_dataset(const std::string& dir, const std::vector<LinearInstance>& instances);
void write_dataset(const std::string& dir, const std::vector<VcInstance>& instances);
std::vector<LinearInstance> read_linear_dataset(const std::string& dir);
std::vector<VcInstance> read_vc_dataset(const std::string& dir);

// Domain from {"kind": "polar"|"mesh"|"ball", "r0", "c1", "c2", "path", "radius", "dim"}.
std::unique_ptr<Domain<2>> make_domain_2d(const nlohmann::json& spec);
std::unique_ptr<Domain<3>> make_domain_3d(const nlohmann::json& spec);

}  // namespace wosno
