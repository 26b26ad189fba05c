#include "wosno/pde_family.hpp"

#include "wosno/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

namespace wosno {

namespace fs = std::filesystem;
using nlohmann::json;

LinearInstance sample_linear_instance(Rng& rng) {
  LinearInstance inst;
  inst.c1 = uniform(rng, -0.2, 0.2);
  inst.c2 = uniform(rng, -0.2, 0.2);
  for (auto& beta : inst.beta) beta = uniform(rng, -1.0, 1.0);
  for (auto& mu : inst.mu) {
    const double x = uniform(rng, -0.5, 0.5);
    const double y = uniform(rng, -0.5, 0.5);
    mu = Vec2(x, y);
  }
  for (auto& b : inst.b) b = uniform(rng, -1.0, 1.0);
  return inst;
}

double eval_boundary_linear(const LinearInstance& inst, const Vec2& x) {
  const double t = std::atan2(x.y(), x.x());
  const auto& b = inst.b;
  return b[0] + b[1] * std::cos(t) + b[2] * std::sin(t) + b[3] * std::cos(2.0 * t) +
         b[4] * std::sin(2.0 * t);
}

double eval_source_linear(const LinearInstance& inst, const Vec2& x) {
  return inst.beta[0] * std::exp(-(x - inst.mu[0]).squaredNorm()) +
         inst.beta[1] * std::exp(-(x - inst.mu[1]).squaredNorm());
}

std::vector<double> linear_features(const LinearInstance& inst, const Vec2& x) {
  return {x.x(),         x.y(),         inst.c1,       inst.c2,       inst.beta[0],
          inst.beta[1],  inst.mu[0].x(), inst.mu[0].y(), inst.mu[1].x(), inst.mu[1].y(),
          inst.b[0],     inst.b[1],     inst.b[2],     inst.b[3],     inst.b[4]};
}

PoissonProblem<2> make_linear_problem(const LinearInstance& inst, const Domain<2>& domain) {
  return {&domain, [inst](const Vec2& x) { return eval_source_linear(inst, x); },
          [inst](const Vec2& x) { return eval_boundary_linear(inst, x); }};
}

VcInstance sample_vc_instance(Rng& rng, const std::string& mesh) {
  VcInstance inst;
  inst.phi_alpha = uniform(rng, 0.5, 1.5);
  inst.a_min = uniform(rng, 0.1, 1.0);
  inst.a_max = inst.a_min + uniform(rng, 0.0, 2.0);
  inst.mesh = mesh;
  return inst;
}

VcFields eval_vc_fields(const VcInstance& inst, const Vec3& x) {
  constexpr double pi = std::numbers::pi;
  VcFields out;

  // alpha = exp(h),  h = -x1^2 + cos(a x0) sin(b x1)
  const double a = 4.0 * pi * inst.phi_alpha;
  const double b = 3.0 * pi * inst.phi_alpha;
  const double ca = std::cos(a * x[0]), sa = std::sin(a * x[0]);
  const double cb = std::cos(b * x[1]), sb = std::sin(b * x[1]);
  const double h = -x[1] * x[1] + ca * sb;
  const Vec3 grad_h(-a * sa * sb, -2.0 * x[1] + b * ca * cb, 0.0);
  const double lap_h = -a * a * ca * sb - 2.0 - b * b * ca * sb;
  out.alpha = std::exp(h);
  out.grad_alpha = out.alpha * grad_h;
  out.lap_alpha = out.alpha * (lap_h + grad_h.squaredNorm());

  out.sigma = inst.a_min + (inst.a_max - inst.a_min) *
                               (1.0 + 0.5 * std::sin(2.0 * pi * x[0]) * std::cos(0.5 * pi * x[1]));

  // g = s0 c1 + (1 - c0)(1 - s1) + s2^2
  const double k = pi * inst.phi_alpha;
  const double s0 = std::sin(k * x[0]), c0 = std::cos(k * x[0]);
  const double s1 = std::sin(2.0 * k * x[1]), c1 = std::cos(2.0 * k * x[1]);
  const double s2 = std::sin(3.0 * k * x[2]);
  out.g = s0 * c1 + (1.0 - c0) * (1.0 - s1) + s2 * s2;
  out.grad_g = Vec3(k * c0 * c1 + k * s0 * (1.0 - s1),
                    -2.0 * k * s0 * s1 - 2.0 * k * (1.0 - c0) * c1,
                    3.0 * k * std::sin(6.0 * k * x[2]));
  out.lap_g = -k * k * s0 * c1 + k * k * c0 * (1.0 - s1)            // d00
              - 4.0 * k * k * s0 * c1 + 4.0 * k * k * (1.0 - c0) * s1  // d11
              + 18.0 * k * k * std::cos(6.0 * k * x[2]);             // d22

  out.f = -out.alpha * out.lap_g - out.grad_alpha.dot(out.grad_g) + out.sigma * out.g;

  // Delta sqrt(alpha) / sqrt(alpha) = (Delta h + |grad h|^2 / 2) / 2
  out.sigma_prime = out.sigma / out.alpha + 0.5 * (lap_h + 0.5 * grad_h.squaredNorm());
  return out;
}

ScreenedCoefficients vc_coefficients(const VcInstance& inst, const Vec3& x) {
  const VcFields v = eval_vc_fields(inst, x);
  return {v.alpha, v.sigma_prime, v.f};
}

double estimate_sigma_bar(const VcInstance& inst, const Domain<3>& domain, Rng& rng,
                          std::size_t probes) {
  double sup = -std::numeric_limits<double>::infinity();
  for (const auto& p : sample_interior(domain, probes, rng))
    sup = std::max(sup, eval_vc_fields(inst, p).sigma_prime);
  return std::max(1.1 * sup, inst.a_min);
}

ScreenedProblem make_vc_problem(const VcInstance& inst, const Domain<3>& domain) {
  return {&domain, [inst](const Vec3& x) { return vc_coefficients(inst, x); },
          [inst](const Vec3& x) { return eval_vc_fields(inst, x).g; }};
}

std::vector<double> vc_features(const VcInstance& inst, const Vec3& x) {
  return {x[0], x[1], x[2], inst.phi_alpha, inst.a_min, inst.a_max};
}

void to_json(json& j, const LinearInstance& inst) {
  j = json{{"family", "linear"},
           {"c1", inst.c1},
           {"c2", inst.c2},
           {"beta", {inst.beta[0], inst.beta[1]}},
           {"mu", {{inst.mu[0].x(), inst.mu[0].y()}, {inst.mu[1].x(), inst.mu[1].y()}}},
           {"b", inst.b}};
}

void from_json(const json& j, LinearInstance& inst) {
  inst.c1 = j.at("c1").get<double>();
  inst.c2 = j.at("c2").get<double>();
  const auto beta = j.at("beta").get<std::vector<double>>();
  const auto mu = j.at("mu").get<std::vector<std::vector<double>>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (beta.size() != 2 || mu.size() != 2 || mu[0].size() != 2 || mu[1].size() != 2 || b.size() != 5)
    throw Error("linear instance: expected beta[2], mu[2][2], b[5]");
  inst.beta = {beta[0], beta[1]};
  inst.mu = {Vec2(mu[0][0], mu[0][1]), Vec2(mu[1][0], mu[1][1])};
  std::copy(b.begin(), b.end(), inst.b.begin());
}

void to_json(json& j, const VcInstance& inst) {
  j = json{{"family", "vc"},
           {"phi_alpha", inst.phi_alpha},
           {"a_min", inst.a_min},
           {"a_max", inst.a_max},
           {"mesh", inst.mesh}};
}

void from_json(const json& j, VcInstance& inst) {
  inst.phi_alpha = j.at("phi_alpha").get<double>();
  inst.a_min = j.at("a_min").get<double>();
  inst.a_max = j.at("a_max").get<double>();
  inst.mesh = j.value("mesh", std::string{});
  if (!(inst.a_min > 0.0) || inst.a_max < inst.a_min)
    throw Error("vc instance: need 0 < a_min <= a_max");
}

namespace {

template <class Instance>
void write_dataset_impl(const std::string& dir, const std::vector<Instance>& instances) {
  fs::create_directories(dir);
  json manifest;
  manifest["count"] = instances.size();
  manifest["files"] = json::array();
  char name[32];
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::snprintf(name, sizeof(name), "instance_%05zu.json", i);
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
    out << json(instances[i]).dump(2) << '\n';
    manifest["files"].push_back(name);
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

template <class Instance>
std::vector<Instance> read_dataset_impl(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw Error("no manifest.json in " + dir);
  const json manifest = json::parse(in);
  std::vector<Instance> out;
  for (const auto& name : manifest.at("files")) {
    std::ifstream f(fs::path(dir) / name.get<std::string>());
    if (!f) throw Error("missing dataset file " + name.get<std::string>());
    out.push_back(json::parse(f).get<Instance>());
  }
  return out;
}

}  // namespace

void write_dataset(const std::string& dir, const std::vector<LinearInstance>& instances) {
  write_dataset_impl(dir, instances);
}
void write_dataset(const std::string& dir, const std::vector<VcInstance>& instances) {
  write_dataset_impl(dir, instances);
}
std::vector<LinearInstance> read_linear_dataset(const std::string& dir) {
  return read_dataset_impl<LinearInstance>(dir);
}
std::vector<VcInstance> read_vc_dataset(const std::string& dir) {
  return read_dataset_impl<VcInstance>(dir);
}

std::unique_ptr<Domain<2>> make_domain_2d(const json& spec) {
  const std::string kind = spec.value("kind", std::string("polar"));
  if (kind == "polar")
    return std::make_unique<PolarDomain>(spec.value("r0", 1.0), spec.value("c1", 0.0),
                                         spec.value("c2", 0.0),
                                         spec.value("samples", PolarDomain::kDefaultSamples));
  if (kind == "ball") return std::make_unique<BallDomain<2>>(spec.value("radius", 1.0));
  throw Error("domain.kind: '" + kind + "' is not a 2D domain (polar, ball)");
}

std::unique_ptr<Domain<3>> make_domain_3d(const json& spec) {
  const std::string kind = spec.value("kind", std::string("mesh"));
  if (kind == "mesh") {
    if (!spec.contains("path")) throw Error("domain.path: required for kind 'mesh'");
    return std::make_unique<MeshDomain>(read_obj(spec.at("path").get<std::string>()));
  }
  if (kind == "ball") return std::make_unique<BallDomain<3>>(spec.value("radius", 1.0));
  throw Error("domain.kind: '" + kind + "' is not a 3D domain (mesh, ball)");
}

}  // namespace wosno
