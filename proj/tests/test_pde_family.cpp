#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wosno/mesh.hpp"
#include "wosno/pde_family.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace wosno;
using std::numbers::pi;

namespace {

std::string data(const char* name) { return std::string(WOSNO_DATA_DIR) + "/" + name; }

// Hyper-dual number: exact first and second derivatives along one seeded axis.
struct HD {
  double v = 0.0, d1 = 0.0, d2 = 0.0, d12 = 0.0;
  HD() = default;
  HD(double x) : v(x) {}  // NOLINT(google-explicit-constructor)
  HD(double x, double a, double b, double ab) : v(x), d1(a), d2(b), d12(ab) {}
};
HD operator+(HD a, HD b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12}; }
HD operator-(HD a, HD b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12}; }
HD operator-(HD a) { return {-a.v, -a.d1, -a.d2, -a.d12}; }
HD operator*(HD a, HD b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + a.v * b.d2,
          a.d12 * b.v + a.d1 * b.d2 + a.d2 * b.d1 + a.v * b.d12};
}
// f(a) for scalar f with derivatives f0, f1, f2 at a.v
HD chain(HD a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f1 * a.d2, f1 * a.d12 + f2 * a.d1 * a.d2};
}
HD sin(HD a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
HD cos(HD a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
HD exp(HD a) { const double e = std::exp(a.v); return chain(a, e, e, e); }
HD sqrt(HD a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

// Closed forms written out independently of the library.
template <class T>
T alpha_t(const T* x, double phi) {
  return exp(-x[1] * x[1] + cos(T(4 * pi * phi) * x[0]) * sin(T(3 * pi * phi) * x[1]));
}
template <class T>
T g_t(const T* x, double phi) {
  const T s2 = sin(T(3 * pi * phi) * x[2]);
  return sin(T(pi * phi) * x[0]) * cos(T(2 * pi * phi) * x[1]) +
         (T(1.0) - cos(T(pi * phi) * x[0])) * (T(1.0) - sin(T(2 * pi * phi) * x[1])) + s2 * s2;
}

struct Derivs {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  double lap = 0.0;
};

template <class F>
Derivs differentiate(F&& f, const Vec3& p) {
  Derivs d;
  for (int axis = 0; axis < 3; ++axis) {
    HD x[3] = {HD(p[0]), HD(p[1]), HD(p[2])};
    x[axis] = HD(p[axis], 1.0, 1.0, 0.0);
    const HD r = f(x);
    d.value = r.v;
    d.grad[axis] = r.d1;
    d.lap += r.d12;
  }
  return d;
}

Vec3 random_point(Rng& rng) {
  return {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
}

}  // namespace

TEST_CASE("linear instances respect their ranges") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto inst = sample_linear_instance(rng);
    CHECK(std::abs(inst.c1) <= 0.2);
    CHECK(std::abs(inst.c2) <= 0.2);
    for (double b : inst.b) CHECK(std::abs(b) <= 1.0);
    for (double beta : inst.beta) CHECK(std::abs(beta) <= 1.0);
    for (const auto& mu : inst.mu) CHECK(mu.cwiseAbs().maxCoeff() <= 0.5);
  }
}

TEST_CASE("linear sampling is deterministic") {
  Rng a(42), b(42);
  const auto x = sample_linear_instance(a), y = sample_linear_instance(b);
  CHECK(x.c1 == y.c1);
  CHECK(x.c2 == y.c2);
  CHECK(x.beta == y.beta);
  CHECK(x.mu[0] == y.mu[0]);
  CHECK(x.mu[1] == y.mu[1]);
  CHECK(x.b == y.b);
}

TEST_CASE("mean of b0 over 1e4 instances") {
  Rng rng(7);
  double s = 0.0;
  for (int i = 0; i < 10000; ++i) s += sample_linear_instance(rng).b[0];
  CHECK(std::abs(s / 10000) < 0.03);
}

TEST_CASE("boundary series examples") {
  LinearInstance inst;
  inst.b = {1, 0, 0, 0, 0};
  CHECK(eval_boundary_linear(inst, Vec2(0.3, -0.7)) == 1.0);
  inst.b = {0, 1, 0, 0, 0};
  CHECK(eval_boundary_linear(inst, Vec2(0.9, 0.0)) == 1.0);
  inst.b = {1, 1, 0, 1, 0};
  CHECK(eval_boundary_linear(inst, Vec2(1.0, 0.0)) == 3.0);
  inst.b = {0, 0, 1, 0, 0};
  CHECK(eval_boundary_linear(inst, Vec2(0.0, 2.0)) == doctest::Approx(1.0));
  inst.b = {0, 0, 0, 0, 1};
  CHECK(eval_boundary_linear(inst, Vec2(1.0, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("boundary series is 2 pi periodic") {
  Rng rng(3);
  const auto inst = sample_linear_instance(rng);
  for (int k = 0; k < 100; ++k) {
    const double t = uniform(rng, -pi, pi);
    const double r = uniform(rng, 0.5, 1.5);
    const double a = eval_boundary_linear(inst, Vec2(r * std::cos(t), r * std::sin(t)));
    const double b = eval_boundary_linear(inst, Vec2(r * std::cos(t + 2 * pi), r * std::sin(t + 2 * pi)));
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
  }
}

TEST_CASE("source examples") {
  LinearInstance inst;
  inst.mu = {Vec2(0.1, -0.2), Vec2(0.3, 0.3)};
  CHECK(eval_source_linear(inst, Vec2(0.4, 0.4)) == 0.0);
  inst.beta = {1, 0};
  CHECK(eval_source_linear(inst, inst.mu[0]) == 1.0);
  CHECK(eval_source_linear(inst, inst.mu[0] + Vec2(0.6, 0.8)) == doctest::Approx(std::exp(-1.0)));
  CHECK(std::exp(-1.0) == doctest::Approx(0.3679).epsilon(1e-4));
}

TEST_CASE("linear features and problem") {
  Rng rng(9);
  const auto inst = sample_linear_instance(rng);
  const auto f = linear_features(inst, Vec2(0.25, -0.5));
  REQUIRE(f.size() == kLinearFeatureCount);
  CHECK(f[0] == 0.25);
  CHECK(f[1] == -0.5);
  CHECK(f[2] == inst.c1);
  CHECK(f[3] == inst.c2);
  CHECK(f[4] == inst.beta[0]);
  CHECK(f[8] == inst.mu[1].x());
  CHECK(f[14] == inst.b[4]);
  const auto dom = inst.domain();
  const auto p = make_linear_problem(inst, dom);
  CHECK(p.source(Vec2(0.1, 0.1)) == eval_source_linear(inst, Vec2(0.1, 0.1)));
  CHECK(p.boundary(Vec2(0.1, 0.1)) == eval_boundary_linear(inst, Vec2(0.1, 0.1)));
}

TEST_CASE("varying-coefficient examples at the origin") {
  for (double phi : {0.5, 1.0, 1.37}) {
    VcInstance inst{phi, 0.3, 1.2, ""};
    const auto v = eval_vc_fields(inst, Vec3::Zero());
    CHECK(v.alpha == 1.0);
    CHECK(v.g == 0.0);
    CHECK(v.sigma == doctest::Approx(1.2));
  }
}

TEST_CASE("alpha derivatives against central differences") {
  Rng rng(11);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    VcInstance inst{uniform(rng, 0.5, 1.5), 0.5, 1.0, ""};
    const Vec3 p = random_point(rng);
    const auto v = eval_vc_fields(inst, p);
    auto alpha = [&](const Vec3& q) { return eval_vc_fields(inst, q).alpha; };
    Vec3 grad;
    double lap = 0.0;
    for (int i = 0; i < 3; ++i) {
      Vec3 e = Vec3::Zero();
      e[i] = h;
      grad[i] = (alpha(p + e) - alpha(p - e)) / (2 * h);
      lap += (alpha(p + e) - 2 * v.alpha + alpha(p - e)) / (h * h);
    }
    CHECK((v.grad_alpha - grad).norm() <= 1e-5 * std::max(1.0, grad.norm()));
    CHECK(std::abs(v.lap_alpha - lap) <= 1e-5 * std::max(1.0, std::abs(lap)));
  }
}

TEST_CASE("closed forms against exact automatic derivatives") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    VcInstance inst;
    inst.phi_alpha = uniform(rng, 0.5, 1.5);
    inst.a_min = uniform(rng, 0.1, 1.0);
    inst.a_max = inst.a_min + uniform(rng, 0.0, 2.0);
    const Vec3 p = random_point(rng);
    const double phi = inst.phi_alpha;
    const auto v = eval_vc_fields(inst, p);
    const auto a = differentiate([&](const HD* x) { return alpha_t(x, phi); }, p);
    const auto g = differentiate([&](const HD* x) { return g_t(x, phi); }, p);
    CHECK(v.alpha == doctest::Approx(a.value).epsilon(1e-13));
    CHECK((v.grad_alpha - a.grad).norm() <= 1e-12 * (1 + a.grad.norm()));
    CHECK(v.lap_alpha == doctest::Approx(a.lap).epsilon(1e-11));
    CHECK(v.g == doctest::Approx(g.value).epsilon(1e-13));
    CHECK((v.grad_g - g.grad).norm() <= 1e-12 * (1 + g.grad.norm()));
    CHECK(v.lap_g == doctest::Approx(g.lap).epsilon(1e-11));

    // div(alpha grad u) - sigma u + f = 0 with u = g.
    const double div_flux = a.value * g.lap + a.grad.dot(g.grad);
    const double scale = std::abs(div_flux) + std::abs(v.sigma * g.value) + std::abs(v.f);
    CHECK(std::abs(div_flux - v.sigma * g.value + v.f) <= 1e-8 * scale);

    // U = sqrt(alpha) g solves Delta U - sigma' U = -f / sqrt(alpha).
    const auto U = differentiate([&](const HD* x) { return sqrt(alpha_t(x, phi)) * g_t(x, phi); }, p);
    const double lhs = U.lap - v.sigma_prime * U.value;
    const double rhs = -v.f / std::sqrt(a.value);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * (std::abs(U.lap) + std::abs(rhs) + 1));
    CHECK(std::isfinite(v.sigma_prime));

    const auto c = vc_coefficients(inst, p);
    CHECK(c.alpha == v.alpha);
    CHECK(c.sigma_prime == v.sigma_prime);
    CHECK(c.source == v.f);
  }
}

TEST_CASE("sigma_bar majorant") {
  const MeshDomain cube(read_obj(data("cube.obj")));
  Rng rng(13);
  for (int k = 0; k < 5; ++k) {
    const auto inst = sample_vc_instance(rng, data("cube.obj"));
    CHECK(inst.phi_alpha >= 0.5);
    CHECK(inst.phi_alpha <= 1.5);
    CHECK(inst.a_min >= 0.1);
    CHECK(inst.a_max >= inst.a_min);
    CHECK(inst.a_max <= inst.a_min + 2.0);
    Rng probe(100 + k);
    const double sigma_bar = estimate_sigma_bar(inst, cube, probe);
    CHECK(sigma_bar >= inst.a_min);
    // Bounds the transformed absorption on fresh interior points.
    Rng check(200 + k);
    double sup = -INFINITY;
    for (const auto& p : sample_interior(cube, 1000, check))
      sup = std::max(sup, eval_vc_fields(inst, p).sigma_prime);
    CHECK(sup <= sigma_bar);
    const auto feats = vc_features(inst, Vec3(0.1, 0.2, 0.3));
    REQUIRE(feats.size() == kVcFeatureCount);
    CHECK(feats[3] == inst.phi_alpha);
    CHECK(feats[5] == inst.a_max);
  }
}

TEST_CASE("JSON and dataset round trips") {
  Rng rng(14);
  std::vector<LinearInstance> lin;
  for (int i = 0; i < 5; ++i) lin.push_back(sample_linear_instance(rng));
  std::vector<VcInstance> vc;
  for (int i = 0; i < 3; ++i) vc.push_back(sample_vc_instance(rng, data("cube.obj")));

  const nlohmann::json j = lin[0];
  const auto back = j.get<LinearInstance>();
  CHECK(back.c1 == lin[0].c1);
  CHECK(back.mu[1] == lin[0].mu[1]);
  CHECK(back.b == lin[0].b);

  const auto dir = std::filesystem::temp_directory_path() / "wosno_test_dataset";
  std::filesystem::remove_all(dir);
  write_dataset((dir / "lin").string(), lin);
  write_dataset((dir / "vc").string(), vc);
  const auto lin2 = read_linear_dataset((dir / "lin").string());
  const auto vc2 = read_vc_dataset((dir / "vc").string());
  REQUIRE(lin2.size() == lin.size());
  REQUIRE(vc2.size() == vc.size());
  for (std::size_t i = 0; i < lin.size(); ++i) {
    CHECK(lin2[i].c2 == lin[i].c2);
    CHECK(lin2[i].beta == lin[i].beta);
    CHECK(lin2[i].mu[0] == lin[i].mu[0]);
    CHECK(lin2[i].b == lin[i].b);
  }
  for (std::size_t i = 0; i < vc.size(); ++i) {
    CHECK(vc2[i].phi_alpha == vc[i].phi_alpha);
    CHECK(vc2[i].a_min == vc[i].a_min);
    CHECK(vc2[i].a_max == vc[i].a_max);
    CHECK(vc2[i].mesh == vc[i].mesh);
  }
  CHECK_THROWS_AS(read_linear_dataset((dir / "missing").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("domains from JSON") {
  const auto polar = make_domain_2d({{"kind", "polar"}, {"c1", 0.1}});
  CHECK(polar->contains(Vec2(0.5, 0.0)));
  const auto disk = make_domain_2d({{"kind", "ball"}, {"radius", 2.0}});
  CHECK(disk->distance_to_boundary(Vec2::Zero()) == doctest::Approx(2.0));
  const auto ball = make_domain_3d({{"kind", "ball"}});
  CHECK(ball->contains(Vec3(0.1, 0.1, 0.1)));
  const auto mesh = make_domain_3d({{"kind", "mesh"}, {"path", data("cube.obj")}});
  CHECK(mesh->contains(Vec3(0.5, 0.5, 0.5)));
  CHECK_THROWS_AS(make_domain_2d({{"kind", "mesh"}}), Error);
  CHECK_THROWS_AS(make_domain_3d({{"kind", "mesh"}}), Error);
}
