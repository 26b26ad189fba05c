#include "wosno/cli.hpp"

#include "wosno/estimator.hpp"
#include "wosno/greens.hpp"
#include "wosno/inpaint.hpp"
#include "wosno/pde_family.hpp"
#include "wosno/training.hpp"

#include <CLI11.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace wosno::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& config) {
  json canonical = config;
  if (canonical.is_object()) canonical.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical.dump())));
  return buf;
}

int resolve_workers(const json& config) {
  if (config.contains("workers")) {
    const auto& w = config.at("workers");
    if (!w.is_number_integer() || w.get<long long>() < 1)
      throw Error("config field 'workers': expected a positive integer");
    return w.get<int>();
  }
  if (const char* env = std::getenv("WOSNO_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw Error("WOSNO_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

namespace {

std::uint64_t seed_of(const json& config) {
  if (!config.contains("seed")) return 0;
  const auto& s = config.at("seed");
  if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
    throw Error("config field 'seed': expected a non-negative integer");
  return s.get<std::uint64_t>();
}

}  // namespace

std::string header_line(const json& config) {
  return std::string("# wosno ") + WOSNO_VERSION + " seed=" + std::to_string(seed_of(config)) +
         " workers=" + std::to_string(resolve_workers(config)) +
         " config_hash=" + config_hash(config);
}

json parse_config(const std::string& text, const std::string& source) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw Error(source + ": config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    const std::size_t at = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                ": config parse error: " + e.what());
  }
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error("override '" + std::string(assignment) + "': expected key=value");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw Error("override '" + path + "': empty key segment");
    if (!node->is_object()) {
      if (!node->is_null()) throw Error("override '" + path + "': '" + key + "' is not inside an object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

namespace {

// ---- config field access -------------------------------------------------

const json* lookup(const json& root, const std::string& path) {
  const json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &node->at(key);
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

template <class T>
const char* type_label() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else return "a value of another type";
}

template <class T>
T convert(const json& j, const std::string& path) {
  const auto fail = [&] {
    return Error("config field '" + path + "': expected " + type_label<T>() + ", got " +
                 std::string(j.type_name()));
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw fail();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw fail();
    if constexpr (std::is_unsigned_v<T>)
      if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)
        throw Error("config field '" + path + "': must be non-negative");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw fail();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw fail();
  }
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw fail();
  }
}

template <class T>
T field(const json& root, const std::string& path, T fallback) {
  const json* j = lookup(root, path);
  return j ? convert<T>(*j, path) : fallback;
}

template <class T>
T required(const json& root, const std::string& path) {
  const json* j = lookup(root, path);
  if (!j) throw Error("config field '" + path + "': required");
  return convert<T>(*j, path);
}

// ---- shared plumbing ------------------------------------------------------

struct Context {
  json config;
  std::uint64_t seed = 0;
  int workers = 1;
  fs::path output_dir;
  std::string header;
  std::ostream* out = nullptr;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

fs::path output_path(const Context& ctx, const std::string& key, const std::string& fallback) {
  const fs::path p = field<std::string>(ctx.config, key, fallback);
  return p.is_absolute() ? p : ctx.output_dir / p;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  return f;
}

void write_summary(const Context& ctx, const std::string& command, json summary) {
  summary["header"] = ctx.header;
  summary["command"] = command;
  summary["seed"] = ctx.seed;
  summary["workers"] = ctx.workers;
  summary["config"] = ctx.config;
  const fs::path path = output_path(ctx, "summary", command + "_summary.json");
  auto f = open_output(path);
  f << summary.dump(2) << '\n';
  *ctx.out << "wrote " << path.string() << '\n';
}

WalkConfig walk_config(const Context& ctx) {
  WalkConfig w;
  w.eps_shell = field(ctx.config, "walk.eps_shell", w.eps_shell);
  w.max_steps = field(ctx.config, "walk.max_steps", w.max_steps);
  w.antithetic = field(ctx.config, "walk.antithetic", w.antithetic);
  w.sigma_bar = field(ctx.config, "walk.sigma_bar", w.sigma_bar);
  w.rng_seed = ctx.seed;
  if (!(w.eps_shell > 0.0)) throw Error("config field 'walk.eps_shell': must be positive");
  if (w.max_steps < 1) throw Error("config field 'walk.max_steps': must be >= 1");
  return w;
}

// A solvable problem described by the "domain" and "problem" sections.
struct Problem {
  int dim = 2;
  std::unique_ptr<Domain<2>> dom2;
  std::unique_ptr<Domain<3>> dom3;
  PoissonProblem<2> p2;
  PoissonProblem<3> p3;
  bool screened = false;
  ScreenedProblem ps;
  double sigma_bar = 0.0;
  json description;
};

Problem build_problem(const Context& ctx) {
  const json& cfg = ctx.config;
  if (!lookup(cfg, "problem")) throw Error("config field 'problem': required");
  const std::string kind = required<std::string>(cfg, "problem.kind");
  const json domain_spec = lookup(cfg, "domain") ? cfg.at("domain") : json::object();
  Problem p;
  p.dim = field(cfg, "dim", kind == "vc" ? 3 : 2);
  if (p.dim != 2 && p.dim != 3) throw Error("config field 'dim': must be 2 or 3");

  if (kind == "constant") {
    const double f = field(cfg, "problem.source", 0.0);
    const double g = field(cfg, "problem.boundary", 0.0);
    p.description = {{"kind", kind}, {"source", f}, {"boundary", g}};
    if (p.dim == 2) {
      p.dom2 = make_domain_2d(domain_spec);
      p.p2 = {p.dom2.get(), {}, [g](const Vec2&) { return g; }};
      if (f != 0.0) p.p2.source = [f](const Vec2&) { return f; };
    } else {
      p.dom3 = make_domain_3d(domain_spec);
      p.p3 = {p.dom3.get(), {}, [g](const Vec3&) { return g; }};
      if (f != 0.0) p.p3.source = [f](const Vec3&) { return f; };
    }
    return p;
  }
  if (kind == "linear") {
    if (p.dim != 2) throw Error("config field 'dim': the linear family is 2D");
    LinearInstance inst;
    if (const json* j = lookup(cfg, "problem.instance")) {
      try {
        inst = j->get<LinearInstance>();
      } catch (const json::exception& e) {
        throw Error(std::string("config field 'problem.instance': ") + e.what());
      }
    } else {
      Rng rng = make_stream(field<std::uint64_t>(cfg, "problem.instance_seed", ctx.seed), 0x11);
      inst = sample_linear_instance(rng);
    }
    p.description = {{"kind", kind}, {"instance", inst}};
    if (lookup(cfg, "domain")) {
      p.dom2 = make_domain_2d(domain_spec);
    } else {
      p.dom2 = std::make_unique<PolarDomain>(inst.domain());
    }
    p.p2 = make_linear_problem(inst, *p.dom2);
    return p;
  }
  if (kind == "vc") {
    if (p.dim != 3) throw Error("config field 'dim': the varying-coefficient family is 3D");
    VcInstance inst;
    if (const json* j = lookup(cfg, "problem.instance")) {
      try {
        inst = j->get<VcInstance>();
      } catch (const json::exception& e) {
        throw Error(std::string("config field 'problem.instance': ") + e.what());
      }
    } else {
      Rng rng = make_stream(field<std::uint64_t>(cfg, "problem.instance_seed", ctx.seed), 0x12);
      inst = sample_vc_instance(rng, "");
    }
    json spec = domain_spec;
    if (!lookup(cfg, "domain")) {
      if (inst.mesh.empty()) spec = {{"kind", "ball"}, {"radius", 1.0}};
      else spec = {{"kind", "mesh"}, {"path", inst.mesh}};
    }
    p.dom3 = make_domain_3d(spec);
    p.screened = true;
    p.ps = make_vc_problem(inst, *p.dom3);
    p.sigma_bar = field(cfg, "problem.sigma_bar", 0.0);
    if (p.sigma_bar <= 0.0) {
      Rng rng = make_stream(ctx.seed, 0x13);
      p.sigma_bar = estimate_sigma_bar(inst, *p.dom3, rng);
    }
    p.description = {{"kind", kind}, {"instance", inst}, {"sigma_bar", p.sigma_bar}};
    return p;
  }
  throw Error("config field 'problem.kind': unknown kind '" + kind + "' (constant, linear, vc)");
}

template <int D>
std::vector<Vec<D>> build_points(const Context& ctx, const Domain<D>& dom) {
  const json& cfg = ctx.config;
  const std::string kind = field<std::string>(cfg, "points.kind", "grid");
  std::vector<Vec<D>> pts;
  if (kind == "list") {
    const json* list = lookup(cfg, "points.coords");
    if (!list || !list->is_array()) throw Error("config field 'points.coords': expected an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const auto& c = list->at(i);
      const std::string path = "points.coords[" + std::to_string(i) + "]";
      if (!c.is_array() || c.size() != static_cast<std::size_t>(D))
        throw Error("config field '" + path + "': expected " + std::to_string(D) + " numbers");
      Vec<D> v;
      for (int d = 0; d < D; ++d) v[d] = convert<double>(c.at(d), path);
      if (!dom.contains(v)) throw Error("config field '" + path + "': exterior query");
      pts.push_back(v);
    }
  } else if (kind == "grid") {
    const int n = field(cfg, "points.n", 10);
    if (n < 1) throw Error("config field 'points.n': must be >= 1");
    const auto box = dom.sampling_box();
    std::vector<int> idx(D, 0);
    const long total = static_cast<long>(std::pow(n, D));
    for (long k = 0; k < total; ++k) {
      long rem = k;
      Vec<D> v;
      for (int d = 0; d < D; ++d) {
        const long i = rem % n;
        rem /= n;
        v[d] = box.lo[d] + (static_cast<double>(i) + 0.5) / n * (box.hi[d] - box.lo[d]);
      }
      if (dom.contains(v)) pts.push_back(v);
    }
  } else if (kind == "random") {
    const auto n = field<std::size_t>(cfg, "points.n", 100);
    Rng rng = make_stream(ctx.seed, 0x14);
    pts = sample_interior(dom, n, rng);
  } else {
    throw Error("config field 'points.kind': unknown kind '" + kind + "' (grid, list, random)");
  }
  return pts;
}

template <int D>
void write_estimates(std::ostream& f, const std::vector<Vec<D>>& pts,
                     const std::vector<PointEstimate>& est) {
  f << (D == 2 ? "x,y" : "x,y,z") << ",mean,variance,n_samples\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int d = 0; d < D; ++d) f << fmt(pts[i][d]) << ',';
    f << fmt(est[i].mean) << ',' << fmt(est[i].variance()) << ',' << est[i].n_samples << '\n';
  }
}

// ---- solve ----------------------------------------------------------------

int cmd_solve(const Context& ctx) {
  const Problem p = build_problem(ctx);
  const WalkConfig walk = walk_config(ctx);
  const auto L = field<std::size_t>(ctx.config, "L", 1000);
  if (L < 1) throw Error("config field 'L': must be >= 1");
  const EstimateOptions opts{0, 0, ctx.workers};
  const auto start = std::chrono::steady_clock::now();

  const fs::path csv = output_path(ctx, "output", "solve.csv");
  auto f = open_output(csv);
  f << ctx.header << '\n';
  std::size_t n_points = 0;
  double mean_sum = 0.0;
  if (p.dim == 2) {
    const auto pts = build_points<2>(ctx, *p.dom2);
    const auto est = estimate(p.p2, pts, L, walk, opts);
    write_estimates<2>(f, pts, est);
    n_points = pts.size();
    for (const auto& e : est) mean_sum += e.mean;
  } else {
    const auto pts = build_points<3>(ctx, *p.dom3);
    std::vector<PointEstimate> est;
    if (p.screened) {
      WalkConfig w = walk;
      w.sigma_bar = p.sigma_bar;
      est = estimate(p.ps, pts, L, w, opts);
    } else {
      est = estimate(p.p3, pts, L, walk, opts);
    }
    write_estimates<3>(f, pts, est);
    n_points = pts.size();
    for (const auto& e : est) mean_sum += e.mean;
  }
  if (!f) throw Error("failed writing " + csv.string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  *ctx.out << "wrote " << csv.string() << " (" << n_points << " points)\n";
  write_summary(ctx, "solve",
                {{"output", csv.string()},
                 {"points", n_points},
                 {"L", L},
                 {"problem", p.description},
                 {"mean_of_means", n_points ? mean_sum / n_points : 0.0},
                 {"seconds", seconds}});
  return 0;
}

// ---- greens-check -----------------------------------------------------------

struct Check {
  std::string name;
  double measured;
  double tolerance;
  bool pass;
};

int cmd_greens_check(const Context& ctx) {
  const auto samples = field<std::size_t>(ctx.config, "samples", 1'000'000);
  const auto pairs = field<std::size_t>(ctx.config, "pairs", 50);
  if (samples < 1) throw Error("config field 'samples': must be >= 1");
  std::vector<Check> checks;

  // |B_r| E[G_r] against r^2 / (2d). Uniform samples in the ball, stratified
  // in the radial CDF (one sample per stratum); G depends on the radius only.
  for (int d : {2, 3}) {
    for (double r : {0.5, 1.0, 2.0}) {
      Rng rng = make_stream(ctx.seed, 0x21, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(r * 8));
      double sum = 0.0;
      for (std::size_t i = 0; i < samples; ++i) {
        double u;
        do u = (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(samples);
        while (u == 0.0);
        const double rho = r * (d == 2 ? std::sqrt(u) : std::cbrt(u));
        sum += greens_ball(d, r, rho);
      }
      const double mc = ball_volume(d, r) * sum / static_cast<double>(samples);
      const double exact = greens_ball_mass(d, r);
      const double dev = std::abs(mc / exact - 1.0);
      char name[64];
      std::snprintf(name, sizeof(name), "greens_mass d=%d r=%g", d, r);
      checks.push_back({name, dev, 5e-3, dev < 5e-3});
    }
  }

  // Harmonic limit of the screened kernels.
  {
    const double s0 = screened_kernels_ball_3d(1.0, 0.0).surface_mass();
    checks.push_back({"screened surface_mass sigma_bar=0", std::abs(s0 - 1.0), 1e-12,
                      std::abs(s0 - 1.0) <= 1e-12});
    const double s8 = screened_kernels_ball_3d(1.0, 1e-8).surface_mass();
    checks.push_back({"screened surface_mass sigma_bar=1e-8", 1.0 - s8, 1e-6,
                      s8 >= 1.0 - 1e-6 && s8 <= 1.0});
  }

  // surface_mass + sigma_bar * (radial quadrature of G) = 1.
  {
    Rng rng = make_stream(ctx.seed, 0x22);
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
      const double r = uniform(rng, 0.05, 2.0);
      const double sigma_bar = std::pow(10.0, uniform(rng, -4.0, 2.0));
      const auto k = screened_kernels_ball_3d(r, sigma_bar);
      auto integrand = [&](double rho) {
        return rho > 0.0 ? 4.0 * std::numbers::pi * rho * rho * k.green(rho) : 0.0;
      };
      const double integral =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, r, 15, 1e-13);
      worst = std::max(worst, std::abs(k.surface_mass() + sigma_bar * integral - 1.0));
    }
    checks.push_back({"screened balance identity (" + std::to_string(pairs) + " pairs)", worst, 1e-6,
                      worst < 1e-6});
  }

  const fs::path csv = output_path(ctx, "output", "greens_check.csv");
  auto f = open_output(csv);
  f << ctx.header << "\ncheck,measured,tolerance,pass\n";
  bool all = true;
  json rows = json::array();
  for (const auto& c : checks) {
    f << '"' << c.name << "\"," << fmt(c.measured) << ',' << fmt(c.tolerance) << ','
      << (c.pass ? "true" : "false") << '\n';
    *ctx.out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.measured << " (tol "
             << c.tolerance << ")\n";
    rows.push_back({{"check", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance},
                    {"pass", c.pass}});
    all = all && c.pass;
  }
  write_summary(ctx, "greens-check", {{"output", csv.string()}, {"checks", rows}, {"pass", all}});
  return all ? 0 : 2;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const Context& ctx) {
  const json& cfg = ctx.config;
  const std::string family_name = required<std::string>(cfg, "family");
  const json family_options = lookup(cfg, "family_options") ? cfg.at("family_options") : json::object();
  const auto family = make_family(family_name, family_options);

  TrainConfig tc;
  tc.steps = field(cfg, "train.steps", tc.steps);
  tc.points_per_instance = field(cfg, "train.points_per_instance", tc.points_per_instance);
  tc.instances_per_batch = field(cfg, "train.instances_per_batch", tc.instances_per_batch);
  tc.L = field(cfg, "train.L", tc.L);
  tc.caching = field(cfg, "train.caching", tc.caching);
  tc.pool_size = field(cfg, "train.pool_size", tc.pool_size);
  if (const json* h = lookup(cfg, "train.hidden")) {
    if (!h->is_array()) throw Error("config field 'train.hidden': expected an array");
    tc.hidden.clear();
    for (const auto& v : *h) tc.hidden.push_back(convert<int>(v, "train.hidden"));
  }
  tc.adam.lr = field(cfg, "train.lr", tc.adam.lr);
  tc.adam.weight_decay = field(cfg, "train.weight_decay", tc.adam.weight_decay);
  tc.plateau_factor = field(cfg, "train.plateau_factor", tc.plateau_factor);
  tc.plateau_patience = field(cfg, "train.plateau_patience", tc.plateau_patience);
  tc.walk = walk_config(ctx);
  tc.seed = ctx.seed;
  tc.workers = ctx.workers;

  const fs::path loss_path = output_path(ctx, "loss_csv", "loss.csv");
  auto loss = open_output(loss_path);
  loss << ctx.header << "\nepoch,loss,lr,wall_clock\n";
  const long every = std::max(1L, tc.steps / 20);
  const auto result = train(*family, tc, [&](const TrainRecord& r) {
    loss << r.step << ',' << fmt(r.loss) << ',' << fmt(r.lr) << ',' << fmt(r.seconds) << '\n';
    if (r.step % every == 0 || r.step + 1 == tc.steps)
      *ctx.out << "step " << r.step << " loss " << r.loss << " lr " << r.lr << '\n';
  });
  if (!loss) throw Error("failed writing " + loss_path.string());

  const fs::path ckpt = output_path(ctx, "checkpoint", "model.bin");
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt.string(), result.model, ctx.header);
  *ctx.out << "wrote " << ckpt.string() << " and " << loss_path.string() << '\n';

  json summary = {{"checkpoint", ckpt.string()},
                  {"loss_csv", loss_path.string()},
                  {"family", family_name},
                  {"steps", tc.steps},
                  {"walks", result.walks},
                  {"final_loss", result.history.empty() ? 0.0 : result.history.back().loss},
                  {"seconds", result.history.empty() ? 0.0 : result.history.back().seconds}};
  const auto eval_instances = field<std::size_t>(cfg, "eval.instances", 0);
  if (eval_instances > 0) {
    const auto held_out = build_held_out(*family, eval_instances, field<std::size_t>(cfg, "eval.points", 8),
                                         field<std::size_t>(cfg, "eval.L_ref", 10000), tc.walk,
                                         field<std::uint64_t>(cfg, "eval.seed", ctx.seed + 1),
                                         ctx.workers);
    const auto rep = evaluate(result.model, held_out, field<std::size_t>(cfg, "eval.L_wos", 1),
                              tc.walk, field<std::uint64_t>(cfg, "eval.seed", ctx.seed + 1) + 1,
                              ctx.workers);
    summary["eval"] = {{"pairs", rep.pairs},
                       {"surrogate_mse", rep.surrogate_mse},
                       {"surrogate_mse_raw", rep.surrogate_mse_raw},
                       {"reference_se2", rep.reference_se2},
                       {"wos_mse", rep.wos_mse},
                       {"denoising_ratio", rep.denoising_ratio}};
    *ctx.out << "held-out surrogate MSE " << rep.surrogate_mse << ", WoS MSE " << rep.wos_mse
             << ", ratio " << rep.denoising_ratio << '\n';
  }
  write_summary(ctx, "train", summary);
  return 0;
}

// ---- inpaint ----------------------------------------------------------------

GrayImage synthetic_image(const json& spec, const std::string& path) {
  const std::string kind = field<std::string>(spec, "kind", "");
  const int w = field(spec, "width", 150);
  const int h = field(spec, "height", 150);
  if (w < 3 || h < 3) throw Error("config field '" + path + "': image must be at least 3x3");
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w;
      if (kind == "constant") img.at(x, y) = field(spec, "value", 0.5);
      else if (kind == "ramp") img.at(x, y) = u;
      else if (kind == "quadratic") img.at(x, y) = u * u;
      else throw Error("config field '" + path + ".kind': unknown image kind '" + kind + "'");
    }
  return img;
}

Mask synthetic_mask(const json& spec, int w, int h, const std::string& path) {
  const std::string kind = field<std::string>(spec, "kind", "");
  if (kind != "square") throw Error("config field '" + path + ".kind': unknown mask kind '" + kind + "'");
  const int size = field(spec, "size", w / 3);
  const int x0 = field(spec, "x0", (w - size) / 2);
  const int y0 = field(spec, "y0", (h - size) / 2);
  Mask m{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  for (int y = std::max(0, y0); y < std::min(h, y0 + size); ++y)
    for (int x = std::max(0, x0); x < std::min(w, x0 + size); ++x)
      m.masked[static_cast<std::size_t>(y) * w + x] = 1;
  return m;
}

int cmd_inpaint(const Context& ctx) {
  const json& cfg = ctx.config;
  const json* image_spec = lookup(cfg, "image");
  const json* mask_spec = lookup(cfg, "mask");
  if (!image_spec) throw Error("config field 'image': required");
  if (!mask_spec) throw Error("config field 'mask': required");
  const GrayImage img = image_spec->is_string() ? read_pgm(image_spec->get<std::string>())
                                                : synthetic_image(*image_spec, "image");
  const Mask mask = mask_spec->is_string() ? mask_from_image(read_pgm(mask_spec->get<std::string>()))
                                           : synthetic_mask(*mask_spec, img.width, img.height, "mask");
  if (mask.width != img.width || mask.height != img.height)
    throw Error("config field 'mask': size differs from the image");

  InpaintConfig ic;
  ic.walks_per_pixel = field(cfg, "walks_per_pixel", ic.walks_per_pixel);
  ic.walk = walk_config(ctx);
  ic.workers = ctx.workers;
  const std::string method = field<std::string>(cfg, "method", "biharmonic");
  const auto start = std::chrono::steady_clock::now();
  InpaintResult r;
  if (method == "harmonic") r = inpaint_harmonic(img, mask, ic);
  else if (method == "biharmonic") r = inpaint_biharmonic(img, mask, ic);
  else throw Error("config field 'method': expected 'harmonic' or 'biharmonic'");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out = output_path(ctx, "output", "inpainted.pgm");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_pgm(out.string(), r.image, ctx.header);

  std::size_t masked = 0;
  double max_se = 0.0;
  for (std::size_t i = 0; i < mask.masked.size(); ++i)
    if (mask.masked[i]) {
      ++masked;
      max_se = std::max(max_se, r.standard_error[i]);
    }
  json summary = {{"output", out.string()}, {"method", method}, {"masked_pixels", masked},
                  {"walks_per_pixel", ic.walks_per_pixel}, {"max_standard_error", max_se},
                  {"seconds", seconds}};
  // Synthetic images double as ground truth.
  if (!image_spec->is_string() && masked > 0) {
    double se = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < mask.masked.size(); ++i)
      if (mask.masked[i]) {
        const double d = r.image.pixels[i] - img.pixels[i];
        se += d * d;
        worst = std::max(worst, std::abs(d));
      }
    summary["mse_vs_truth"] = se / masked;
    summary["max_abs_error_vs_truth"] = worst;
  }
  *ctx.out << "wrote " << out.string() << " (" << masked << " masked pixels, " << seconds << " s)\n";
  write_summary(ctx, "inpaint", summary);
  return 0;
}

// ---- bench ------------------------------------------------------------------

int cmd_bench(const Context& ctx) {
  const json& cfg = ctx.config;
  const Problem p = build_problem(ctx);
  if (p.screened) throw Error("bench: screened problems are not supported");
  WalkConfig walk = walk_config(ctx);
  const auto replicas = field<std::size_t>(cfg, "replicas", 200);
  if (replicas < 2) throw Error("config field 'replicas': must be >= 2");
  std::vector<std::size_t> Ls = {1, 10, 100};
  if (const json* j = lookup(cfg, "L_values")) {
    if (!j->is_array() || j->empty()) throw Error("config field 'L_values': expected a nonempty array");
    Ls.clear();
    for (const auto& v : *j) Ls.push_back(convert<std::size_t>(v, "L_values"));
  }
  const json* point = lookup(cfg, "point");
  std::vector<double> xi(static_cast<std::size_t>(p.dim), 0.0);
  if (point) {
    if (!point->is_array() || point->size() != xi.size())
      throw Error("config field 'point': expected " + std::to_string(p.dim) + " numbers");
    for (std::size_t d = 0; d < xi.size(); ++d) xi[d] = convert<double>(point->at(d), "point");
  }
  std::vector<bool> modes{walk.antithetic};
  if (field(cfg, "compare_antithetic", false)) modes = {false, true};

  const fs::path csv = output_path(ctx, "output", "bench.csv");
  auto f = open_output(csv);
  f << ctx.header << "\nmode,L,replicas,mean,variance_of_mean,L_times_variance,seconds,walks_per_second\n";
  json rows = json::array();
  for (bool anti : modes) {
    walk.antithetic = anti;
    for (std::size_t L : Ls) {
      if (anti && L % 2 != 0) continue;
      const auto start = std::chrono::steady_clock::now();
      PointEstimate across;
      for (std::size_t r = 0; r < replicas; ++r) {
        const EstimateOptions opts{r, 0, ctx.workers};
        std::vector<PointEstimate> est;
        if (p.dim == 2) est = estimate(p.p2, {Vec2(xi[0], xi[1])}, L, walk, opts);
        else est = estimate(p.p3, {Vec3(xi[0], xi[1], xi[2])}, L, walk, opts);
        across.add(est[0].mean);
      }
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const double var = across.variance();
      const double wps = seconds > 0.0 ? static_cast<double>(L * replicas) / seconds : 0.0;
      const char* mode = anti ? "antithetic" : "plain";
      f << mode << ',' << L << ',' << replicas << ',' << fmt(across.mean) << ',' << fmt(var) << ','
        << fmt(var * static_cast<double>(L)) << ',' << fmt(seconds) << ',' << fmt(wps) << '\n';
      *ctx.out << mode << " L=" << L << " var=" << var << " L*var=" << var * L << " (" << seconds
               << " s)\n";
      rows.push_back({{"mode", mode}, {"L", L}, {"mean", across.mean}, {"variance_of_mean", var},
                      {"seconds", seconds}});
    }
  }
  write_summary(ctx, "bench", {{"output", csv.string()}, {"rows", rows}, {"problem", p.description}});
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-free Monte Carlo PDE solver and weak-supervision trainer", "wosno"};
  app.require_subcommand(1);
  app.set_version_flag("--version", WOSNO_VERSION);

  std::string config_path;
  std::string output_dir = ".";
  std::vector<std::string> overrides;
  int workers = 0;
  long long seed = -1;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "estimate a solution field over a point set"},
      {"train", "train a surrogate with weak supervision"},
      {"inpaint", "harmonic or biharmonic image inpainting"},
      {"greens-check", "check Green's function identities"},
      {"bench", "variance and timing as a function of the walk count"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "JSON config file");
    sub->add_option("--output-dir", output_dir, "directory for outputs");
    sub->add_option("--workers", workers, "worker threads (default: WOSNO_WORKERS or 1)");
    sub->add_option("--seed", seed, "RNG seed");
    sub->allow_extras();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const auto extras = app.get_subcommands().front()->remaining();

  try {
    json config = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error("cannot open config " + config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      config = parse_config(buf.str(), config_path);
    }
    for (const auto& e : extras) {
      if (e.rfind("--", 0) != 0) throw Error("unexpected argument '" + e + "'");
      apply_override(config, std::string_view(e).substr(2));
    }
    if (workers > 0) config["workers"] = workers;
    if (seed >= 0) config["seed"] = seed;
    if (config.empty() && command != "greens-check")
      throw Error(command + ": empty config (pass a JSON file or --key=value settings)");

    Context ctx;
    ctx.config = config;
    ctx.seed = seed_of(config);
    ctx.workers = resolve_workers(config);
    ctx.output_dir = output_dir;
    ctx.header = header_line(config);
    ctx.out = &out;
    if (command == "solve") return cmd_solve(ctx);
    if (command == "train") return cmd_train(ctx);
    if (command == "inpaint") return cmd_inpaint(ctx);
    if (command == "greens-check") return cmd_greens_check(ctx);
    return cmd_bench(ctx);
  } catch (const NumericalError& e) {
    err << "wosno " << command << ": numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "wosno " << command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace wosno::cli
