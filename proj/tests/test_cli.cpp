#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wosno/cli.hpp"
#include "wosno/image.hpp"
#include "wosno/types.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace wosno;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "wosno");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wosno_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& name, const json& j) {
  const auto path = dir / name;
  std::ofstream(path) << j.dump(2);
  return path.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string body(const std::string& text) { return text.substr(text.find('\n') + 1); }

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(cli::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(cli::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("header line and config hash") {
  json cfg = {{"seed", 7}, {"workers", 3}, {"L", 10}};
  const auto h = cli::header_line(cfg);
  CHECK(h.starts_with("# wosno "));
  CHECK(h.find(" seed=7 ") != std::string::npos);
  CHECK(h.find(" workers=3 ") != std::string::npos);
  CHECK(h.find(" config_hash=" + cli::config_hash(cfg)) != std::string::npos);
  json other = cfg;
  other["workers"] = 8;
  CHECK(cli::config_hash(other) == cli::config_hash(cfg));
  other["L"] = 11;
  CHECK(cli::config_hash(other) != cli::config_hash(cfg));
  CHECK(cli::config_hash(cfg).size() == 16);
}

TEST_CASE("worker resolution") {
  unsetenv("WOSNO_WORKERS");
  CHECK(cli::resolve_workers(json::object()) == 1);
  setenv("WOSNO_WORKERS", "6", 1);
  CHECK(cli::resolve_workers(json::object()) == 6);
  CHECK(cli::resolve_workers({{"workers", 2}}) == 2);
  setenv("WOSNO_WORKERS", "zero", 1);
  CHECK_THROWS_AS(cli::resolve_workers(json::object()), Error);
  unsetenv("WOSNO_WORKERS");
  CHECK_THROWS_AS(cli::resolve_workers({{"workers", 0}}), Error);
}

TEST_CASE("config parsing and overrides") {
  try {
    cli::parse_config("{\n  \"a\": 1,\n  \"b\": ]\n}", "bad.json");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).starts_with("bad.json:3:"));
  }
  CHECK_THROWS_AS(cli::parse_config("[1, 2]", "x"), Error);

  json cfg = cli::parse_config(R"({"walk": {"eps_shell": 0.001}})", "x");
  cli::apply_override(cfg, "walk.max_steps=50");
  cli::apply_override(cfg, "problem.kind=constant");
  cli::apply_override(cfg, "points.coords=[[0.1,0.2]]");
  cli::apply_override(cfg, "train.caching=false");
  CHECK(cfg["walk"]["max_steps"] == 50);
  CHECK(cfg["walk"]["eps_shell"] == 0.001);
  CHECK(cfg["problem"]["kind"] == "constant");
  CHECK(cfg["points"]["coords"][0][1] == 0.2);
  CHECK(cfg["train"]["caching"] == false);
  CHECK_THROWS_AS(cli::apply_override(cfg, "novalue"), Error);
}

TEST_CASE("usage errors exit with status 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  for (const char* cmd : {"solve", "train", "inpaint", "bench"}) {
    const auto r = run({cmd});
    CHECK(r.code == 1);
    CHECK(r.err.find("empty config") != std::string::npos);
  }
  const auto dir = scratch("errors");
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{\"L\": 10,\n\"problem\": {\"kind\": }}";
  const auto r = run({"solve", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.json:2:") != std::string::npos);
  const auto typed = run({"solve", "--problem.kind=constant", "--L=many", "--output-dir=" + dir.string()});
  CHECK(typed.code == 1);
  CHECK(typed.err.find("config field 'L'") != std::string::npos);
  CHECK(run({"solve", "--problem.kind=heat", "--output-dir=" + dir.string()}).code == 1);
  CHECK(run({"solve", (dir / "missing.json").string()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("solve: constant boundary without source") {
  const auto dir = scratch("solve_const");
  const auto cfg = write_config(dir, "c.json",
                                {{"problem", {{"kind", "constant"}, {"boundary", 1.0}}},
                                 {"domain", {{"kind", "ball"}}},
                                 {"points", {{"kind", "random"}, {"n", 100}}},
                                 {"L", 16},
                                 {"seed", 3}});
  const auto r = run({"solve", cfg, "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(dir / "solve.csv"));
  REQUIRE(rows.size() == 102);
  CHECK(rows[0].starts_with("# wosno"));
  CHECK(rows[1] == "x,y,mean,variance,n_samples");
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(rows[i].ends_with(",1,0,16"));
  const json summary = json::parse(slurp(dir / "solve_summary.json"));
  CHECK(summary["header"] == rows[0]);
  CHECK(summary["points"] == 100);
  fs::remove_all(dir);
}

TEST_CASE("solve: unit source on the disk") {
  const auto dir = scratch("solve_disk");
  const auto r = run({"solve", "--problem.kind=constant", "--problem.source=1", "--domain.kind=ball",
                      "--points.kind=list", "--points.coords=[[0,0]]", "--L=100000",
                      "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(dir / "solve.csv"));
  REQUIRE(rows.size() == 3);
  double x, y, mean, var;
  long n;
  REQUIRE(std::sscanf(rows[2].c_str(), "%lf,%lf,%lf,%lf,%ld", &x, &y, &mean, &var, &n) == 5);
  CHECK(n == 100000);
  CHECK(std::abs(mean + 0.25) < 3 * std::sqrt(var / n));
  fs::remove_all(dir);
}

TEST_CASE("solve output does not depend on the worker count") {
  const auto dir = scratch("solve_workers");
  const auto cfg = write_config(dir, "lin.json",
                                {{"problem", {{"kind", "linear"}, {"instance_seed", 4}}},
                                 {"points", {{"kind", "grid"}, {"n", 6}}},
                                 {"L", 40},
                                 {"seed", 42}});
  std::vector<std::string> outputs;
  for (int w : {1, 4, 8}) {
    const auto out = dir / ("w" + std::to_string(w) + ".csv");
    REQUIRE(run({"solve", cfg, "--workers", std::to_string(w), "--output=" + out.string(),
                 "--output-dir=" + dir.string()})
                .code == 0);
    outputs.push_back(slurp(out));
    CHECK(lines(outputs.back())[0].find("workers=" + std::to_string(w)) != std::string::npos);
  }
  CHECK(body(outputs[0]) == body(outputs[1]));
  CHECK(body(outputs[0]) == body(outputs[2]));
  CHECK(lines(outputs[0]).size() > 10);
  fs::remove_all(dir);
}

TEST_CASE("solve: varying-coefficient problem on a mesh") {
  const auto dir = scratch("solve_vc");
  const std::string mesh = std::string(WOSNO_DATA_DIR) + "/cube.obj";
  const auto r = run({"solve", "--problem.kind=vc", "--domain.kind=mesh", "--domain.path=" + mesh,
                      "--points.kind=list", "--points.coords=[[0.5,0.5,0.5]]", "--L=200",
                      "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(dir / "solve.csv"));
  CHECK(rows[1] == "x,y,z,mean,variance,n_samples");
  const json summary = json::parse(slurp(dir / "solve_summary.json"));
  CHECK(summary["problem"]["sigma_bar"].get<double>() > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("greens-check passes with defaults") {
  const auto dir = scratch("greens");
  const auto r = run({"greens-check", "--output-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS greens_mass d=3 r=2") != std::string::npos);
  CHECK(r.out.find("PASS screened balance identity") != std::string::npos);
  const json summary = json::parse(slurp(dir / "greens-check_summary.json"));
  CHECK(summary["pass"] == true);
  CHECK(summary["checks"].size() == 9);
  fs::remove_all(dir);
}

TEST_CASE("train writes a checkpoint and a loss trace") {
  const auto dir = scratch("train");
  const auto r = run({"train", "--family=constant", "--train.steps=50", "--train.points_per_instance=8",
                      "--train.pool_size=20", "--train.L=2", "--train.hidden=[8]", "--eval.instances=4",
                      "--eval.L_ref=4", "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const auto loss = lines(slurp(dir / "loss.csv"));
  CHECK(loss[0].starts_with("# wosno"));
  CHECK(loss[1] == "epoch,loss,lr,wall_clock");
  CHECK(loss.size() == 52);
  CHECK(fs::exists(dir / "model.bin"));
  const json summary = json::parse(slurp(dir / "train_summary.json"));
  CHECK(summary["eval"]["pairs"] == 32);
  CHECK(run({"train", "--train.steps=5", "--output-dir=" + dir.string()}).code == 1);
  // Divergence guard is a numerical failure.
  CHECK(run({"train", "--family=constant", "--train.steps=5", "--train.points_per_instance=4",
             "--train.pool_size=8", "--train.hidden=[4]", "--train.lr=1e30",
             "--output-dir=" + dir.string()})
            .code == 2);
  fs::remove_all(dir);
}

TEST_CASE("inpaint on a synthetic ramp and from PGM files") {
  const auto dir = scratch("inpaint");
  auto r = run({"inpaint", "--image.kind=ramp", "--image.width=40", "--image.height=40", "--mask.kind=square",
                "--mask.size=10", "--method=harmonic", "--walks_per_pixel=64", "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const json summary = json::parse(slurp(dir / "inpaint_summary.json"));
  CHECK(summary["masked_pixels"] == 100);
  CHECK(summary["max_abs_error_vs_truth"].get<double>() < 0.05);
  const auto out = read_pgm((dir / "inpainted.pgm").string());
  CHECK(out.width == 40);

  GrayImage img(20, 20, 0.25), mask(20, 20, 0.0);
  for (int y = 8; y < 12; ++y)
    for (int x = 8; x < 12; ++x) mask.at(x, y) = 1.0;
  write_pgm((dir / "img.pgm").string(), img);
  write_pgm((dir / "mask.pgm").string(), mask);
  r = run({"inpaint", "--image=" + (dir / "img.pgm").string(), "--mask=" + (dir / "mask.pgm").string(),
           "--walks_per_pixel=8", "--output=" + (dir / "filled.pgm").string(), "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const auto filled = read_pgm((dir / "filled.pgm").string());
  CHECK(filled.at(10, 10) == doctest::Approx(0.25).epsilon(0.01));
  CHECK(run({"inpaint", "--image.kind=ramp", "--mask.kind=circle", "--output-dir=" + dir.string()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("bench reports variance per L") {
  const auto dir = scratch("bench");
  const auto r = run({"bench", "--problem.kind=constant", "--problem.source=1", "--domain.kind=ball",
                      "--L_values=[2,8]", "--replicas=50", "--compare_antithetic=true",
                      "--output-dir=" + dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(dir / "bench.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[1] == "mode,L,replicas,mean,variance_of_mean,L_times_variance,seconds,walks_per_second");
  CHECK(rows[2].starts_with("plain,2,50,"));
  CHECK(rows[5].starts_with("antithetic,8,50,"));
  fs::remove_all(dir);
}
