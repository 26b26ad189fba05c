#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wosno/training.hpp"

#include <algorithm>
#include <cmath>

using namespace wosno;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.steps = 200;
  cfg.points_per_instance = 16;
  cfg.instances_per_batch = 4;
  cfg.L = 4;
  cfg.pool_size = 40;
  cfg.hidden = {16, 16};
  cfg.seed = 5;
  return cfg;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("zero steps leave the model unchanged") {
  const auto family = make_family("constant");
  TrainConfig cfg = small_config();
  cfg.steps = 0;
  Rng rng(1);
  Mlp model({3, 8, 1});
  model.init(rng);
  const auto before = model.parameters();
  const auto result = train(model, *family, cfg);
  CHECK(result.history.empty());
  CHECK(result.model.parameters() == before);
  CHECK(result.walks == 0);
}

TEST_CASE("families") {
  CHECK(make_family("linear")->feature_count() == 15);
  CHECK(make_family("constant")->feature_count() == 3);
  CHECK_THROWS_AS(make_family("heat"), Error);
  Rng rng(2);
  const auto inst = make_family("linear")->sample(rng);
  const auto pts = inst->sample_points(100, rng);
  CHECK(pts.size() == 100);
  CHECK(inst->dim() == 2);
  std::vector<double> f(15);
  inst->features(pts[0], f.data());
  CHECK(f[0] == pts[0][0]);
  CHECK(f[1] == pts[0][1]);
}

TEST_CASE("constant family regresses to exact targets") {
  const auto family = make_family("constant");
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.points_per_instance = 32;
  cfg.instances_per_batch = 8;
  cfg.L = 1;
  cfg.pool_size = 400;
  cfg.hidden = {32, 32};
  cfg.adam.lr = 3e-3;
  cfg.seed = 11;
  const auto result = train(*family, cfg);
  const auto held = build_held_out(*family, 50, 16, 2, cfg.walk, 99, 1);
  const auto report = evaluate(result.model, held, 1, cfg.walk, 99, 1);
  MESSAGE("constant family test MSE " << report.surrogate_mse_raw);
  CHECK(report.reference_se2 == 0.0);
  CHECK(report.wos_mse_raw == 0.0);
  CHECK(report.surrogate_mse_raw < 1e-4);
}

TEST_CASE("training is deterministic on one worker") {
  const auto family = make_family("linear");
  const auto cfg = small_config();
  const auto a = train(*family, cfg);
  const auto b = train(*family, cfg);
  CHECK(a.model.parameters() == b.model.parameters());
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
  CHECK(a.walks == static_cast<std::uint64_t>(cfg.steps) * 4 * 16 * 4);

  TrainConfig other = cfg;
  other.seed = 6;
  CHECK(train(*family, other).model.parameters() != a.model.parameters());
}

TEST_CASE("cached training loss decreases") {
  const auto family = make_family("linear");
  TrainConfig cfg = small_config();
  cfg.steps = 600;
  const auto result = train(*family, cfg);
  REQUIRE(result.history.size() == 600);
  std::vector<double> first, last;
  for (std::size_t i = 0; i < 60; ++i) first.push_back(result.history[i].loss);
  for (std::size_t i = 540; i < 600; ++i) last.push_back(result.history[i].loss);
  MESSAGE("median loss first " << median(first) << " last " << median(last));
  CHECK(median(last) < median(first));
  CHECK(result.history.back().step == 599);
}

TEST_CASE("non-caching mode trains on fresh instances") {
  const auto family = make_family("constant");
  TrainConfig cfg = small_config();
  cfg.caching = false;
  cfg.steps = 300;
  const auto result = train(*family, cfg);
  CHECK(result.history.size() == 300);
  CHECK(std::isfinite(result.history.back().loss));
}

TEST_CASE("divergence guard") {
  const auto family = make_family("constant");
  TrainConfig cfg = small_config();
  cfg.divergence_limit = 1e-12;
  CHECK_THROWS_AS(train(*family, cfg), NumericalError);
}

TEST_CASE("final error is insensitive to L") {
  const auto family = make_family("linear");
  TrainConfig cfg;
  cfg.steps = 1500;
  cfg.points_per_instance = 16;
  cfg.instances_per_batch = 4;
  cfg.pool_size = 200;
  cfg.hidden = {64, 64};
  cfg.seed = 21;
  const auto held = build_held_out(*family, 20, 8, 2000, cfg.walk, 77, 1);
  double mse[2];
  const std::size_t Ls[] = {1, 10};
  for (int k = 0; k < 2; ++k) {
    cfg.L = Ls[k];
    const auto result = train(*family, cfg);
    mse[k] = evaluate(result.model, held, 1, cfg.walk, 77, 1).surrogate_mse;
  }
  MESSAGE("held-out MSE L=1 " << mse[0] << ", L=10 " << mse[1]);
  CHECK(std::max(mse[0], mse[1]) < 2.0 * std::min(mse[0], mse[1]));
}
