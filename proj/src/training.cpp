#include "wosno/training.hpp"

#include "wosno/mesh.hpp"
#include "wosno/pde_family.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace wosno {

using nlohmann::json;

namespace {

// Stream tags separating the random decisions of one training run.
enum StreamTag : std::uint64_t {
  kPoolInstance = 1,
  kShuffle = 2,
  kModelInit = 3,
  kHeldOutInstance = 4,
  kFreshInstance = 5,
};

// Walk-key offsets so pool, fresh, reference and evaluation walks never share
// a substream.
constexpr std::uint64_t kFreshKeys = 1ULL << 40;
constexpr std::uint64_t kReferenceKeys = 2ULL << 40;
constexpr std::uint64_t kEvalKeys = 3ULL << 40;

std::vector<Vec2> to_vec2(const std::vector<Coords>& points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(p[0], p[1]);
  return out;
}

std::vector<Vec3> to_vec3(const std::vector<Coords>& points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(p[0], p[1], p[2]);
  return out;
}

template <int D>
std::vector<Coords> to_coords(const std::vector<Vec<D>>& points) {
  std::vector<Coords> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(p.data(), p.data() + D);
  return out;
}

class LinearMember final : public TrainingInstance {
 public:
  explicit LinearMember(LinearInstance inst) : inst_(inst) {}
  int dim() const override { return 2; }

  std::vector<Coords> sample_points(std::size_t n, Rng& rng) const override {
    const PolarDomain dom = inst_.domain();
    return to_coords<2>(sample_interior(dom, n, rng));
  }

  void features(const Coords& point, double* out) const override {
    const auto f = linear_features(inst_, Vec2(point[0], point[1]));
    std::copy(f.begin(), f.end(), out);
  }

  std::vector<double> walks(const std::vector<Coords>& points, std::size_t L, const WalkConfig& cfg,
                            const EstimateOptions& opts) const override {
    // Built per call: a pool of thousands of polar domains would hold
    // thousands of boundary-sample trees.
    const PolarDomain dom = inst_.domain();
    return poisson_walks(make_linear_problem(inst_, dom), to_vec2(points), L, cfg, opts);
  }

  json describe() const override { return inst_; }

 private:
  LinearInstance inst_;
};

class LinearFamily final : public TrainingFamily {
 public:
  std::string name() const override { return "linear"; }
  std::size_t feature_count() const override { return kLinearFeatureCount; }
  std::unique_ptr<TrainingInstance> sample(Rng& rng) const override {
    return std::make_unique<LinearMember>(sample_linear_instance(rng));
  }
};

class ConstantMember final : public TrainingInstance {
 public:
  ConstantMember(std::shared_ptr<const PolarDomain> dom, double c) : dom_(std::move(dom)), c_(c) {}
  int dim() const override { return 2; }

  std::vector<Coords> sample_points(std::size_t n, Rng& rng) const override {
    return to_coords<2>(sample_interior(*dom_, n, rng));
  }

  void features(const Coords& point, double* out) const override {
    out[0] = point[0];
    out[1] = point[1];
    out[2] = c_;
  }

  std::vector<double> walks(const std::vector<Coords>& points, std::size_t L, const WalkConfig& cfg,
                            const EstimateOptions& opts) const override {
    const double c = c_;
    const PoissonProblem<2> problem{dom_.get(), {}, [c](const Vec2&) { return c; }};
    return poisson_walks(problem, to_vec2(points), L, cfg, opts);
  }

  json describe() const override { return json{{"family", "constant"}, {"c", c_}}; }

 private:
  std::shared_ptr<const PolarDomain> dom_;
  double c_;
};

class ConstantFamily final : public TrainingFamily {
 public:
  ConstantFamily() : dom_(std::make_shared<PolarDomain>()) {}
  std::string name() const override { return "constant"; }
  std::size_t feature_count() const override { return 3; }
  std::unique_ptr<TrainingInstance> sample(Rng& rng) const override {
    return std::make_unique<ConstantMember>(dom_, uniform(rng, -1.0, 1.0));
  }

 private:
  std::shared_ptr<const PolarDomain> dom_;
};

class VcMember final : public TrainingInstance {
 public:
  VcMember(std::shared_ptr<const Domain<3>> dom, VcInstance inst, double sigma_bar)
      : dom_(std::move(dom)), inst_(std::move(inst)), sigma_bar_(sigma_bar) {}
  int dim() const override { return 3; }

  std::vector<Coords> sample_points(std::size_t n, Rng& rng) const override {
    return to_coords<3>(sample_interior(*dom_, n, rng));
  }

  void features(const Coords& point, double* out) const override {
    const auto f = vc_features(inst_, Vec3(point[0], point[1], point[2]));
    std::copy(f.begin(), f.end(), out);
  }

  std::vector<double> walks(const std::vector<Coords>& points, std::size_t L, const WalkConfig& cfg,
                            const EstimateOptions& opts) const override {
    WalkConfig c = cfg;
    c.sigma_bar = sigma_bar_;
    return screened_walks(make_vc_problem(inst_, *dom_), to_vec3(points), L, c, opts);
  }

  json describe() const override {
    json j = inst_;
    j["sigma_bar"] = sigma_bar_;
    return j;
  }

 private:
  std::shared_ptr<const Domain<3>> dom_;
  VcInstance inst_;
  double sigma_bar_;
};

class VcFamily final : public TrainingFamily {
 public:
  explicit VcFamily(const json& options) {
    if (options.contains("mesh")) {
      mesh_path_ = options.at("mesh").get<std::string>();
      dom_ = std::make_shared<MeshDomain>(read_obj(mesh_path_));
    } else {
      mesh_path_ = "";
      dom_ = std::make_shared<BallDomain<3>>(options.value("radius", 1.0));
    }
    probes_ = options.value("sigma_probes", std::size_t{10000});
  }
  std::string name() const override { return "vc"; }
  std::size_t feature_count() const override { return kVcFeatureCount; }
  std::unique_ptr<TrainingInstance> sample(Rng& rng) const override {
    VcInstance inst = sample_vc_instance(rng, mesh_path_);
    const double sigma_bar = estimate_sigma_bar(inst, *dom_, rng, probes_);
    return std::make_unique<VcMember>(dom_, std::move(inst), sigma_bar);
  }

 private:
  std::string mesh_path_;
  std::shared_ptr<const Domain<3>> dom_;
  std::size_t probes_;
};

Eigen::MatrixXd feature_matrix(const TrainingInstance& inst, const std::vector<Coords>& points,
                               std::size_t n_features) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_features), static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    inst.features(points[i], x.col(static_cast<Eigen::Index>(i)).data());
  return x;
}

void check_config(const TrainConfig& cfg) {
  if (cfg.steps < 0) throw Error("train.steps must be >= 0");
  if (cfg.points_per_instance < 1) throw Error("train.points_per_instance must be >= 1");
  if (cfg.instances_per_batch < 1) throw Error("train.instances_per_batch must be >= 1");
  if (cfg.L < 1) throw Error("train.L must be >= 1");
  if (cfg.caching && cfg.pool_size < cfg.instances_per_batch)
    throw Error("train.pool_size must be >= train.instances_per_batch");
  if (!(cfg.adam.lr > 0.0)) throw Error("train.lr must be positive");
  if (cfg.workers < 1) throw Error("workers must be >= 1");
}

}  // namespace

std::unique_ptr<TrainingFamily> make_family(const std::string& name, const json& options) {
  if (name == "linear") return std::make_unique<LinearFamily>();
  if (name == "constant") return std::make_unique<ConstantFamily>();
  if (name == "vc") return std::make_unique<VcFamily>(options);
  throw Error("unknown family '" + name + "' (linear, constant, vc)");
}

TrainResult train(const TrainingFamily& family, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress) {
  std::vector<int> sizes{static_cast<int>(family.feature_count())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  Mlp model(sizes);
  Rng init_rng = make_stream(cfg.seed, kModelInit);
  model.init(init_rng);
  return train(std::move(model), family, cfg, progress);
}

TrainResult train(Mlp model, const TrainingFamily& family, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress) {
  check_config(cfg);
  if (static_cast<std::size_t>(model.input_size()) != family.feature_count())
    throw Error("train: model input size does not match the family's features");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_features = family.feature_count();
  const std::size_t M = cfg.instances_per_batch;
  const std::size_t N = cfg.points_per_instance;
  WalkConfig walk = cfg.walk;
  walk.rng_seed = cfg.seed;

  TrainResult result;
  result.model = std::move(model);
  if (cfg.steps == 0) return result;

  // Frozen pool for the caching mode.
  std::vector<std::unique_ptr<TrainingInstance>> pool;
  std::vector<std::vector<Coords>> pool_points;
  std::vector<Eigen::MatrixXd> pool_features;
  EstimateCache cache;
  if (cfg.caching) {
    for (std::size_t j = 0; j < cfg.pool_size; ++j) {
      Rng rng = make_stream(cfg.seed, kPoolInstance, j);
      pool.push_back(family.sample(rng));
      pool_points.push_back(pool.back()->sample_points(N, rng));
      pool_features.push_back(feature_matrix(*pool.back(), pool_points.back(), n_features));
    }
    cache = EstimateCache(std::vector<std::size_t>(cfg.pool_size, N));
  }

  Eigen::VectorXd theta = result.model.parameters();
  Adam adam(theta.size(), cfg.adam);
  PlateauScheduler plateau(cfg.plateau_factor, cfg.plateau_patience);
  const std::size_t window = std::max<std::size_t>(1, cfg.pool_size / M);

  std::vector<std::size_t> order(cfg.pool_size);
  std::size_t order_at = order.size();
  std::uint64_t pass = 0;
  double window_loss = 0.0;
  std::size_t window_steps = 0;

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_features), static_cast<Eigen::Index>(M * N));
  Eigen::VectorXd y(static_cast<Eigen::Index>(M * N));

  for (long step = 0; step < cfg.steps; ++step) {
    if (cfg.caching) {
      std::vector<FreshBatch> batches;
      std::vector<std::size_t> chosen;
      for (std::size_t m = 0; m < M; ++m) {
        if (order_at == order.size()) {
          std::iota(order.begin(), order.end(), std::size_t{0});
          Rng shuffle_rng = make_stream(cfg.seed, kShuffle, pass++);
          std::shuffle(order.begin(), order.end(), shuffle_rng);
          order_at = 0;
        }
        const std::size_t j = order[order_at++];
        chosen.push_back(j);
        EstimateOptions opts{j, cache.next_trajectory(j), cfg.workers};
        batches.push_back({j, cfg.L, pool[j]->walks(pool_points[j], cfg.L, walk, opts)});
      }
      cache.update(batches);
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t j = chosen[m];
        const auto col = static_cast<Eigen::Index>(m * N);
        x.middleCols(col, static_cast<Eigen::Index>(N)) = pool_features[j];
        const auto& block = cache.block(j);
        for (std::size_t i = 0; i < N; ++i) y(col + static_cast<Eigen::Index>(i)) = block[i].mean;
      }
    } else {
      for (std::size_t m = 0; m < M; ++m) {
        const std::uint64_t key = static_cast<std::uint64_t>(step) * M + m;
        Rng rng = make_stream(cfg.seed, kFreshInstance, key);
        const auto inst = family.sample(rng);
        const auto points = inst->sample_points(N, rng);
        EstimateOptions opts{kFreshKeys + key, 0, cfg.workers};
        const auto est = summarize(inst->walks(points, cfg.L, walk, opts), N, cfg.L);
        const auto col = static_cast<Eigen::Index>(m * N);
        x.middleCols(col, static_cast<Eigen::Index>(N)) = feature_matrix(*inst, points, n_features);
        for (std::size_t i = 0; i < N; ++i) y(col + static_cast<Eigen::Index>(i)) = est[i].mean;
      }
    }
    result.walks += static_cast<std::uint64_t>(M * N * cfg.L);

    const LossGradient lg = backward(result.model, x, y);
    if (!std::isfinite(lg.loss) || lg.loss > cfg.divergence_limit)
      throw NumericalError("training diverged at step " + std::to_string(step) +
                           ": loss = " + std::to_string(lg.loss) +
                           ", lr = " + std::to_string(adam.lr()));
    adam.step(theta, lg.gradient);
    result.model.set_parameters(theta);

    TrainRecord rec;
    rec.step = step;
    rec.loss = lg.loss;
    rec.lr = adam.lr();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (progress) progress(rec);

    window_loss += lg.loss;
    if (++window_steps == window) {
      adam.set_lr(adam.lr() * plateau.observe(window_loss / static_cast<double>(window_steps)));
      window_loss = 0.0;
      window_steps = 0;
    }
  }
  return result;
}

HeldOutSet build_held_out(const TrainingFamily& family, std::size_t n_instances,
                          std::size_t n_points, std::size_t L_ref, const WalkConfig& walk,
                          std::uint64_t seed, int workers) {
  HeldOutSet out;
  WalkConfig cfg = walk;
  cfg.rng_seed = seed;
  for (std::size_t i = 0; i < n_instances; ++i) {
    Rng rng = make_stream(seed, kHeldOutInstance, i);
    out.instances.push_back(family.sample(rng));
    out.points.push_back(out.instances.back()->sample_points(n_points, rng));
    EstimateOptions opts{kReferenceKeys + i, 0, workers};
    out.reference.push_back(
        summarize(out.instances.back()->walks(out.points.back(), L_ref, cfg, opts), n_points, L_ref));
  }
  return out;
}

EvalReport evaluate(const Mlp& model, const HeldOutSet& held_out, std::size_t L_wos,
                    const WalkConfig& walk, std::uint64_t seed, int workers) {
  EvalReport r;
  WalkConfig cfg = walk;
  cfg.rng_seed = seed;
  const auto n_features = static_cast<std::size_t>(model.input_size());
  for (std::size_t i = 0; i < held_out.instances.size(); ++i) {
    const auto& inst = *held_out.instances[i];
    const auto& points = held_out.points[i];
    const auto& ref = held_out.reference[i];
    const Eigen::VectorXd pred = model.forward(feature_matrix(inst, points, n_features));
    EstimateOptions opts{kEvalKeys + i, 0, workers};
    const auto wos = summarize(inst.walks(points, L_wos, cfg, opts), points.size(), L_wos);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const double se2 = ref[p].n_samples >= 2 ? ref[p].variance() / static_cast<double>(ref[p].n_samples) : 0.0;
      r.surrogate_mse_raw += std::pow(pred(static_cast<Eigen::Index>(p)) - ref[p].mean, 2);
      r.wos_mse_raw += std::pow(wos[p].mean - ref[p].mean, 2);
      r.reference_se2 += se2;
      ++r.pairs;
    }
  }
  if (r.pairs == 0) throw Error("evaluate: empty held-out set");
  const double n = static_cast<double>(r.pairs);
  r.surrogate_mse_raw /= n;
  r.wos_mse_raw /= n;
  r.reference_se2 /= n;
  r.surrogate_mse = std::max(0.0, r.surrogate_mse_raw - r.reference_se2);
  r.wos_mse = std::max(0.0, r.wos_mse_raw - r.reference_se2);
  r.denoising_ratio = r.surrogate_mse > 0.0 ? r.wos_mse / r.surrogate_mse
                                            : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace wosno
