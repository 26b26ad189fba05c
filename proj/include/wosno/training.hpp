#pragma once

#include "wosno/estimator.hpp"
#include "wosno/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace wosno {

using Coords = std::vector<double>;

// One member of a PDE family, ready to be walked and encoded.
class TrainingInstance {
 public:
  virtual ~TrainingInstance() = default;
  virtual int dim() const = 0;
  // Uniform interior points.
  virtual std::vector<Coords> sample_points(std::size_t n, Rng& rng) const = 0;
  // Appends the surrogate features of (instance, point) to out.
  virtual void features(const Coords& point, double* out) const = 0;
  // Walk values, point-major, as returned by run_walks.
  virtual std::vector<double> walks(const std::vector<Coords>& points, std::size_t L,
                                    const WalkConfig& cfg, const EstimateOptions& opts) const = 0;
  virtual nlohmann::json describe() const = 0;
};

class TrainingFamily {
 public:
  virtual ~TrainingFamily() = default;
  virtual std::string name() const = 0;
  virtual std::size_t feature_count() const = 0;
  virtual std::unique_ptr<TrainingInstance> sample(Rng& rng) const = 0;
};

// "linear": the polar-domain Poisson family.
// "constant": f = 0, g = c with c ~ U(-1, 1) on the unit disk; targets are exact.
// "vc": the varying-coefficient family on options["mesh"] (OBJ path).
std::unique_ptr<TrainingFamily> make_family(const std::string& name,
                                            const nlohmann::json& options = {});

struct TrainConfig {
  long steps = 20000;                  // optimizer steps (Algorithm-1 iterations)
  std::size_t points_per_instance = 1024;
  std::size_t instances_per_batch = 4;
  std::size_t L = 10;
  bool caching = true;
  // Size of the frozen instance pool used when caching.
  std::size_t pool_size = 2000;
  std::vector<int> hidden = {128, 128, 128};
  AdamConfig adam;
  double plateau_factor = 0.9;
  int plateau_patience = 2;
  double divergence_limit = 1e6;
  WalkConfig walk;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct TrainRecord {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Mlp model;
  std::vector<TrainRecord> history;
  std::uint64_t walks = 0;
};

// Weak-supervision training. With caching, the pool is visited in shuffled
// passes of instances_per_batch instances per step; each visit adds L walks per
// point to the running-average targets. Without caching, every step draws new
// instances and points. The learning-rate plateau is checked once per pass
// over the pool (caching) or every pool_size / instances_per_batch steps.
// `progress`, if set, is called after every step.
TrainResult train(const TrainingFamily& family, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress = {});

// The same, continuing from an existing model.
TrainResult train(Mlp model, const TrainingFamily& family, const TrainConfig& cfg,
                  const std::function<void(const TrainRecord&)>& progress = {});

struct HeldOutSet {
  std::vector<std::unique_ptr<TrainingInstance>> instances;
  std::vector<std::vector<Coords>> points;
  std::vector<std::vector<PointEstimate>> reference;
};

// High-fidelity references from L_ref walks per point, on instances drawn
// from streams disjoint from training.
HeldOutSet build_held_out(const TrainingFamily& family, std::size_t n_instances,
                          std::size_t n_points, std::size_t L_ref, const WalkConfig& walk,
                          std::uint64_t seed, int workers);

struct EvalReport {
  std::size_t pairs = 0;
  double surrogate_mse_raw = 0.0;
  double wos_mse_raw = 0.0;
  double reference_se2 = 0.0;  // mean squared standard error of the reference
  double surrogate_mse = 0.0;  // raw minus reference_se2
  double wos_mse = 0.0;
  double denoising_ratio = 0.0;  // wos_mse / surrogate_mse
};

// Compares the surrogate and an independent L_wos-walk estimate against the
// reference.
EvalReport evaluate(const Mlp& model, const HeldOutSet& held_out, std::size_t L_wos,
                    const WalkConfig& walk, std::uint64_t seed, int workers);

}  // namespace wosno
