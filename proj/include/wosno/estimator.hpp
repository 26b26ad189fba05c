#pragma once

#include "wosno/walker.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace wosno {

// Running mean and Welford sum of squared deviations. The mean is kept as
// sum / n with a plain sequential sum, so feeding the same values in the same
// order always gives the same bits, however they were split into batches.
struct PointEstimate {
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t n_samples = 0;
  double sum = 0.0;

  void add(double value) {
    const double previous = mean;
    ++n_samples;
    sum += value;
    mean = sum / static_cast<double>(n_samples);
    m2 += (value - previous) * (value - mean);
  }

  // Sample variance; NaN for fewer than two samples.
  double variance() const;
  double standard_error() const;
};

struct EstimateOptions {
  std::uint64_t instance = 0;
  // Index of the first trajectory; trajectory t of point i always uses the
  // substream (cfg.rng_seed, instance, i, t).
  std::uint64_t first_trajectory = 0;
  int workers = 1;
};

// Fills row[0..L) with the L trajectory values of one point.
using PointWalks = std::function<void(std::size_t point, std::uint64_t first_trajectory,
                                      std::size_t L, double* row)>;

// Runs L walks for each of n_points points in parallel; values are laid out
// point-major (values[i * L + t]). Deterministic for any worker count.
std::vector<double> run_walks(std::size_t n_points, std::size_t L, const EstimateOptions& opts,
                              const PointWalks& walks);

std::vector<PointEstimate> summarize(const std::vector<double>& values, std::size_t n_points,
                                     std::size_t L);

// Walk values of plain (or antithetic, per cfg) walk-on-spheres trajectories.
// Antithetic mode requires L and first_trajectory to be even; trajectories 2m
// and 2m + 1 form a pair.
template <int D>
std::vector<double> poisson_walks(const PoissonProblem<D>& problem, const std::vector<Vec<D>>& points,
                                  std::size_t L, const WalkConfig& cfg, const EstimateOptions& opts);

std::vector<double> screened_walks(const ScreenedProblem& problem, const std::vector<Vec3>& points,
                                   std::size_t L, const WalkConfig& cfg,
                                   const EstimateOptions& opts);

template <int D>
std::vector<PointEstimate> estimate(const PoissonProblem<D>& problem,
                                    const std::vector<Vec<D>>& points, std::size_t L,
                                    const WalkConfig& cfg, const EstimateOptions& opts) {
  return summarize(poisson_walks(problem, points, L, cfg, opts), points.size(), L);
}

std::vector<PointEstimate> estimate(const ScreenedProblem& problem, const std::vector<Vec3>& points,
                                    std::size_t L, const WalkConfig& cfg,
                                    const EstimateOptions& opts);

// ((k - 1) / k) * previous + fresh / k, with Y^(0) = 0.
double running_average(double previous, double fresh, std::uint64_t k);

// New walk values for every point of one cached instance.
struct FreshBatch {
  std::size_t instance = 0;
  std::size_t L = 0;
  std::vector<double> values;  // point-major, points(instance) * L entries
};

// Per-(instance, point) running averages over a frozen point set. Entry (j, i)
// holds the exact mean of every walk value it has received.
class EstimateCache {
 public:
  EstimateCache() = default;
  explicit EstimateCache(const std::vector<std::size_t>& points_per_instance);

  std::size_t instances() const { return blocks_.size(); }
  std::size_t points(std::size_t instance) const;
  // Number of update calls.
  std::uint64_t epoch() const { return epoch_; }
  // Number of batches received by one instance.
  std::uint64_t visits(std::size_t instance) const;
  // Trajectory index the next batch for this instance should start at.
  std::uint64_t next_trajectory(std::size_t instance) const;

  const PointEstimate& entry(std::size_t instance, std::size_t point) const;
  const std::vector<PointEstimate>& block(std::size_t instance) const;

  // Throws "cache shape mismatch" if a batch names an unknown instance or has
  // the wrong number of values. Validates every batch before applying any.
  void update(const std::vector<FreshBatch>& batches);

  // Flat binary file: magic, version, provenance string, counts, entries.
  void save(const std::string& path, const std::string& provenance) const;
  static EstimateCache load(const std::string& path, std::string* provenance = nullptr);

  // Rows of (instance_id, coords..., mean, variance, n_samples).
  // coords[j][i] are the coordinates of point i of instance j.
  void write_csv(std::ostream& out, const std::vector<std::vector<std::vector<double>>>& coords) const;

 private:
  struct Block {
    std::vector<PointEstimate> entries;
    std::uint64_t visits = 0;
  };
  std::vector<Block> blocks_;
  std::uint64_t epoch_ = 0;
};

}  // namespace wosno
