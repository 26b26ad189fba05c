#include "wosno/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>

namespace wosno {

double PointEstimate::variance() const {
  if (n_samples < 2) return std::numeric_limits<double>::quiet_NaN();
  return m2 / static_cast<double>(n_samples - 1);
}

double PointEstimate::standard_error() const {
  return std::sqrt(variance() / static_cast<double>(n_samples));
}

std::vector<double> run_walks(std::size_t n_points, std::size_t L, const EstimateOptions& opts,
                              const PointWalks& walks) {
  if (L < 1) throw Error("estimate: L must be >= 1");
  if (opts.workers < 1) throw Error("estimate: workers must be >= 1");
  std::vector<double> values(n_points * L);

  // Rethrow the failure of the lowest point index so errors do not depend on
  // scheduling.
  std::exception_ptr failure;
  std::size_t failed_point = n_points;
  const long long n = static_cast<long long>(n_points);

#pragma omp parallel for schedule(dynamic, 1) num_threads(opts.workers)
  for (long long i = 0; i < n; ++i) {
    const auto p = static_cast<std::size_t>(i);
    try {
      walks(p, opts.first_trajectory, L, values.data() + p * L);
    } catch (...) {
#pragma omp critical(wosno_run_walks)
      {
        if (p < failed_point) {
          failed_point = p;
          failure = std::current_exception();
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

std::vector<PointEstimate> summarize(const std::vector<double>& values, std::size_t n_points,
                                     std::size_t L) {
  if (values.size() != n_points * L) throw Error("summarize: value count mismatch");
  std::vector<PointEstimate> out(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    for (std::size_t t = 0; t < L; ++t) out[i].add(values[i * L + t]);
  return out;
}

template <int D>
std::vector<double> poisson_walks(const PoissonProblem<D>& problem, const std::vector<Vec<D>>& points,
                                  std::size_t L, const WalkConfig& cfg, const EstimateOptions& opts) {
  if (cfg.antithetic && (L % 2 != 0 || opts.first_trajectory % 2 != 0))
    throw Error("estimate: antithetic mode needs an even trajectory count");
  for (const auto& p : points)
    if (!problem.domain->contains(p)) throw Error("exterior query");

  return run_walks(points.size(), L, opts,
                   [&](std::size_t i, std::uint64_t first, std::size_t count, double* row) {
                     if (cfg.antithetic) {
                       for (std::size_t t = 0; t < count; t += 2) {
                         Rng rng = make_stream(cfg.rng_seed, opts.instance, i,
                                               (first + t) / 2);
                         const auto pair = walk_poisson_antithetic(problem, points[i], cfg, rng);
                         row[t] = pair.first.value;
                         row[t + 1] = pair.second.value;
                       }
                     } else {
                       for (std::size_t t = 0; t < count; ++t) {
                         Rng rng = make_stream(cfg.rng_seed, opts.instance, i, first + t);
                         row[t] = walk_poisson(problem, points[i], cfg, rng).value;
                       }
                     }
                   });
}

template std::vector<double> poisson_walks<2>(const PoissonProblem<2>&, const std::vector<Vec2>&,
                                              std::size_t, const WalkConfig&, const EstimateOptions&);
template std::vector<double> poisson_walks<3>(const PoissonProblem<3>&, const std::vector<Vec3>&,
                                              std::size_t, const WalkConfig&, const EstimateOptions&);

std::vector<double> screened_walks(const ScreenedProblem& problem, const std::vector<Vec3>& points,
                                   std::size_t L, const WalkConfig& cfg,
                                   const EstimateOptions& opts) {
  for (const auto& p : points)
    if (!problem.domain->contains(p)) throw Error("exterior query");
  return run_walks(points.size(), L, opts,
                   [&](std::size_t i, std::uint64_t first, std::size_t count, double* row) {
                     for (std::size_t t = 0; t < count; ++t) {
                       Rng rng = make_stream(cfg.rng_seed, opts.instance, i, first + t);
                       row[t] = walk_screened_delta(problem, points[i], cfg, rng).value;
                     }
                   });
}

std::vector<PointEstimate> estimate(const ScreenedProblem& problem, const std::vector<Vec3>& points,
                                    std::size_t L, const WalkConfig& cfg,
                                    const EstimateOptions& opts) {
  return summarize(screened_walks(problem, points, L, cfg, opts), points.size(), L);
}

double running_average(double previous, double fresh, std::uint64_t k) {
  if (k == 0) throw Error("running_average: k must be >= 1");
  const double kd = static_cast<double>(k);
  return ((kd - 1.0) / kd) * previous + fresh / kd;
}

EstimateCache::EstimateCache(const std::vector<std::size_t>& points_per_instance) {
  blocks_.reserve(points_per_instance.size());
  for (std::size_t n : points_per_instance) blocks_.push_back({std::vector<PointEstimate>(n), 0});
}

std::size_t EstimateCache::points(std::size_t instance) const {
  return block(instance).size();
}

std::uint64_t EstimateCache::visits(std::size_t instance) const {
  if (instance >= blocks_.size()) throw Error("cache shape mismatch");
  return blocks_[instance].visits;
}

std::uint64_t EstimateCache::next_trajectory(std::size_t instance) const {
  const auto& entries = block(instance);
  return entries.empty() ? 0 : entries.front().n_samples;
}

const PointEstimate& EstimateCache::entry(std::size_t instance, std::size_t point) const {
  const auto& entries = block(instance);
  if (point >= entries.size()) throw Error("cache shape mismatch");
  return entries[point];
}

const std::vector<PointEstimate>& EstimateCache::block(std::size_t instance) const {
  if (instance >= blocks_.size()) throw Error("cache shape mismatch");
  return blocks_[instance].entries;
}

void EstimateCache::update(const std::vector<FreshBatch>& batches) {
  for (const auto& b : batches) {
    if (b.instance >= blocks_.size() || b.L == 0 ||
        b.values.size() != blocks_[b.instance].entries.size() * b.L)
      throw Error("cache shape mismatch");
  }
  for (const auto& b : batches) {
    auto& blk = blocks_[b.instance];
    for (std::size_t i = 0; i < blk.entries.size(); ++i)
      for (std::size_t t = 0; t < b.L; ++t) blk.entries[i].add(b.values[i * b.L + t]);
    ++blk.visits;
  }
  ++epoch_;
}

namespace {

constexpr char kCacheMagic[8] = {'W', 'O', 'S', 'C', 'A', 'C', 'H', 'E'};
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("cache file truncated");
  return v;
}

}  // namespace

void EstimateCache::save(const std::string& path, const std::string& provenance) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(kCacheMagic, sizeof(kCacheMagic));
  put(out, kCacheVersion);
  put(out, static_cast<std::uint64_t>(provenance.size()));
  out.write(provenance.data(), static_cast<std::streamsize>(provenance.size()));
  put(out, epoch_);
  put(out, static_cast<std::uint64_t>(blocks_.size()));
  for (const auto& blk : blocks_) {
    put(out, static_cast<std::uint64_t>(blk.entries.size()));
    put(out, blk.visits);
  }
  for (const auto& blk : blocks_)
    for (const auto& e : blk.entries) {
      put(out, e.mean);
      put(out, e.m2);
      put(out, e.sum);
      put(out, e.n_samples);
    }
  if (!out) throw Error("failed writing " + path);
}

EstimateCache EstimateCache::load(const std::string& path, std::string* provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[sizeof(kCacheMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCacheMagic))
    throw Error(path + ": not a cache file");
  if (get<std::uint32_t>(in) != kCacheVersion) throw Error(path + ": unsupported cache version");
  const auto prov_len = get<std::uint64_t>(in);
  if (prov_len > (1u << 20)) throw Error(path + ": corrupt header");
  std::string prov(prov_len, '\0');
  in.read(prov.data(), static_cast<std::streamsize>(prov_len));
  if (provenance) *provenance = prov;

  EstimateCache cache;
  cache.epoch_ = get<std::uint64_t>(in);
  const auto n_instances = get<std::uint64_t>(in);
  cache.blocks_.resize(n_instances);
  for (auto& blk : cache.blocks_) {
    blk.entries.resize(get<std::uint64_t>(in));
    blk.visits = get<std::uint64_t>(in);
  }
  for (auto& blk : cache.blocks_)
    for (auto& e : blk.entries) {
      e.mean = get<double>(in);
      e.m2 = get<double>(in);
      e.sum = get<double>(in);
      e.n_samples = get<std::uint64_t>(in);
    }
  return cache;
}

void EstimateCache::write_csv(std::ostream& out,
                              const std::vector<std::vector<std::vector<double>>>& coords) const {
  if (coords.size() != blocks_.size()) throw Error("cache shape mismatch");
  std::size_t dim = 0;
  for (const auto& c : coords)
    if (!c.empty()) dim = c.front().size();
  out << "instance_id";
  static const char* names[] = {"x", "y", "z"};
  for (std::size_t d = 0; d < dim; ++d) out << ',' << (d < 3 ? names[d] : "w");
  out << ",mean,variance,n_samples\n";
  char buf[64];
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (coords[j].size() != blocks_[j].entries.size()) throw Error("cache shape mismatch");
    for (std::size_t i = 0; i < coords[j].size(); ++i) {
      out << j;
      for (double c : coords[j][i]) {
        std::snprintf(buf, sizeof(buf), "%.17g", c);
        out << ',' << buf;
      }
      const auto& e = blocks_[j].entries[i];
      std::snprintf(buf, sizeof(buf), "%.17g", e.mean);
      out << ',' << buf;
      std::snprintf(buf, sizeof(buf), "%.17g", e.variance());
      out << ',' << buf << ',' << e.n_samples << '\n';
    }
  }
}

}  // namespace wosno
