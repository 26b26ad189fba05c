#pragma once

#include "wosno/kdtree.hpp"
#include "wosno/rng.hpp"
#include "wosno/types.hpp"

#include <cstddef>
#include <vector>

namespace wosno {

template <int D>
struct BoundingBox {
  Vec<D> lo = Vec<D>::Zero();
  Vec<D> hi = Vec<D>::Zero();

  Vec<D> extent() const { return hi - lo; }
  double volume() const { return extent().prod(); }

  BoundingBox inflated(double fraction) const {
    const Vec<D> pad = 0.5 * fraction * extent();
    return {lo - pad, hi + pad};
  }

  static BoundingBox hull(const std::vector<Vec<D>>& pts) {
    BoundingBox box{pts.front(), pts.front()};
    for (const auto& p : pts) {
      box.lo = box.lo.cwiseMin(p);
      box.hi = box.hi.cwiseMax(p);
    }
    return box;
  }
};

template <int D>
struct ClosestPoint {
  Vec<D> point;
  double distance = 0.0;
};

// A domain with an oriented boundary and a distance query. Implementations are
// immutable after construction and safe to query from many threads.
template <int D>
class Domain {
 public:
  virtual ~Domain() = default;

  // Strict interior test.
  virtual bool contains(const Vec<D>& p) const = 0;

  // Unsigned distance to the boundary together with the boundary point that
  // realizes it. Does not check that p is interior; walkers call this on every
  // step and rely on it staying cheap.
  virtual ClosestPoint<D> closest_boundary_point(const Vec<D>& p) const = 0;

  // Box used for rejection sampling of interior points.
  virtual BoundingBox<D> sampling_box() const = 0;

  virtual std::vector<Vec<D>> sample_boundary(std::size_t n, Rng& rng) const = 0;

  // Half of the largest bounding-box extent; walk tolerances are relative to it.
  double scale() const { return 0.5 * sampling_box().extent().maxCoeff(); }

  double distance_to_boundary(const Vec<D>& p) const {
    if (!contains(p)) throw Error("exterior query");
    return closest_boundary_point(p).distance;
  }
};

using Domain2 = Domain<2>;
using Domain3 = Domain<3>;

// Star-shaped disc around the origin with boundary radius
// r(theta) = r0 * (1 + c1 cos(4 theta) + c2 cos(8 theta)).
class PolarDomain final : public Domain<2> {
 public:
  static constexpr std::size_t kDefaultSamples = 4096;

  PolarDomain(double r0 = 1.0, double c1 = 0.0, double c2 = 0.0,
              std::size_t angular_samples = kDefaultSamples);

  double r0() const { return r0_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }

  double radius(double theta) const;
  Vec2 boundary_point(double theta) const;

  bool contains(const Vec2& p) const override;
  ClosestPoint<2> closest_boundary_point(const Vec2& p) const override;
  BoundingBox<2> sampling_box() const override { return box_; }

  // Points exactly on the curve at theta_k = 2 pi k / n. The rng is unused.
  std::vector<Vec2> sample_boundary(std::size_t n, Rng& rng) const override;

 private:
  double r0_, c1_, c2_;
  double spacing_;
  KdTree2 samples_;
  BoundingBox<2> box_;
};

double polar_radius(double theta, const PolarDomain& dom);

// Euclidean ball, used for analytic test problems in two and three dimensions.
template <int D>
class BallDomain final : public Domain<D> {
 public:
  explicit BallDomain(double radius = 1.0, Vec<D> center = Vec<D>::Zero());

  double radius() const { return radius_; }
  const Vec<D>& center() const { return center_; }

  bool contains(const Vec<D>& p) const override;
  ClosestPoint<D> closest_boundary_point(const Vec<D>& p) const override;
  BoundingBox<D> sampling_box() const override;
  std::vector<Vec<D>> sample_boundary(std::size_t n, Rng& rng) const override;

 private:
  double radius_;
  Vec<D> center_;
};

struct SamplingStats {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  double acceptance() const {
    return candidates == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(candidates);
  }
};

// Uniform rejection sampling of strictly interior points from `box`.
// Throws "degenerate domain" once 1e7 candidates have an acceptance rate
// below 1e-4.
template <int D>
std::vector<Vec<D>> sample_in_box(const Domain<D>& dom, const BoundingBox<D>& box, std::size_t n,
                                  Rng& rng, SamplingStats* stats = nullptr);

template <int D>
std::vector<Vec<D>> sample_interior(const Domain<D>& dom, std::size_t n, Rng& rng,
                                    SamplingStats* stats = nullptr) {
  return sample_in_box(dom, dom.sampling_box(), n, rng, stats);
}

}  // namespace wosno
