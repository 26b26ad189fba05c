#include "wosno/geometry.hpp"

#include <cmath>
#include <numbers>

namespace wosno {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGoldenRatio = 0.6180339887498949;  // (sqrt(5) - 1) / 2

}  // namespace

PolarDomain::PolarDomain(double r0, double c1, double c2, std::size_t angular_samples)
    : r0_(r0), c1_(c1), c2_(c2) {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw Error("polar domain: r0 must be positive");
  if (!std::isfinite(c1) || !std::isfinite(c2) || std::abs(c1) + std::abs(c2) >= 1.0)
    throw Error("polar domain: |c1| + |c2| must be < 1");
  if (angular_samples < 16) throw Error("polar domain: too few angular samples");

  spacing_ = kTwoPi / static_cast<double>(angular_samples);
  std::vector<Vec2> pts;
  pts.reserve(angular_samples);
  for (std::size_t k = 0; k < angular_samples; ++k)
    pts.push_back(boundary_point(spacing_ * static_cast<double>(k)));
  box_ = BoundingBox<2>::hull(pts).inflated(0.01);
  samples_ = KdTree2(std::move(pts));
}

double PolarDomain::radius(double theta) const {
  const double c4 = std::cos(4.0 * theta);
  // cos(8t) = 2 cos^2(4t) - 1
  return r0_ * (1.0 + c1_ * c4 + c2_ * (2.0 * c4 * c4 - 1.0));
}

Vec2 PolarDomain::boundary_point(double theta) const {
  const double r = radius(theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

double polar_radius(double theta, const PolarDomain& dom) { return dom.radius(theta); }

bool PolarDomain::contains(const Vec2& p) const {
  const double r = p.norm();
  if (r == 0.0) return true;
  return r < radius(std::atan2(p.y(), p.x()));
}

namespace {

// First and second derivative of |c(t) - p|^2 / 2 along the curve.
struct CurveSlope {
  double d1, d2;
};

}  // namespace

ClosestPoint<2> PolarDomain::closest_boundary_point(const Vec2& p) const {
  // Dense angular sampling locates the basin; the minimum of the squared
  // distance is then refined within one sample spacing on either side with a
  // bracketed Newton iteration on its derivative.
  const auto hit = samples_.nearest(p);
  const double theta0 = spacing_ * static_cast<double>(hit.index);

  auto slope = [&](double t) -> CurveSlope {
    const double ct = std::cos(t), st = std::sin(t);
    const double s4 = std::sin(4.0 * t), c4 = std::cos(4.0 * t);
    const double s8 = 2.0 * s4 * c4, c8 = 2.0 * c4 * c4 - 1.0;
    const double r = r0_ * (1.0 + c1_ * c4 + c2_ * c8);
    const double dr = -r0_ * (4.0 * c1_ * s4 + 8.0 * c2_ * s8);
    const double ddr = -r0_ * (16.0 * c1_ * c4 + 64.0 * c2_ * c8);
    const Vec2 radial(ct, st), tangential(-st, ct);
    const Vec2 diff = r * radial - p;
    const Vec2 dc = dr * radial + r * tangential;
    const Vec2 ddc = (ddr - r) * radial + 2.0 * dr * tangential;
    return {diff.dot(dc), dc.squaredNorm() + diff.dot(ddc)};
  };
  auto dist2 = [&](double t) { return (boundary_point(t) - p).squaredNorm(); };

  double a = theta0 - spacing_;
  double b = theta0 + spacing_;
  double t = theta0;
  if (slope(a).d1 < 0.0 && slope(b).d1 > 0.0) {
    for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
      const CurveSlope s = slope(t);
      if (s.d1 == 0.0) break;
      if (s.d1 < 0.0) a = t;
      else b = t;
      double next = s.d2 > 0.0 ? t - s.d1 / s.d2 : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      const double step = std::abs(next - t);
      t = next;
      if (step < 1e-13) break;
    }
  } else {
    // No sign change across the bracket: fall back to golden-section search.
    double x1 = b - kGoldenRatio * (b - a);
    double x2 = a + kGoldenRatio * (b - a);
    double f1 = dist2(x1);
    double f2 = dist2(x2);
    while (b - a > 1e-9) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGoldenRatio * (b - a);
        f1 = dist2(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGoldenRatio * (b - a);
        f2 = dist2(x2);
      }
    }
    t = f1 < f2 ? x1 : x2;
  }
  const double ft = dist2(t);
  if (hit.dist2 <= ft) return {samples_.points()[hit.index], std::sqrt(hit.dist2)};
  return {boundary_point(t), std::sqrt(ft)};
}

std::vector<Vec2> PolarDomain::sample_boundary(std::size_t n, Rng& /*rng*/) const {
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(boundary_point(kTwoPi * static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

template <int D>
BallDomain<D>::BallDomain(double radius, Vec<D> center) : radius_(radius), center_(center) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw Error("ball domain: radius must be positive");
}

template <int D>
bool BallDomain<D>::contains(const Vec<D>& p) const {
  return (p - center_).norm() < radius_;
}

template <int D>
ClosestPoint<D> BallDomain<D>::closest_boundary_point(const Vec<D>& p) const {
  const Vec<D> offset = p - center_;
  const double r = offset.norm();
  Vec<D> dir = Vec<D>::Zero();
  if (r > 0.0) {
    dir = offset / r;
  } else {
    dir[0] = 1.0;
  }
  return {center_ + radius_ * dir, std::abs(radius_ - r)};
}

template <int D>
BoundingBox<D> BallDomain<D>::sampling_box() const {
  const Vec<D> half = Vec<D>::Constant(radius_);
  return {center_ - half, center_ + half};
}

template <int D>
std::vector<Vec<D>> BallDomain<D>::sample_boundary(std::size_t n, Rng& rng) const {
  std::vector<Vec<D>> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(center_ + radius_ * uniform_direction<D>(rng));
  return out;
}

template class BallDomain<2>;
template class BallDomain<3>;

template <int D>
std::vector<Vec<D>> sample_in_box(const Domain<D>& dom, const BoundingBox<D>& box, std::size_t n,
                                  Rng& rng, SamplingStats* stats) {
  constexpr std::size_t kMinCandidates = 10'000'000;
  constexpr double kMinAcceptance = 1e-4;

  std::vector<Vec<D>> out;
  out.reserve(n);
  SamplingStats local;
  while (out.size() < n) {
    Vec<D> p;
    for (int i = 0; i < D; ++i) p[i] = uniform(rng, box.lo[i], box.hi[i]);
    ++local.candidates;
    if (dom.contains(p)) {
      out.push_back(p);
      ++local.accepted;
    }
    if (local.candidates >= kMinCandidates && local.acceptance() < kMinAcceptance)
      throw Error("degenerate domain");
  }
  if (stats) *stats = local;
  return out;
}

template std::vector<Vec2> sample_in_box(const Domain<2>&, const BoundingBox<2>&, std::size_t,
                                         Rng&, SamplingStats*);
template std::vector<Vec3> sample_in_box(const Domain<3>&, const BoundingBox<3>&, std::size_t,
                                         Rng&, SamplingStats*);

}  // namespace wosno
