#include "wosno/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace wosno {

namespace {

std::vector<Vec2> ring_pixels(const Mask& mask) {
  std::vector<Vec2> ring;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) continue;
      bool touches = false;
      for (int dy = -1; dy <= 1 && !touches; ++dy)
        for (int dx = -1; dx <= 1 && !touches; ++dx) {
          const int nx = x + dx, ny = y + dy;
          touches = nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height && mask.at(nx, ny);
        }
      if (touches) ring.emplace_back(x, y);
    }
  return ring;
}

}  // namespace

MaskDomain::MaskDomain(const Mask& mask) : mask_(mask) {
  if (mask.width <= 0 || mask.height <= 0 ||
      mask.masked.size() != static_cast<std::size_t>(mask.width) * mask.height)
    throw Error("mask: size does not match its data");
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      if (x == 0 || y == 0 || x == mask.width - 1 || y == mask.height - 1)
        throw Error("mask touches image border");
      masked_.emplace_back(x, y);
    }
  auto ring = ring_pixels(mask);
  if (!masked_.empty() && ring.empty()) throw Error("isolated mask");
  ring_ = KdTree2(std::move(ring));
}

bool MaskDomain::contains(const Vec2& p) const {
  if (ring_.empty()) return false;
  if (p.x() <= -0.5 || p.y() <= -0.5 || p.x() >= mask_.width - 0.5 || p.y() >= mask_.height - 0.5)
    return false;
  const int px = static_cast<int>(std::lround(p.x()));
  const int py = static_cast<int>(std::lround(p.y()));
  // Known pixels that are not ring pixels are only ever nearest outside the
  // masked region, so a point in a known pixel's square is decided here.
  if (!mask_.at(px, py)) {
    bool near_mask = false;
    for (int dy = -1; dy <= 1 && !near_mask; ++dy)
      for (int dx = -1; dx <= 1 && !near_mask; ++dx) {
        const int nx = px + dx, ny = py + dy;
        near_mask = nx >= 0 && ny >= 0 && nx < mask_.width && ny < mask_.height && mask_.at(nx, ny);
      }
    if (!near_mask) return false;
  }
  return ring_.nearest(p).dist2 > 0.25;
}

ClosestPoint<2> MaskDomain::closest_boundary_point(const Vec2& p) const {
  const auto hit = ring_.nearest(p);
  const Vec2& c = ring_.points()[hit.index];
  const double d = std::sqrt(hit.dist2);
  Vec2 dir(1.0, 0.0);
  if (d > 0.0) dir = (p - c) / d;
  return {c + 0.5 * dir, std::abs(d - 0.5)};
}

BoundingBox<2> MaskDomain::sampling_box() const {
  return {Vec2(-0.5, -0.5), Vec2(mask_.width - 0.5, mask_.height - 0.5)};
}

std::vector<Vec2> MaskDomain::sample_boundary(std::size_t n, Rng& rng) const {
  std::vector<Vec2> out;
  if (ring_.empty()) return out;
  out.reserve(n);
  const auto& ring = ring_.points();
  for (std::size_t k = 0; k < n; ++k) out.push_back(ring[k % ring.size()] + 0.5 * uniform_direction<2>(rng));
  return out;
}

namespace {

// WoS over every masked pixel centre; `ring_value[k]` is the boundary value
// next to ring pixel k.
std::vector<PointEstimate> solve_masked(const MaskDomain& dom, const std::vector<double>& ring_value,
                                        std::function<double(const Vec2&)> source,
                                        const InpaintConfig& cfg, std::uint64_t stage) {
  PoissonProblem<2> problem{&dom, std::move(source),
                            [&dom, &ring_value](const Vec2& x) { return ring_value[dom.nearest_ring(x)]; }};
  EstimateOptions opts{stage, 0, cfg.workers};
  return estimate(problem, dom.masked_centers(), cfg.walks_per_pixel, cfg.walk, opts);
}

void check_inputs(const GrayImage& img, const Mask& mask, const InpaintConfig& cfg) {
  if (img.width != mask.width || img.height != mask.height)
    throw Error("inpaint: image and mask sizes differ");
  if (cfg.walks_per_pixel < 1) throw Error("inpaint: walks_per_pixel must be >= 1");
}

std::vector<double> ring_intensities(const MaskDomain& dom, const GrayImage& img) {
  std::vector<double> out;
  for (const auto& c : dom.ring_centers())
    out.push_back(img.at(static_cast<int>(c.x()), static_cast<int>(c.y())));
  return out;
}

InpaintResult fill(const GrayImage& img, const MaskDomain& dom, const std::vector<PointEstimate>& est,
                   bool clamp) {
  InpaintResult r{img, std::vector<double>(img.pixels.size(), 0.0)};
  const auto& centers = dom.masked_centers();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const int x = static_cast<int>(centers[k].x()), y = static_cast<int>(centers[k].y());
    const double v = est[k].mean;
    r.image.at(x, y) = clamp ? std::clamp(v, 0.0, 1.0) : v;
    r.standard_error[static_cast<std::size_t>(y) * img.width + x] =
        est[k].n_samples >= 2 ? est[k].standard_error() : 0.0;
  }
  return r;
}

}  // namespace

InpaintResult inpaint_harmonic(const GrayImage& img, const Mask& mask, const InpaintConfig& cfg) {
  check_inputs(img, mask, cfg);
  const MaskDomain dom(mask);
  if (dom.masked_count() == 0) return {img, std::vector<double>(img.pixels.size(), 0.0)};
  const auto est = solve_masked(dom, ring_intensities(dom, img), {}, cfg, 0);
  return fill(img, dom, est, false);
}

InpaintResult inpaint_biharmonic(const GrayImage& img, const Mask& mask, const InpaintConfig& cfg) {
  check_inputs(img, mask, cfg);
  const MaskDomain dom(mask);
  if (dom.masked_count() == 0) return {img, std::vector<double>(img.pixels.size(), 0.0)};

  auto known = [&](int x, int y) { return img.inside(x, y) && !mask.at(x, y); };
  auto laplacian_known = [&](int x, int y, double* out) {
    if (!known(x, y) || !known(x - 1, y) || !known(x + 1, y) || !known(x, y - 1) || !known(x, y + 1))
      return false;
    *out = img.at(x - 1, y) + img.at(x + 1, y) + img.at(x, y - 1) + img.at(x, y + 1) -
           4.0 * img.at(x, y);
    return true;
  };

  // v on the ring: ring pixels border the mask, so their own stencil is
  // incomplete; average the 5-point Laplacian over the known stencils in
  // their 3x3 neighbourhood.
  std::vector<double> v_ring;
  for (const auto& c : dom.ring_centers()) {
    const int cx = static_cast<int>(c.x()), cy = static_cast<int>(c.y());
    double sum = 0.0, lap = 0.0;
    int count = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (laplacian_known(cx + dx, cy + dy, &lap)) {
          sum += lap;
          ++count;
        }
    if (count == 0)
      throw Error("stencil out of bounds at pixel (" + std::to_string(cx) + ", " +
                  std::to_string(cy) + ")");
    v_ring.push_back(sum / count);
  }

  const auto v_est = solve_masked(dom, v_ring, {}, cfg, 0);

  // v on the grid of masked and ring pixels, for bilinear lookup.
  std::vector<double> v_grid(img.pixels.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < v_ring.size(); ++k) {
    const auto& c = dom.ring_centers()[k];
    v_grid[static_cast<std::size_t>(c.y()) * img.width + static_cast<std::size_t>(c.x())] = v_ring[k];
  }
  for (std::size_t k = 0; k < v_est.size(); ++k) {
    const auto& c = dom.masked_centers()[k];
    v_grid[static_cast<std::size_t>(c.y()) * img.width + static_cast<std::size_t>(c.x())] =
        v_est[k].mean;
  }
  auto v_at = [&](const Vec2& p) {
    const int x0 = std::clamp(static_cast<int>(std::floor(p.x())), 0, img.width - 2);
    const int y0 = std::clamp(static_cast<int>(std::floor(p.y())), 0, img.height - 2);
    const double tx = p.x() - x0, ty = p.y() - y0;
    double sum = 0.0, weight = 0.0;
    for (int dy = 0; dy <= 1; ++dy)
      for (int dx = 0; dx <= 1; ++dx) {
        const double val = v_grid[static_cast<std::size_t>(y0 + dy) * img.width + (x0 + dx)];
        if (std::isnan(val)) continue;
        const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty);
        sum += w * val;
        weight += w;
      }
    return weight > 0.0 ? sum / weight : 0.0;
  };

  const auto u_est = solve_masked(dom, ring_intensities(dom, img), v_at, cfg, 1);
  return fill(img, dom, u_est, true);
}

}  // namespace wosno
