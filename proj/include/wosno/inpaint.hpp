#pragma once

#include "wosno/estimator.hpp"
#include "wosno/image.hpp"
#include "wosno/kdtree.hpp"

namespace wosno {

// Domain of the masked pixels: points farther than half a pixel from every
// known pixel centre, inside the image rectangle. The distance to the
// boundary is the distance to the nearest known centre minus 0.5, which is
// exact for this domain. Only ring pixels (known pixels with a masked
// 8-neighbour) can be nearest, so only they are indexed.
class MaskDomain final : public Domain<2> {
 public:
  // Throws "mask touches image border" and "isolated mask".
  explicit MaskDomain(const Mask& mask);

  const Mask& mask() const { return mask_; }
  std::size_t masked_count() const { return masked_.size(); }
  // Masked pixel centres, in row-major order.
  const std::vector<Vec2>& masked_centers() const { return masked_; }
  const std::vector<Vec2>& ring_centers() const { return ring_.points(); }
  // Ring pixel whose centre is nearest to p.
  std::size_t nearest_ring(const Vec2& p) const { return ring_.nearest(p).index; }

  bool contains(const Vec2& p) const override;
  ClosestPoint<2> closest_boundary_point(const Vec2& p) const override;
  BoundingBox<2> sampling_box() const override;
  // Points on the half-pixel circles around ring pixels, cycling through them.
  std::vector<Vec2> sample_boundary(std::size_t n, Rng& rng) const override;

 private:
  Mask mask_;
  std::vector<Vec2> masked_;
  KdTree2 ring_;
};

struct InpaintConfig {
  std::size_t walks_per_pixel = 256;
  WalkConfig walk;
  int workers = 1;
};

struct InpaintResult {
  GrayImage image;
  // Per-pixel standard error of the final estimate; zero on known pixels.
  std::vector<double> standard_error;
};

// Harmonic extension of the ring intensities into the mask.
InpaintResult inpaint_harmonic(const GrayImage& img, const Mask& mask, const InpaintConfig& cfg);

// Biharmonic fill through  Delta v = 0, v = Delta I on the ring;  Delta u = v,
// u = I on the ring. Output clamped to [0, 1].
InpaintResult inpaint_biharmonic(const GrayImage& img, const Mask& mask, const InpaintConfig& cfg);

}  // namespace wosno
