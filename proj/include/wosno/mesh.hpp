#pragma once

#include "wosno/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace wosno {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// ASCII OBJ, `v` and `f` records only. Faces with more than three vertices
// are fan-triangulated; `f a/b/c` forms keep only the position index.
TriangleMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

// Closed, outward-oriented test meshes.
TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi);
TriangleMesh make_icosphere(double radius, int subdivisions);

// Which part of a triangle the closest point lies on. Edge k joins vertex k
// and vertex (k + 1) % 3.
enum class TriangleFeature : std::uint8_t { face, edge0, edge1, edge2, vertex0, vertex1, vertex2 };

struct TriangleHit {
  Vec3 point = Vec3::Zero();
  double dist2 = 0.0;
  int triangle = -1;
  TriangleFeature feature = TriangleFeature::face;
};

TriangleHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Reference closest-point query: loops over every triangle.
TriangleHit brute_force_closest(const TriangleMesh& mesh, const Vec3& p);

// Median-split bounding volume hierarchy over triangle boxes.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(const TriangleMesh& mesh);

  TriangleHit closest(const TriangleMesh& mesh, const Vec3& p) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    BoundingBox<3> box;
    std::uint32_t start = 0;  // leaf: first primitive; inner: right child
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  std::uint32_t build(const TriangleMesh& mesh, std::vector<Vec3>& centroids, std::uint32_t lo,
                      std::uint32_t hi);

  std::vector<Node> nodes_;
  std::vector<int> prims_;
};

// Triangle-mesh domain. The interior sign comes from the angle-weighted
// pseudo-normal of the closest feature, so it is only reliable for
// watertight, consistently oriented meshes.
class MeshDomain final : public Domain<3> {
 public:
  explicit MeshDomain(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }
  const Bvh& bvh() const { return bvh_; }

  // Negative inside.
  double signed_distance(const Vec3& p) const;

  bool contains(const Vec3& p) const override { return signed_distance(p) < 0.0; }
  ClosestPoint<3> closest_boundary_point(const Vec3& p) const override;
  BoundingBox<3> sampling_box() const override { return box_; }

  // Area-weighted surface points pushed along the face normal by a uniform
  // offset in (-0.01, 0.01), so every sample has |sdf| <= 0.01.
  std::vector<Vec3> sample_boundary(std::size_t n, Rng& rng) const override;

  static constexpr double kBoundaryBand = 0.01;

 private:
  Vec3 pseudo_normal(const TriangleHit& hit) const;

  TriangleMesh mesh_;
  Bvh bvh_;
  BoundingBox<3> box_;
  std::vector<Vec3> face_normals_;
  std::vector<Vec3> vertex_normals_;
  std::vector<std::array<Vec3, 3>> edge_normals_;
  std::vector<double> area_cdf_;
};

}  // namespace wosno
