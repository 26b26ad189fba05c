#include "wosno/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace wosno {

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file: " + path);
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z()))
        throw Error(path + ":" + std::to_string(line_no) + ": malformed vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        const int raw = std::stoi(tok.substr(0, tok.find('/')));
        const int n = static_cast<int>(mesh.vertices.size());
        const int i = raw < 0 ? n + raw : raw - 1;
        if (i < 0 || i >= n)
          throw Error(path + ":" + std::to_string(line_no) + ": invalid vertex index");
        idx.push_back(i);
      }
      if (idx.size() < 3) throw Error(path + ":" + std::to_string(line_no) + ": face needs 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file: " + path);
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int k = 0; k < 8; ++k)
    m.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                            (k & 4) ? hi.z() : lo.z());
  // Outward counter-clockwise quads, split in two.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int id = static_cast<int>(m.vertices.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

TriangleHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  TriangleHit hit;
  auto finish = [&](const Vec3& q, TriangleFeature f) {
    hit.point = q;
    hit.dist2 = (p - q).squaredNorm();
    hit.feature = f;
    return hit;
  };

  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish(a, TriangleFeature::vertex0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(b, TriangleFeature::vertex1);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
    return finish(a + (d1 / (d1 - d3)) * ab, TriangleFeature::edge0);

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(c, TriangleFeature::vertex2);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
    return finish(a + (d2 / (d2 - d6)) * ac, TriangleFeature::edge2);

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return finish(b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b), TriangleFeature::edge1);

  const double denom = 1.0 / (va + vb + vc);
  return finish(a + ab * (vb * denom) + ac * (vc * denom), TriangleFeature::face);
}

TriangleHit brute_force_closest(const TriangleMesh& mesh, const Vec3& p) {
  TriangleHit best;
  best.dist2 = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    TriangleHit h = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                              mesh.vertices[tri[2]]);
    if (h.dist2 < best.dist2) {
      h.triangle = static_cast<int>(t);
      best = h;
    }
  }
  return best;
}

namespace {

constexpr std::uint32_t kLeafSize = 4;

double box_dist2(const BoundingBox<3>& box, const Vec3& p) {
  const Vec3 d = (box.lo - p).cwiseMax(p - box.hi).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh) {
  const auto n = static_cast<std::uint32_t>(mesh.triangles.size());
  if (n == 0) throw Error("bvh: empty mesh");
  prims_.resize(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    prims_[t] = static_cast<int>(t);
    const auto& tri = mesh.triangles[t];
    centroids[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
  }
  nodes_.reserve(2 * n / kLeafSize + 1);
  build(mesh, centroids, 0, n);
}

std::uint32_t Bvh::build(const TriangleMesh& mesh, std::vector<Vec3>& centroids, std::uint32_t lo,
                         std::uint32_t hi) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();

  BoundingBox<3> box{Vec3::Constant(std::numeric_limits<double>::infinity()),
                     Vec3::Constant(-std::numeric_limits<double>::infinity())};
  BoundingBox<3> cbox = box;
  for (std::uint32_t i = lo; i < hi; ++i) {
    for (int v : mesh.triangles[prims_[i]]) {
      box.lo = box.lo.cwiseMin(mesh.vertices[v]);
      box.hi = box.hi.cwiseMax(mesh.vertices[v]);
    }
    cbox.lo = cbox.lo.cwiseMin(centroids[prims_[i]]);
    cbox.hi = cbox.hi.cwiseMax(centroids[prims_[i]]);
  }
  nodes_[index].box = box;

  if (hi - lo <= kLeafSize) {
    nodes_[index].start = lo;
    nodes_[index].count = hi - lo;
    return index;
  }

  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const std::uint32_t mid = lo + (hi - lo) / 2;
  std::nth_element(prims_.begin() + lo, prims_.begin() + mid, prims_.begin() + hi,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  build(mesh, centroids, lo, mid);
  const std::uint32_t right = build(mesh, centroids, mid, hi);
  nodes_[index].start = right;
  nodes_[index].count = 0;
  return index;
}

TriangleHit Bvh::closest(const TriangleMesh& mesh, const Vec3& p) const {
  TriangleHit best;
  best.dist2 = std::numeric_limits<double>::infinity();
  // Boxes are pruned with a small relative slack so that rounding in the box
  // distance can never discard the triangle that a full scan would pick.
  auto prune = [&](double d2) { return d2 > best.dist2 * (1.0 + 1e-9) + 1e-300; };

  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (prune(box_dist2(node.box, p))) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.start; i < node.start + node.count; ++i) {
        const int t = prims_[i];
        const auto& tri = mesh.triangles[t];
        TriangleHit h = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                                  mesh.vertices[tri[2]]);
        if (h.dist2 < best.dist2 || (h.dist2 == best.dist2 && t < best.triangle)) {
          h.triangle = t;
          best = h;
        }
      }
      continue;
    }
    const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
    const std::uint32_t left = self + 1;
    const std::uint32_t right = node.start;
    const double dl = box_dist2(nodes_[left].box, p);
    const double dr = box_dist2(nodes_[right].box, p);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack[top++] = right;
      stack[top++] = left;
    } else {
      stack[top++] = left;
      stack[top++] = right;
    }
  }
  return best;
}

MeshDomain::MeshDomain(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  const int nv = static_cast<int>(mesh_.vertices.size());
  if (mesh_.triangles.empty()) throw Error("mesh domain: no triangles");
  for (const auto& tri : mesh_.triangles)
    for (int v : tri)
      if (v < 0 || v >= nv) throw Error("mesh domain: triangle index out of range");

  bvh_ = Bvh(mesh_);
  box_ = BoundingBox<3>::hull(mesh_.vertices).inflated(0.01);

  const std::size_t nt = mesh_.triangles.size();
  face_normals_.resize(nt);
  vertex_normals_.assign(mesh_.vertices.size(), Vec3::Zero());
  edge_normals_.resize(nt);
  area_cdf_.resize(nt);

  std::map<std::pair<int, int>, Vec3> edge_sum;
  double area_total = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3& b = mesh_.vertices[tri[1]];
    const Vec3& c = mesh_.vertices[tri[2]];
    const Vec3 cross = (b - a).cross(c - a);
    const double twice_area = cross.norm();
    face_normals_[t] = twice_area > 0.0 ? Vec3(cross / twice_area) : Vec3::Zero();
    area_total += 0.5 * twice_area;
    area_cdf_[t] = area_total;

    const Vec3* corners[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = (*corners[(k + 1) % 3] - *corners[k]).normalized();
      const Vec3 e2 = (*corners[(k + 2) % 3] - *corners[k]).normalized();
      const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
      vertex_normals_[tri[k]] += angle * face_normals_[t];
      edge_sum[std::minmax(tri[k], tri[(k + 1) % 3])] += face_normals_[t];
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    for (int k = 0; k < 3; ++k) edge_normals_[t][k] = edge_sum[std::minmax(tri[k], tri[(k + 1) % 3])];
  }
  for (auto& c : area_cdf_) c /= area_total;
}

Vec3 MeshDomain::pseudo_normal(const TriangleHit& hit) const {
  const auto& tri = mesh_.triangles[hit.triangle];
  switch (hit.feature) {
    case TriangleFeature::face: return face_normals_[hit.triangle];
    case TriangleFeature::edge0: return edge_normals_[hit.triangle][0];
    case TriangleFeature::edge1: return edge_normals_[hit.triangle][1];
    case TriangleFeature::edge2: return edge_normals_[hit.triangle][2];
    case TriangleFeature::vertex0: return vertex_normals_[tri[0]];
    case TriangleFeature::vertex1: return vertex_normals_[tri[1]];
    case TriangleFeature::vertex2: return vertex_normals_[tri[2]];
  }
  return face_normals_[hit.triangle];
}

double MeshDomain::signed_distance(const Vec3& p) const {
  const TriangleHit hit = bvh_.closest(mesh_, p);
  const double d = std::sqrt(hit.dist2);
  if (d == 0.0) return 0.0;
  return (p - hit.point).dot(pseudo_normal(hit)) < 0.0 ? -d : d;
}

ClosestPoint<3> MeshDomain::closest_boundary_point(const Vec3& p) const {
  const TriangleHit hit = bvh_.closest(mesh_, p);
  return {hit.point, std::sqrt(hit.dist2)};
}

std::vector<Vec3> MeshDomain::sample_boundary(std::size_t n, Rng& rng) const {
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(area_cdf_.begin(), area_cdf_.end(), u);
    const std::size_t t = std::min<std::size_t>(it - area_cdf_.begin(), area_cdf_.size() - 1);
    const auto& tri = mesh_.triangles[t];
    const double s = std::sqrt(uniform01(rng));
    const double r = uniform01(rng);
    const Vec3 q = (1.0 - s) * mesh_.vertices[tri[0]] + s * (1.0 - r) * mesh_.vertices[tri[1]] +
                   s * r * mesh_.vertices[tri[2]];
    const double offset = uniform(rng, -kBoundaryBand, kBoundaryBand);
    out.push_back(q + offset * face_normals_[t]);
  }
  return out;
}

}  // namespace wosno
