#include "spherepack/geometry.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace spherepack {

namespace {

constexpr std::size_t kLeafSize = 4;
constexpr double kEdgeTolerance = 1e-9;
constexpr int kRayRetries = 8;
constexpr double kMinFillRatio = 1e-4;
constexpr std::size_t kRejectionProbeTrials = 1'000'000;

std::string fnv1a_hex(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Vec3& v : vertices) {
    for (int k = 0; k < 3; ++k) {
      const auto bits = std::bit_cast<std::uint64_t>(v[k]);
      feed(&bits, sizeof bits);
    }
  }
  for (const Face& f : faces) feed(f.data(), sizeof(Face));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

double compute_volume(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  double six_v = 0.0;
  for (const Face& f : faces) {
    six_v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  }
  return std::abs(six_v) / 6.0;
}

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const auto nv = vertices_.size();
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    for (auto idx : faces_[i]) {
      if (idx >= nv) {
        throw ParseError("face " + std::to_string(i) + " references vertex " + std::to_string(idx) +
                         " but the mesh has " + std::to_string(nv) + " vertices");
      }
    }
  }
  for (const Vec3& v : vertices_) {
    if (!v.allFinite()) throw ParseError("non-finite vertex coordinate");
  }

  double six_v = 0.0;
  for (const Face& f : faces_) {
    six_v += vertices_[f[0]].dot(vertices_[f[1]].cross(vertices_[f[2]]));
  }
  if (six_v < 0.0) {
    reoriented_ = true;
    for (Face& f : faces_) std::swap(f[1], f[2]);
  }
  volume_ = compute_volume(vertices_, faces_);

  face_areas_.resize(faces_.size());
  face_normals_.resize(faces_.size());
  std::size_t valid = 0;
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const Vec3 n = (vertex(i, 1) - vertex(i, 0)).cross(vertex(i, 2) - vertex(i, 0));
    const double len = n.norm();
    face_areas_[i] = 0.5 * len;
    face_normals_[i] = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
    if (!is_degenerate(i)) {
      ++valid;
      surface_area_ += face_areas_[i];
    }
  }
  if (valid < 4) {
    throw DegenerateMesh("mesh has " + std::to_string(valid) +
                         " non-degenerate faces; at least 4 are required");
  }
  if (!(volume_ > 0.0)) throw DegenerateMesh("mesh encloses zero volume");

  for (const Vec3& v : vertices_) aabb_.expand(v);

  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const Face& f : faces_) {
    for (int k = 0; k < 3; ++k) {
      auto a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  watertight_ = std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 2; });

  mesh_id_ = fnv1a_hex(vertices_, faces_);
  build_bvh();
}

std::size_t TriangleMesh::degenerate_face_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < faces_.size(); ++i) n += is_degenerate(i) ? 1 : 0;
  return n;
}

TriangleMesh TriangleMesh::transformed(const Eigen::Isometry3d& transform, double scale) const {
  std::vector<Vec3> out;
  out.reserve(vertices_.size());
  for (const Vec3& v : vertices_) out.push_back(transform * (scale * v));
  return TriangleMesh(std::move(out), faces_);
}

void TriangleMesh::build_bvh() {
  const auto nf = static_cast<std::uint32_t>(faces_.size());
  bvh_faces_.resize(nf);
  std::iota(bvh_faces_.begin(), bvh_faces_.end(), 0u);
  std::vector<Vec3> centroids(nf);
  std::vector<Aabb> boxes(nf);
  for (std::uint32_t i = 0; i < nf; ++i) {
    for (int k = 0; k < 3; ++k) boxes[i].expand(vertex(i, k));
    centroids[i] = boxes[i].center();
  }
  bvh_nodes_.clear();
  bvh_nodes_.reserve(2 * nf / kLeafSize + 1);

  struct Task {
    std::uint32_t node, begin, end;
  };
  bvh_nodes_.emplace_back();
  std::vector<Task> stack{{0, 0, nf}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    Aabb box, cbox;
    for (auto i = t.begin; i < t.end; ++i) {
      box.expand(boxes[bvh_faces_[i]]);
      cbox.expand(centroids[bvh_faces_[i]]);
    }
    // Padded so near-edge grazes are still reported by the ray test.
    box.min.array() -= 2 * kEdgeTolerance;
    box.max.array() += 2 * kEdgeTolerance;
    bvh_nodes_[t.node].box = box;
    if (t.end - t.begin <= kLeafSize) {
      bvh_nodes_[t.node].first = t.begin;
      bvh_nodes_[t.node].count = t.end - t.begin;
      continue;
    }
    int axis = 0;
    cbox.extent().maxCoeff(&axis);
    const auto mid = t.begin + (t.end - t.begin) / 2;
    std::nth_element(bvh_faces_.begin() + t.begin, bvh_faces_.begin() + mid,
                     bvh_faces_.begin() + t.end, [&](std::uint32_t a, std::uint32_t b) {
                       return centroids[a][axis] < centroids[b][axis];
                     });
    const auto left = static_cast<std::uint32_t>(bvh_nodes_.size());
    bvh_nodes_.emplace_back();
    bvh_nodes_.emplace_back();
    bvh_nodes_[t.node].first = left;
    bvh_nodes_[t.node].right = left + 1;
    bvh_nodes_[t.node].count = 0;
    stack.push_back({left, t.begin, mid});
    stack.push_back({left + 1, mid, t.end});
  }
}

namespace {

enum class RayOutcome { Counted, OnSurface, Ambiguous };

bool ray_hits_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double t0 = (box.min[k] - origin[k]) * inv_dir[k];
    double t1 = (box.max[k] - origin[k]) * inv_dir[k];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmax < tmin) return false;
  }
  return true;
}

// Casts one ray and returns the crossing count through `crossings`.
RayOutcome cast_ray(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir, int& crossings) {
  crossings = 0;
  const Vec3 inv_dir = dir.cwiseInverse();
  const auto& nodes = mesh.bvh_nodes();
  const auto& order = mesh.bvh_faces();
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const auto& node = nodes[stack[--top]];
    if (!ray_hits_box(node.box, origin, inv_dir)) continue;
    if (node.count == 0) {
      stack[top++] = node.first;
      stack[top++] = node.right;
      continue;
    }
    for (auto i = node.first; i < node.first + node.count; ++i) {
      const auto f = order[i];
      if (mesh.is_degenerate(f)) continue;
      const Vec3 v0 = mesh.vertex(f, 0);
      const Vec3 e1 = mesh.vertex(f, 1) - v0;
      const Vec3 e2 = mesh.vertex(f, 2) - v0;
      const Vec3 to_origin = origin - v0;
      const double plane_dist = to_origin.dot(mesh.face_normals()[f]);
      const Vec3 pvec = dir.cross(e2);
      const double det = e1.dot(pvec);
      const double twice_area = 2.0 * mesh.face_areas()[f];
      if (std::abs(det) < 1e-12 * twice_area) {
        // Ray (nearly) parallel to the face plane: only ambiguous if it runs
        // inside that plane.
        if (std::abs(plane_dist) < kEdgeTolerance) return RayOutcome::Ambiguous;
        continue;
      }
      const double inv_det = 1.0 / det;
      const double u = to_origin.dot(pvec) * inv_det;
      const Vec3 qvec = to_origin.cross(e1);
      const double v = dir.dot(qvec) * inv_det;
      const double t = e2.dot(qvec) * inv_det;
      const double w = 1.0 - u - v;
      const double lambda[3] = {w, u, v};

      // Hit-point distance to the edge opposite corner k is lambda_k times the
      // triangle altitude from corner k.
      double edge_dist[3];
      const Vec3 corners[3] = {v0, mesh.vertex(f, 1), mesh.vertex(f, 2)};
      bool outside = false;
      bool near_edge = false;
      for (int k = 0; k < 3; ++k) {
        const double edge_len = (corners[(k + 2) % 3] - corners[(k + 1) % 3]).norm();
        edge_dist[k] = lambda[k] * twice_area / edge_len;
        if (edge_dist[k] < -kEdgeTolerance) outside = true;
        else if (edge_dist[k] <= kEdgeTolerance) near_edge = true;
      }
      if (outside) continue;
      if (std::abs(plane_dist) <= kEdgeTolerance) return RayOutcome::OnSurface;
      if (t <= 0.0) continue;
      if (near_edge) return RayOutcome::Ambiguous;
      ++crossings;
    }
  }
  return RayOutcome::Counted;
}

}  // namespace

bool contains_point(const TriangleMesh& mesh, const Vec3& point) {
  if (!mesh.aabb().contains(point)) return false;
  std::uint64_t h = 0;
  for (int k = 0; k < 3; ++k) h = mix64(h ^ std::bit_cast<std::uint64_t>(point[k]));
  Rng rng(h);
  // Fixed first direction with irrational-looking components avoids
  // axis-aligned grazing on box-like meshes.
  Vec3 dir(0.5773502691896258, 0.3184000583715286, 0.7518489361904214);
  for (int attempt = 0; attempt <= kRayRetries; ++attempt) {
    int crossings = 0;
    switch (cast_ray(mesh, point, dir.normalized(), crossings)) {
      case RayOutcome::Counted:
        return (crossings % 2) == 1;
      case RayOutcome::OnSurface:
        return false;
      case RayOutcome::Ambiguous:
        break;
    }
    do {
      const double x = rng.normal();
      const double y = rng.normal();
      const double z = rng.normal();
      dir = Vec3(x, y, z);
    } while (dir.norm() < 1e-3);
  }
  throw NumericalAmbiguity("ray parity test stayed ambiguous after " +
                           std::to_string(kRayRetries) + " re-casts");
}

bool contains_point_or_outside(const TriangleMesh& mesh, const Vec3& point) noexcept {
  try {
    return contains_point(mesh, point);
  } catch (const NumericalAmbiguity&) {
    return false;
  }
}

SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_surface requires n >= 1");
  const auto nf = mesh.faces().size();
  std::vector<double> cumulative(nf);
  double total = 0.0;
  for (std::size_t i = 0; i < nf; ++i) {
    total += mesh.is_degenerate(i) ? 0.0 : mesh.face_areas()[i];
    cumulative[i] = total;
  }
  Rng rng(derive_seed(seed, "surface"));
  SurfaceSamples out;
  out.points.reserve(n);
  out.normals.reserve(n);
  out.faces.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    auto f = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(), nf - 1));
    while (mesh.is_degenerate(f)) --f;  // only reachable through rounding at the top end
    const double sqrt_r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double a = 1.0 - sqrt_r1;
    const double b = sqrt_r1 * (1.0 - r2);
    const double c = sqrt_r1 * r2;
    out.points.push_back(a * mesh.vertex(f, 0) + b * mesh.vertex(f, 1) + c * mesh.vertex(f, 2));
    out.normals.push_back(mesh.face_normals()[f]);
    out.faces.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<Vec3> sample_interior(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_interior requires n >= 1");
  const Aabb& box = mesh.aabb();
  const double fill = box.volume() > 0.0 ? mesh.volume() / box.volume() : 0.0;
  if (fill < kMinFillRatio) {
    throw RejectionBudgetExceeded("mesh fills only " + std::to_string(fill) +
                                  " of its bounding box; rejection sampling is not viable");
  }
  Rng rng(derive_seed(seed, "interior"));
  std::vector<Vec3> out;
  out.reserve(n);
  std::size_t trials = 0;
  while (out.size() < n) {
    const double x = rng.uniform(box.min.x(), box.max.x());
    const double y = rng.uniform(box.min.y(), box.max.y());
    const double z = rng.uniform(box.min.z(), box.max.z());
    const Vec3 p(x, y, z);
    ++trials;
    if (contains_point_or_outside(mesh, p)) out.push_back(p);
    if (trials == kRejectionProbeTrials &&
        static_cast<double>(out.size()) / static_cast<double>(trials) < kMinFillRatio) {
      throw RejectionBudgetExceeded("acceptance rate below " + std::to_string(kMinFillRatio) +
                                    " over the first 1e6 trials");
    }
  }
  return out;
}

SampleSet make_sample_set(const TriangleMesh& mesh, std::size_t n_interior, std::size_t n_surface,
                          std::uint64_t seed) {
  SampleSet set;
  set.seed = seed;
  set.interior_points = sample_interior(mesh, n_interior, seed);
  auto surface = sample_surface(mesh, n_surface, seed);
  set.surface_points = std::move(surface.points);
  set.surface_normals = std::move(surface.normals);
  return set;
}

void make_icosphere(int subdivisions, double radius, std::vector<Vec3>& vertices,
                    std::vector<Face>& faces) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : vertices) v.normalize();
  faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
           {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::unordered_map<std::uint64_t, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const std::uint64_t key = (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      vertices.push_back((vertices[a] + vertices[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(vertices.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const auto a = mid(f[0], f[1]);
      const auto b = mid(f[1], f[2]);
      const auto c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  for (Vec3& v : vertices) v *= radius;
}

}  // namespace spherepack
