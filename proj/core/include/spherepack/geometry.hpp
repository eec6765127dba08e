#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace spherepack {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

/// Faces with an area below this (m^2) are degenerate: they keep their place
/// in the face list but receive no sampling weight.
inline constexpr double kDegenerateFaceArea = 1e-12;

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool empty() const { return (max.array() < min.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return extent().norm(); }
  double volume() const { return empty() ? 0.0 : extent().prod(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Indexed, immutable triangle mesh with derived per-face data and a BVH used
/// for point-membership queries. Faces are re-oriented on construction so that
/// normals point outward (positive signed volume).
class TriangleMesh {
 public:
  /// Validates indices and computes all derived data.
  /// Throws ParseError for out-of-range indices and DegenerateMesh for fewer
  /// than four non-degenerate faces or a non-positive enclosed volume.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<double>& face_areas() const { return face_areas_; }
  const std::vector<Vec3>& face_normals() const { return face_normals_; }
  const Aabb& aabb() const { return aabb_; }
  double volume() const { return volume_; }
  double surface_area() const { return surface_area_; }

  bool is_degenerate(std::size_t face) const { return face_areas_[face] < kDegenerateFaceArea; }
  std::size_t degenerate_face_count() const;

  /// True when every undirected edge is shared by exactly two faces.
  bool is_watertight() const { return watertight_; }
  /// True when the input winding was inward and faces were flipped.
  bool was_reoriented() const { return reoriented_; }

  /// 16 hex digit FNV-1a hash of the vertex coordinates and face indices.
  const std::string& mesh_id() const { return mesh_id_; }

  Vec3 vertex(std::size_t face, int corner) const { return vertices_[faces_[face][corner]]; }

  /// Returns a copy with every vertex mapped through x -> transform * (scale * x).
  TriangleMesh transformed(const Eigen::Isometry3d& transform, double scale = 1.0) const;

  // Internal acceleration structure; exposed for the point-query routines.
  struct BvhNode {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first index into bvh_faces; inner: left child
    std::uint32_t count = 0;  // leaf: number of faces; 0 marks an inner node
    std::uint32_t right = 0;
  };
  const std::vector<BvhNode>& bvh_nodes() const { return bvh_nodes_; }
  const std::vector<std::uint32_t>& bvh_faces() const { return bvh_faces_; }

 private:
  void build_bvh();

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<double> face_areas_;
  std::vector<Vec3> face_normals_;
  Aabb aabb_;
  double volume_ = 0.0;
  double surface_area_ = 0.0;
  bool watertight_ = false;
  bool reoriented_ = false;
  std::string mesh_id_;
  std::vector<BvhNode> bvh_nodes_;
  std::vector<std::uint32_t> bvh_faces_;
};

enum class MeshFormat { Obj, Stl };

/// Parses a mesh from an in-memory OBJ or STL (ASCII or binary) byte stream.
/// `scale` multiplies every coordinate (for millimetre STL exports etc.).
TriangleMesh load_mesh(std::string_view bytes, MeshFormat format, double scale = 1.0);

/// Reads a mesh file, inferring the format from the extension (.obj / .stl).
TriangleMesh load_mesh(const std::filesystem::path& path, double scale = 1.0);

MeshFormat format_from_extension(const std::filesystem::path& path);

/// Serializes vertices and faces as a minimal OBJ document.
std::string write_obj(const std::vector<Vec3>& vertices, const std::vector<Face>& faces);

/// |sum over faces of v0 . (v1 x v2)| / 6.
double compute_volume(const std::vector<Vec3>& vertices, const std::vector<Face>& faces);
inline double compute_volume(const TriangleMesh& mesh) { return mesh.volume(); }

/// Strict interior test by ray-crossing parity. The ray is re-cast in a new
/// pseudo-random direction (up to 8 retries) whenever it passes within 1e-9 m
/// of an edge or vertex. Throws NumericalAmbiguity if every attempt does.
bool contains_point(const TriangleMesh& mesh, const Vec3& point);

/// contains_point with NumericalAmbiguity mapped to "outside".
bool contains_point_or_outside(const TriangleMesh& mesh, const Vec3& point) noexcept;

struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> faces;  // source face of each point
};

/// Area-weighted face choice followed by uniform barycentric sampling.
SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Uniform interior samples by bounding-box rejection. Throws
/// RejectionBudgetExceeded if the mesh fills less than 1e-4 of its box or
/// the acceptance rate over the first 1e6 trials falls below that ratio.
std::vector<Vec3> sample_interior(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Pre-sampled expectation domains for the losses.
struct SampleSet {
  std::vector<Vec3> interior_points;
  std::vector<Vec3> surface_points;
  std::vector<Vec3> surface_normals;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultInteriorSamples = 20000;
inline constexpr std::size_t kDefaultSurfaceSamples = 20000;

SampleSet make_sample_set(const TriangleMesh& mesh, std::size_t n_interior, std::size_t n_surface,
                          std::uint64_t seed);

/// Unit-radius icosphere (12 vertices and 20 faces at level 0, each level
/// splits every triangle in four) scaled to `radius`.
void make_icosphere(int subdivisions, double radius, std::vector<Vec3>& vertices,
                    std::vector<Face>& faces);

}  // namespace spherepack
