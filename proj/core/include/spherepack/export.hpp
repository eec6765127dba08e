#pragma once

#include "spherepack/metrics.hpp"
#include "spherepack/model.hpp"

#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace spherepack {

inline constexpr std::string_view kSchemaVersion = "1";

/// On-disk form of a sphere set (schema version "1"):
///
///   {
///     "schema_version": "1",
///     "mesh_id": "<16 hex digits>",
///     "generator": "MORPHIT" | "VSSA" | "MANUAL",
///     "seed": <uint64>,
///     "weights": {"w_c": .., "w_o": .., "w_b": .., "w_s": .., "w_t": .., "w_q": ..},   (optional)
///     "spheres": [{"center": [x, y, z], "radius": r}, ...],
///     "fidelity": { FidelityReport fields },                                          (optional)
///   }
///
/// Numbers are written in shortest round-trip form, so parsing reproduces
/// every double bit for bit.
struct SphereSetDocument {
  SphereSet set;
  std::optional<WeightConfig> weights;
  std::optional<FidelityReport> fidelity;
};

std::string to_json(const SphereSetDocument& doc);
inline std::string to_json(const SphereSet& set) { return to_json(SphereSetDocument{set, {}, {}}); }

/// Throws SchemaError on malformed JSON, an unknown schema version, missing
/// or mistyped fields, or an invalid sphere.
SphereSetDocument parse_document(std::string_view json);
inline SphereSet from_json(std::string_view json) { return parse_document(json).set; }

/// Flat JSON object with the FidelityReport field names.
std::string fidelity_to_json(const FidelityReport& report);

/// Replaces all <collision> children of each mapped link with one sphere
/// collision per sphere, named spherepack_<link>_<k>, with rpy="0 0 0".
/// Bytes outside the edited links are preserved. Idempotent.
/// Throws XmlError for malformed input or a non-<robot> root and
/// LinkNotFound for a map key without a matching <link>.
std::string rewrite_urdf(std::string_view urdf, const std::map<std::string, SphereSet>& link_sets);

/// The first <collision><geometry><mesh> of a link, with its <origin>.
struct CollisionMeshRef {
  std::string filename;
  double scale = 1.0;
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
  std::size_t collision_count = 0;
};

/// Throws LinkNotFound, or XmlError if the link has no mesh collision or a
/// non-uniform mesh scale.
CollisionMeshRef find_collision_mesh(std::string_view urdf, std::string_view link);

/// URDF fixed-axis roll/pitch/yaw: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Eigen::Isometry3d urdf_pose(const Vec3& xyz, const Vec3& rpy);

/// One icosphere (20 * 4^subdivisions triangles) per sphere, as OBJ objects
/// named sphere_<k>. Subdivisions must lie in [0, 4].
std::string to_obj_viz(const SphereSet& set, int subdivisions);

}  // namespace spherepack
