#pragma once

#include "spherepack/geometry.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spherepack {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;

  bool valid() const { return center.allFinite() && std::isfinite(radius) && radius > 0.0; }
  double volume() const;
  friend bool operator==(const Sphere& a, const Sphere& b) {
    return a.center == b.center && a.radius == b.radius;
  }
};

enum class Generator { MorphIt, Vssa, Manual };

std::string_view to_string(Generator g);
/// Accepts "MORPHIT", "VSSA", "MANUAL"; throws SchemaError otherwise.
Generator generator_from_string(std::string_view s);

/// The optimization variable: an ordered, non-empty list of spheres bound to
/// the mesh it approximates. Index order is stable and meaningful.
struct SphereSet {
  std::vector<Sphere> spheres;
  std::string mesh_id;
  std::uint64_t seed = 0;
  Generator generator = Generator::Manual;

  std::size_t size() const { return spheres.size(); }
  /// Throws InvalidArgument if empty or any sphere is invalid.
  void validate() const;
  /// Sum of individual sphere volumes (overlaps counted repeatedly).
  double total_volume() const;

  friend bool operator==(const SphereSet&, const SphereSet&) = default;
};

/// Weights of the six loss terms, in the fixed order
/// coverage, overlap, boundary, surface, containment, SQEM.
struct WeightConfig {
  double coverage = 0.0;     // w_c
  double overlap = 0.0;      // w_o
  double boundary = 0.0;     // w_b
  double surface = 0.0;      // w_s
  double containment = 0.0;  // w_t
  double sqem = 0.0;         // w_q

  void validate() const;
  WeightConfig scaled(double factor) const;
  friend bool operator==(const WeightConfig&, const WeightConfig&) = default;
};

/// Published weight presets: "V" (volume coverage), "S" (surface accuracy),
/// "B" (balanced). Throws UnknownPreset for anything else.
WeightConfig preset(std::string_view name);

/// Short keys used by configuration files and JSON: w_c, w_o, w_b, w_s, w_t, w_q.
inline constexpr std::string_view kWeightKeys[6] = {"w_c", "w_o", "w_b", "w_s", "w_t", "w_q"};
double& weight_by_key(WeightConfig& w, std::string_view key);
double weight_by_key(const WeightConfig& w, std::string_view key);

/// (3 V / (4 N pi))^(1/3): the radius at which N equal spheres hold volume V.
double mean_radius(double volume, std::size_t n);

}  // namespace spherepack
