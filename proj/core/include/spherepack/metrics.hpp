#pragma once

#include "spherepack/geometry.hpp"
#include "spherepack/model.hpp"

#include <cstdint>

namespace spherepack {

struct SurfaceDistances {
  double d_max = 0.0;
  double d_avg = 0.0;
};

/// Monte Carlo volume ratios relative to the mesh volume, all estimated from a
/// single classified point set. Standard errors use the ratio-estimator
/// (delta method) variance.
struct VolumeRatios {
  double r_inside = 0.0;    // |spheres & mesh| / |mesh|
  double r_outside = 0.0;   // |spheres \ mesh| / |mesh|
  double r_union = 0.0;     // |spheres | mesh| / |mesh|
  double uncovered = 0.0;   // |mesh \ spheres| / |mesh|
  double r_inside_se = 0.0;
  double r_outside_se = 0.0;
  double r_union_se = 0.0;
  std::size_t n_samples = 0;
  std::size_t in_both = 0;
  std::size_t sphere_only = 0;
  std::size_t mesh_only = 0;
};

struct FidelityReport {
  double t_comp = 0.0;
  double d_max = 0.0;
  double d_avg = 0.0;
  double r_inside = 0.0;
  double r_outside = 0.0;
  double r_union = 0.0;
  double r_inside_se = 0.0;
  double r_outside_se = 0.0;
  double r_union_se = 0.0;
  double uncovered_fraction = 0.0;
  std::size_t n_volume_samples = 0;
  std::size_t n_surface_samples = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultVolumeSamples = 200000;
inline constexpr std::size_t kDefaultMetricSurfaceSamples = 20000;

/// Unsigned distance from fresh surface samples to the nearest sphere surface.
SurfaceDistances surface_distance_metrics(const TriangleMesh& mesh, const SphereSet& set,
                                          std::size_t n_samples, std::uint64_t seed);

/// Classifies uniform samples of the joint mesh/sphere bounding box (inflated
/// by 1%) as in-mesh and/or in-any-sphere. Requires n_samples >= 1000.
/// Throws DegenerateEstimate if no sample lands in the mesh.
VolumeRatios volume_ratios(const TriangleMesh& mesh, const SphereSet& set, std::size_t n_samples,
                           std::uint64_t seed);

FidelityReport fidelity(const TriangleMesh& mesh, const SphereSet& set, double wall_time,
                        std::size_t n_volume_samples = kDefaultVolumeSamples,
                        std::size_t n_surface_samples = kDefaultMetricSurfaceSamples,
                        std::uint64_t seed = 0);

}  // namespace spherepack
