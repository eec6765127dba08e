#pragma once

#include "spherepack/geometry.hpp"
#include "spherepack/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace spherepack {

/// Simplified ("lite") variational sphere-set approximation: Lloyd clustering
/// of interior samples with a per-cluster sphere fitted as centroid plus
/// 99%-coverage radius, then shrunk by golden-section search on
/// alpha * outside_volume - covered_volume.
struct VssaConfig {
  std::size_t n_spheres = 1;
  int max_lloyd_iters = 50;
  std::size_t sov_samples_per_sphere = 2000;
  std::uint64_t seed = 0;
  /// Weight of the outside volume against the covered interior volume.
  double alpha = 1.0;

  void validate() const;
};

/// Sphere outside volume: Monte Carlo estimate of the part of `sphere` lying
/// outside the mesh (m^3). Requires n_samples >= 100.
double sov(const TriangleMesh& mesh, const Sphere& sphere, std::size_t n_samples, std::uint64_t seed);

struct VssaResult {
  SphereSet set;
  /// Total SOV of the accepted sphere set after each Lloyd iteration, measured
  /// with one fixed set of unit-ball samples.
  std::vector<double> sov_trace;
  /// Within-cluster sum of squared distances to cluster centers after each
  /// assignment step.
  std::vector<double> sse_trace;
  int iterations = 0;
};

VssaResult vssa_run(const TriangleMesh& mesh, const SampleSet& samples, const VssaConfig& config);

inline SphereSet vssa_pack(const TriangleMesh& mesh, const SampleSet& samples, const VssaConfig& config) {
  return vssa_run(mesh, samples, config).set;
}

/// Index of the nearest center for each point (ties to the lowest index).
std::vector<std::uint32_t> assign_to_nearest(std::span<const Vec3> points, std::span<const Vec3> centers);

/// Sum over points of squared distance to their assigned center.
double within_cluster_sse(std::span<const Vec3> points, std::span<const Vec3> centers,
                          std::span<const std::uint32_t> assignment);

}  // namespace spherepack
