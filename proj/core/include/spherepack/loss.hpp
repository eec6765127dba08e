#pragma once

#include "spherepack/geometry.hpp"
#include "spherepack/model.hpp"

#include <span>
#include <utility>
#include <vector>

namespace spherepack {

/// Unweighted values of the six loss terms plus their weighted sum.
struct LossBreakdown {
  double coverage = 0.0;
  double overlap = 0.0;
  double boundary = 0.0;
  double surface = 0.0;
  double containment = 0.0;
  double sqem = 0.0;
  double total = 0.0;
};

/// d total / d c_i and d total / d r_i for every sphere.
struct LossGradient {
  std::vector<Vec3> d_center;
  std::vector<double> d_radius;

  double squared_norm() const;
};

/// How the SQEM term picks the sphere "closest" to a surface point.
enum class SqemClosest {
  SignedDistance,  // argmin of |q - c| - r, consistent with the other surface terms
  CenterDistance,  // argmin of |q - c|
};

struct LossOptions {
  SqemClosest sqem_closest = SqemClosest::SignedDistance;
};

/// |point - center| - radius; negative inside the sphere.
inline double signed_distance(const Vec3& point, const Sphere& sphere) {
  return (point - sphere.center).norm() - sphere.radius;
}

/// Evaluates the composite loss. Expectations are arithmetic means over the
/// interior samples, the surface samples, or the N(N-1) ordered sphere pairs.
/// Pair terms are 0 for a single sphere. Min/argmin ties go to the lowest
/// sphere index. Throws EmptyDomain if either sample list is empty.
LossBreakdown evaluate_losses(const SampleSet& samples, std::span<const Sphere> spheres,
                              const WeightConfig& weights, const LossOptions& options = {});

/// Same as evaluate_losses plus the analytic gradient of the total. Min terms
/// route gradient to the argmin sphere only; hinges are flat at their kink;
/// a sample coinciding with a center (within 1e-12) contributes no center
/// gradient through that distance.
std::pair<LossBreakdown, LossGradient> evaluate_gradients(const SampleSet& samples,
                                                          std::span<const Sphere> spheres,
                                                          const WeightConfig& weights,
                                                          const LossOptions& options = {});

}  // namespace spherepack
