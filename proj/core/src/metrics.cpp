#include "spherepack/metrics.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spherepack {

SurfaceDistances surface_distance_metrics(const TriangleMesh& mesh, const SphereSet& set,
                                          std::size_t n_samples, std::uint64_t seed) {
  set.validate();
  const SurfaceSamples samples = sample_surface(mesh, n_samples, derive_seed(seed, "metrics-surface"));
  SurfaceDistances out;
  double sum = 0.0;
  for (const Vec3& q : samples.points) {
    double d = std::numeric_limits<double>::infinity();
    for (const Sphere& s : set.spheres) d = std::min(d, std::abs((q - s.center).norm() - s.radius));
    sum += d;
    out.d_max = std::max(out.d_max, d);
  }
  out.d_avg = sum / static_cast<double>(samples.points.size());
  return out;
}

namespace {

// Standard error of mean(x) / mean(y) for per-sample indicator pairs, given
// the sums needed for the delta-method variance.
double ratio_se(double sum_x, double sum_y, double sum_xy, double sum_xx, double sum_yy, double n) {
  const double ratio = sum_x / sum_y;
  const double mean_y = sum_y / n;
  // sum over samples of (x - R y)^2
  const double resid = sum_xx - 2.0 * ratio * sum_xy + ratio * ratio * sum_yy;
  const double var = std::max(0.0, resid / (n - 1.0));
  return std::sqrt(var / n) / mean_y;
}

}  // namespace

VolumeRatios volume_ratios(const TriangleMesh& mesh, const SphereSet& set, std::size_t n_samples,
                           std::uint64_t seed) {
  if (n_samples < 1000) throw InvalidArgument("volume_ratios requires at least 1000 samples");
  set.validate();

  Aabb box = mesh.aabb();
  for (const Sphere& s : set.spheres) {
    box.expand(Vec3(s.center.array() - s.radius));
    box.expand(Vec3(s.center.array() + s.radius));
  }
  const Vec3 pad = 0.005 * box.extent();
  box.min -= pad;
  box.max += pad;

  Rng rng(derive_seed(seed, "metrics-volume"));
  std::size_t both = 0, sphere_only = 0, mesh_only = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double x = rng.uniform(box.min.x(), box.max.x());
    const double y = rng.uniform(box.min.y(), box.max.y());
    const double z = rng.uniform(box.min.z(), box.max.z());
    const Vec3 p(x, y, z);
    bool in_sphere = false;
    for (const Sphere& s : set.spheres) {
      if ((p - s.center).squaredNorm() < s.radius * s.radius) {
        in_sphere = true;
        break;
      }
    }
    const bool in_mesh = contains_point_or_outside(mesh, p);
    if (in_mesh && in_sphere) ++both;
    else if (in_sphere) ++sphere_only;
    else if (in_mesh) ++mesh_only;
  }

  const std::size_t in_mesh = both + mesh_only;
  if (in_mesh == 0) throw DegenerateEstimate("no volume sample fell inside the mesh");

  VolumeRatios out;
  out.n_samples = n_samples;
  out.in_both = both;
  out.sphere_only = sphere_only;
  out.mesh_only = mesh_only;
  const double m = static_cast<double>(in_mesh);
  const double a = static_cast<double>(both);
  const double b = static_cast<double>(sphere_only);
  const double c = static_cast<double>(mesh_only);
  out.r_inside = a / m;
  out.r_outside = b / m;
  out.r_union = (a + b + c) / m;
  out.uncovered = c / m;

  // Indicators: y = in mesh; x_inside = both (subset of y, so xy = x);
  // x_outside = sphere only (disjoint from y); x_union = in either (superset of y).
  const double n = static_cast<double>(n_samples);
  out.r_inside_se = ratio_se(a, m, a, a, m, n);
  out.r_outside_se = ratio_se(b, m, 0.0, b, m, n);
  out.r_union_se = ratio_se(a + b + c, m, m, a + b + c, m, n);
  return out;
}

FidelityReport fidelity(const TriangleMesh& mesh, const SphereSet& set, double wall_time,
                        std::size_t n_volume_samples, std::size_t n_surface_samples,
                        std::uint64_t seed) {
  const SurfaceDistances d = surface_distance_metrics(mesh, set, n_surface_samples, seed);
  const VolumeRatios v = volume_ratios(mesh, set, n_volume_samples, seed);
  FidelityReport r;
  r.t_comp = wall_time;
  r.d_max = d.d_max;
  r.d_avg = d.d_avg;
  r.r_inside = v.r_inside;
  r.r_outside = v.r_outside;
  r.r_union = v.r_union;
  r.r_inside_se = v.r_inside_se;
  r.r_outside_se = v.r_outside_se;
  r.r_union_se = v.r_union_se;
  r.uncovered_fraction = v.uncovered;
  r.n_volume_samples = n_volume_samples;
  r.n_surface_samples = n_surface_samples;
  r.seed = seed;
  return r;
}

}  // namespace spherepack
