#include "testkit.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace spherepack;
using namespace spherepack::testkit;

namespace {

const TriangleMesh& ball() {
  static const TriangleMesh m = icosphere(3, 1.0).mesh();
  return m;
}

const TriangleMesh& cube() {
  static const TriangleMesh m = unit_cube().mesh();
  return m;
}

SphereSet make_set(std::vector<Sphere> spheres) {
  SphereSet s;
  s.spheres = std::move(spheres);
  s.generator = Generator::Manual;
  return s;
}

// Largest gap between the unit sphere and the level-3 icosphere: the inradius
// deficit of the biggest face, bounded from the actual tessellation.
double tessellation_deficit() {
  const AnalyticShape s = icosphere(3, 1.0);
  double worst = 0.0;
  for (const Face& f : s.faces) {
    const Vec3& a = s.vertices[f[0]];
    const Vec3 n = (s.vertices[f[1]] - a).cross(s.vertices[f[2]] - a).normalized();
    worst = std::max(worst, 1.0 - std::abs(n.dot(a)));
  }
  return worst;
}

// Area-weighted mean of 1 - |p| over the level-3 icosphere by barycentric
// midpoint quadrature on each face.
double tessellation_mean_deficit() {
  const AnalyticShape s = icosphere(3, 1.0);
  const int m = 40;
  double num = 0.0, den = 0.0;
  for (const Face& f : s.faces) {
    const Vec3& a = s.vertices[f[0]];
    const Vec3& b = s.vertices[f[1]];
    const Vec3& c = s.vertices[f[2]];
    const double area = 0.5 * (b - a).cross(c - a).norm();
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; i + j < m; ++j) {
        // Upward sub-triangle centroids; equal areas.
        const double u = (i + 1.0 / 3.0) / m, v = (j + 1.0 / 3.0) / m;
        sum += 1.0 - (a + u * (b - a) + v * (c - a)).norm();
        ++count;
        if (i + j + 1 < m) {
          const double u2 = (i + 2.0 / 3.0) / m, v2 = (j + 2.0 / 3.0) / m;
          sum += 1.0 - (a + u2 * (b - a) + v2 * (c - a)).norm();
          ++count;
        }
      }
    num += area * sum / count;
    den += area;
  }
  return num / den;
}

}  // namespace

TEST(SurfaceDistance, IdentitySphereWithinChordDeficit) {
  const double deficit = tessellation_deficit();
  EXPECT_LT(deficit, 5e-3);
  const SurfaceDistances d = surface_distance_metrics(ball(), make_set({{Vec3::Zero(), 1.0}}), 20000, 1);
  EXPECT_LE(d.d_max, deficit + 1e-12);
  EXPECT_LE(d.d_max, 5e-3);
  const double mean = tessellation_mean_deficit();
  EXPECT_NEAR(d.d_avg, mean, 0.05 * mean);
  EXPECT_GE(d.d_max, d.d_avg);
}

TEST(SurfaceDistance, ShrunkenSphere) {
  const SurfaceDistances d = surface_distance_metrics(ball(), make_set({{Vec3::Zero(), 0.5}}), 20000, 2);
  EXPECT_NEAR(d.d_avg, 0.5, 1e-2);
}

TEST(SurfaceDistance, DuplicateSphereUnchanged) {
  const SphereSet one = make_set({{Vec3(0.1, 0, 0), 0.8}, {Vec3(0, 0.3, 0), 0.6}});
  SphereSet two = one;
  two.spheres.push_back(one.spheres[0]);
  const SurfaceDistances a = surface_distance_metrics(ball(), one, 5000, 3);
  const SurfaceDistances b = surface_distance_metrics(ball(), two, 5000, 3);
  EXPECT_EQ(a.d_max, b.d_max);
  EXPECT_EQ(a.d_avg, b.d_avg);
}

TEST(VolumeRatios, IdentitySphere) {
  const VolumeRatios v = volume_ratios(ball(), make_set({{Vec3::Zero(), 1.0}}), 200000, 4);
  EXPECT_GE(v.r_inside, 0.97);
  EXPECT_LE(v.r_outside, 0.03);
  EXPECT_GE(v.r_union, 0.97);
  EXPECT_LE(v.r_union, 1.05);
  EXPECT_GT(v.r_union_se, 0.0);
}

TEST(VolumeRatios, DisjointSphere) {
  const Sphere far{Vec3(10, 10, 10), 0.1};
  const VolumeRatios v = volume_ratios(cube(), make_set({far}), 200000, 5);
  EXPECT_EQ(v.r_inside, 0.0);
  EXPECT_EQ(v.in_both, 0u);
  const double expected = 1.0 + far.volume();
  EXPECT_NEAR(v.r_union, expected, 3.0 * v.r_union_se);
  EXPECT_NEAR(v.r_outside, far.volume(), 3.0 * v.r_outside_se);
}

TEST(VolumeRatios, DuplicateSphereSameRatios) {
  const Sphere s{Vec3(0.5, 0.5, 0.5), 0.6};
  const VolumeRatios a = volume_ratios(cube(), make_set({s}), 20000, 6);
  const VolumeRatios b = volume_ratios(cube(), make_set({s, s}), 20000, 6);
  EXPECT_EQ(a.r_inside, b.r_inside);
  EXPECT_EQ(a.r_outside, b.r_outside);
  EXPECT_EQ(a.r_union, b.r_union);
}

TEST(VolumeRatios, ExactIdentitiesOnSharedSampleSet) {
  const SphereSet set = make_set({{Vec3(0.3, 0.3, 0.3), 0.4}, {Vec3(0.9, 0.8, 0.7), 0.35}});
  const VolumeRatios v = volume_ratios(cube(), set, 50000, 7);
  EXPECT_NEAR(v.r_union, v.r_inside + v.r_outside + v.uncovered, 1e-12);
  EXPECT_NEAR(v.r_inside + v.uncovered, 1.0, 1e-12);
  EXPECT_GE(v.r_union, v.r_inside);
  EXPECT_GE(v.r_union, 1.0 - v.uncovered - 1e-12);
  EXPECT_EQ(v.in_both + v.sphere_only + v.mesh_only <= v.n_samples, true);
}

TEST(VolumeRatios, InsideAndOutsideAgainstAnalyticValues) {
  // Sphere centered on a cube face: exactly half of it is inside.
  const Sphere s{Vec3(0.5, 0.5, 1.0), 0.3};
  const VolumeRatios v = volume_ratios(cube(), make_set({s}), 200000, 8);
  const double half = 0.5 * s.volume();
  EXPECT_NEAR(v.r_inside, half, 4.0 * v.r_inside_se);
  EXPECT_NEAR(v.r_outside, half, 4.0 * v.r_outside_se);
}

TEST(VolumeRatios, RequiresEnoughSamples) {
  EXPECT_THROW(volume_ratios(cube(), make_set({{Vec3::Zero(), 1.0}}), 999, 0), InvalidArgument);
}

TEST(VolumeRatios, MoreSamplesShrinkStandardError) {
  const SphereSet set = make_set({{Vec3(0.5, 0.5, 0.5), 0.55}});
  const VolumeRatios small = volume_ratios(cube(), set, 20000, 9);
  const VolumeRatios large = volume_ratios(cube(), set, 320000, 9);
  EXPECT_NEAR(small.r_union_se / large.r_union_se, 4.0, 0.4);
  EXPECT_NEAR(small.r_union, large.r_union, 3.0 * small.r_union_se);
}

TEST(VolumeRatios, StandardErrorMatchesEmpiricalSpread) {
  const SphereSet set = make_set({{Vec3(0.5, 0.5, 0.5), 0.55}});
  std::vector<double> values;
  double se = 0.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const VolumeRatios v = volume_ratios(cube(), set, 5000, seed);
    values.push_back(v.r_inside);
    se += v.r_inside_se / 40.0;
  }
  double mean = 0.0;
  for (double x : values) mean += x / values.size();
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean) / (values.size() - 1);
  EXPECT_NEAR(std::sqrt(var) / se, 1.0, 0.35);
}

TEST(Fidelity, InvariantsAndDeterminism) {
  const SphereSet set = make_set({{Vec3(0.3, 0.5, 0.5), 0.35}, {Vec3(0.7, 0.5, 0.5), 0.35}});
  const FidelityReport a = fidelity(cube(), set, 1.5, 20000, 5000, 11);
  const FidelityReport b = fidelity(cube(), set, 2.5, 20000, 5000, 11);
  EXPECT_EQ(a.t_comp, 1.5);
  EXPECT_GE(a.d_max, a.d_avg);
  EXPECT_GE(a.d_avg, 0.0);
  EXPECT_GE(a.r_inside, 0.0);
  EXPECT_LE(a.r_inside, 1.0 + 3.0 * a.r_inside_se);
  EXPECT_GE(a.r_outside, 0.0);
  EXPECT_GE(a.r_union, std::max(a.r_inside, 1.0 - 3.0 * a.r_union_se));
  EXPECT_EQ(a.n_volume_samples, 20000u);
  EXPECT_EQ(a.n_surface_samples, 5000u);
  EXPECT_EQ(a.seed, 11u);
  EXPECT_EQ(a.d_max, b.d_max);
  EXPECT_EQ(a.d_avg, b.d_avg);
  EXPECT_EQ(a.r_inside, b.r_inside);
  EXPECT_EQ(a.r_outside, b.r_outside);
  EXPECT_EQ(a.r_union, b.r_union);
}

TEST(Fidelity, IdentityDecomposition) {
  const FidelityReport r = fidelity(ball(), make_set({{Vec3::Zero(), 1.0}}), 0.0, 200000, 20000, 12);
  // Every deviation of r_union from 1 is spill outside the mesh.
  EXPECT_NEAR(r.r_union - 1.0, r.r_outside, 1e-12);
  EXPECT_NEAR(r.r_union, r.r_inside + r.r_outside + r.uncovered_fraction, 1e-12);
  EXPECT_LT(r.uncovered_fraction, 0.03);
}

TEST(Fidelity, InvariantUnderRigidTransform) {
  const Eigen::Isometry3d t = Eigen::Translation3d(2, -1, 0.5) * Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized());
  const TriangleMesh moved = cube().transformed(t);
  const SphereSet set = make_set({{Vec3(0.4, 0.5, 0.5), 0.45}});
  SphereSet moved_set = set;
  moved_set.spheres[0].center = t * set.spheres[0].center;
  const FidelityReport a = fidelity(cube(), set, 0.0, 200000, 20000, 13);
  const FidelityReport b = fidelity(moved, moved_set, 0.0, 200000, 20000, 13);
  EXPECT_NEAR(a.r_inside, b.r_inside, 3.0 * std::hypot(a.r_inside_se, b.r_inside_se));
  EXPECT_NEAR(a.r_outside, b.r_outside, 3.0 * std::hypot(a.r_outside_se, b.r_outside_se));
  EXPECT_NEAR(a.d_avg, b.d_avg, 5e-3);
}
