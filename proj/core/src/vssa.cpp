#include "spherepack/vssa.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace spherepack {

void VssaConfig::validate() const {
  if (n_spheres < 1) throw InvalidArgument("n_spheres must be at least 1");
  if (max_lloyd_iters < 1) throw InvalidArgument("max_lloyd_iters must be at least 1");
  if (sov_samples_per_sphere < 100) throw InvalidArgument("sov_samples_per_sphere must be at least 100");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
}

namespace {

std::vector<Vec3> unit_ball_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double z = rng.uniform(-1.0, 1.0);
    const Vec3 p(x, y, z);
    if (p.squaredNorm() < 1.0) out.push_back(p);
  }
  return out;
}

double sov_with(const TriangleMesh& mesh, const Sphere& sphere, std::span<const Vec3> ball) {
  std::size_t outside = 0;
  for (const Vec3& u : ball) {
    if (!contains_point_or_outside(mesh, sphere.center + sphere.radius * u)) ++outside;
  }
  return static_cast<double>(outside) / static_cast<double>(ball.size()) * sphere.volume();
}

struct Cluster {
  std::vector<std::size_t> members;
  Vec3 centroid = Vec3::Zero();
};

// Golden-section search of f on [lo, hi] (f assumed unimodal).
template <typename F>
double golden_section(F&& f, double lo, double hi, int iters) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  // Compare the bracket interior with the upper end, which is the unshrunk fit.
  const double mid = 0.5 * (a + b);
  return f(mid) <= f(hi) ? mid : hi;
}

}  // namespace

double sov(const TriangleMesh& mesh, const Sphere& sphere, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw InvalidArgument("sov requires at least 100 samples");
  const auto ball = unit_ball_samples(n_samples, derive_seed(seed, "sov"));
  return sov_with(mesh, sphere, ball);
}

std::vector<std::uint32_t> assign_to_nearest(std::span<const Vec3> points, std::span<const Vec3> centers) {
  std::vector<std::uint32_t> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double d2 = (points[k] - centers[i]).squaredNorm();
      if (d2 < best) {
        best = d2;
        out[k] = static_cast<std::uint32_t>(i);
      }
    }
  }
  return out;
}

double within_cluster_sse(std::span<const Vec3> points, std::span<const Vec3> centers,
                          std::span<const std::uint32_t> assignment) {
  double sse = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) sse += (points[k] - centers[assignment[k]]).squaredNorm();
  return sse;
}

VssaResult vssa_run(const TriangleMesh& mesh, const SampleSet& samples, const VssaConfig& config) {
  config.validate();
  const auto& points = samples.interior_points;
  if (points.size() < config.n_spheres) {
    throw InsufficientInterior("fewer interior samples than requested spheres");
  }
  const std::size_t n = config.n_spheres;
  const double volume_per_point = mesh.volume() / static_cast<double>(points.size());
  const auto ball = unit_ball_samples(config.sov_samples_per_sphere, derive_seed(config.seed, "vssa-ball"));

  Rng rng(derive_seed(config.seed, "vssa-seeding"));
  std::vector<Vec3> centers;
  {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(idx[i], idx[i + rng.below(points.size() - i)]);
      centers.push_back(points[idx[i]]);
    }
  }

  VssaResult result;
  result.set.mesh_id = mesh.mesh_id();
  result.set.seed = config.seed;
  result.set.generator = Generator::Vssa;

  std::vector<std::uint32_t> assignment;
  double accepted_sov = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < config.max_lloyd_iters; ++iter) {
    auto next = assign_to_nearest(points, centers);

    std::vector<Cluster> clusters(n);
    for (std::size_t k = 0; k < points.size(); ++k) clusters[next[k]].members.push_back(k);
    // Empty clusters are re-seeded at the point farthest from its center.
    for (std::size_t i = 0; i < n; ++i) {
      if (!clusters[i].members.empty()) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t k = 0; k < points.size(); ++k) {
        if (clusters[next[k]].members.size() <= 1) continue;
        const double d = (points[k] - centers[next[k]]).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = k;
        }
      }
      if (far_d < 0.0) throw InsufficientInterior("cannot re-seed an empty cluster");
      auto& donor = clusters[next[far]].members;
      donor.erase(std::find(donor.begin(), donor.end(), far));
      next[far] = static_cast<std::uint32_t>(i);
      clusters[i].members.push_back(far);
      centers[i] = points[far];
    }
    result.sse_trace.push_back(within_cluster_sse(points, centers, next));

    const bool stable = next == assignment;
    assignment = std::move(next);

    std::vector<Sphere> spheres(n);
    double total_sov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Cluster& cl = clusters[i];
      Vec3 sum = Vec3::Zero();
      for (auto k : cl.members) sum += points[k];
      cl.centroid = sum / static_cast<double>(cl.members.size());

      std::vector<double> dist;
      dist.reserve(cl.members.size());
      for (auto k : cl.members) dist.push_back((points[k] - cl.centroid).norm());
      std::sort(dist.begin(), dist.end());
      const auto q = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(dist.size()))) - 1;
      const double r99 = std::max(dist[std::min(q, dist.size() - 1)], 1e-9);

      auto objective = [&](double r) {
        const auto covered = static_cast<double>(std::upper_bound(dist.begin(), dist.end(), r) - dist.begin());
        return config.alpha * sov_with(mesh, {cl.centroid, r}, ball) - covered * volume_per_point;
      };
      const double r = golden_section(objective, 0.5 * r99, r99, 20);
      spheres[i] = {cl.centroid, r};
      total_sov += sov_with(mesh, spheres[i], ball);
    }

    // Descent guard: stop rather than accept a set with more outside volume.
    if (total_sov > accepted_sov) break;
    accepted_sov = total_sov;
    result.set.spheres = std::move(spheres);
    result.sov_trace.push_back(total_sov);
    result.iterations = iter + 1;
    for (std::size_t i = 0; i < n; ++i) centers[i] = clusters[i].centroid;
    if (stable) break;
  }
  return result;
}

}  // namespace spherepack
