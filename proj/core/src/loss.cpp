#include "spherepack/loss.hpp"

#include "spherepack/errors.hpp"

#include <cmath>
#include <limits>

namespace spherepack {

double LossGradient::squared_norm() const {
  double s = 0.0;
  for (const Vec3& g : d_center) s += g.squaredNorm();
  for (double g : d_radius) s += g * g;
  return s;
}

namespace {

constexpr double kCoincident = 1e-12;

struct Nearest {
  std::size_t index = 0;
  double signed_dist = std::numeric_limits<double>::infinity();
  double center_dist = 0.0;
};

// Structure-of-arrays copy of the spheres for the inner loops.
struct SphereArrays {
  std::vector<double> x, y, z, r;

  explicit SphereArrays(std::span<const Sphere> spheres) {
    const auto n = spheres.size();
    x.resize(n);
    y.resize(n);
    z.resize(n);
    r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = spheres[i].center.x();
      y[i] = spheres[i].center.y();
      z[i] = spheres[i].center.z();
      r[i] = spheres[i].radius;
    }
  }

  Nearest nearest(const Vec3& p) const {
    Nearest best;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double dx = p.x() - x[i], dy = p.y() - y[i], dz = p.z() - z[i];
      const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double sd = dist - r[i];
      if (sd < best.signed_dist) {
        best.index = i;
        best.signed_dist = sd;
        best.center_dist = dist;
      }
    }
    return best;
  }

  std::size_t nearest_center(const Vec3& p) const {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double dx = p.x() - x[i], dy = p.y() - y[i], dz = p.z() - z[i];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    return best;
  }
};

// Unit vector from c toward p, or zero when they coincide.
Vec3 direction(const Vec3& p, const Vec3& c, double dist) {
  return dist > kCoincident ? Vec3((p - c) / dist) : Vec3::Zero();
}

template <bool kWithGradient>
LossBreakdown accumulate(const SampleSet& samples, std::span<const Sphere> spheres,
                         const WeightConfig& w, const LossOptions& options, LossGradient* grad) {
  if (samples.interior_points.empty()) throw EmptyDomain("no interior samples");
  if (samples.surface_points.empty()) throw EmptyDomain("no surface samples");
  if (samples.surface_normals.size() != samples.surface_points.size()) {
    throw InvalidArgument("surface normals and points differ in count");
  }
  if (spheres.empty()) throw InvalidArgument("sphere set is empty");

  const std::size_t n = spheres.size();
  const SphereArrays arrays(spheres);
  LossBreakdown out;

  if constexpr (kWithGradient) {
    grad->d_center.assign(n, Vec3::Zero());
    grad->d_radius.assign(n, 0.0);
  }

  // Interior: coverage.
  {
    const double scale = w.coverage / static_cast<double>(samples.interior_points.size());
    double sum = 0.0;
    for (const Vec3& p : samples.interior_points) {
      const Nearest nb = arrays.nearest(p);
      if (nb.signed_dist > 0.0) {
        sum += nb.signed_dist;
        if constexpr (kWithGradient) {
          if (scale != 0.0) {
            const Sphere& s = spheres[nb.index];
            grad->d_center[nb.index] -= scale * direction(p, s.center, nb.center_dist);
            grad->d_radius[nb.index] -= scale;
          }
        }
      }
    }
    out.coverage = sum / static_cast<double>(samples.interior_points.size());
  }

  // Surface: boundary, surface distance, SQEM.
  {
    const double inv_m = 1.0 / static_cast<double>(samples.surface_points.size());
    double bound = 0.0, surf = 0.0, sqem = 0.0;
    for (std::size_t k = 0; k < samples.surface_points.size(); ++k) {
      const Vec3& q = samples.surface_points[k];
      const Vec3& nq = samples.surface_normals[k];
      const Nearest nb = arrays.nearest(q);
      const double m = nb.signed_dist;
      const Sphere& s = spheres[nb.index];
      const Vec3 u = direction(q, s.center, nb.center_dist);
      // d m / d c = -u, d m / d r = -1.
      if (m < 0.0) {
        bound += -m;
        if constexpr (kWithGradient) {
          const double g = w.boundary * inv_m;
          grad->d_center[nb.index] += g * u;
          grad->d_radius[nb.index] += g;
        }
      }
      surf += std::abs(m);
      if constexpr (kWithGradient) {
        if (m != 0.0) {
          const double g = w.surface * inv_m * (m > 0.0 ? 1.0 : -1.0);
          grad->d_center[nb.index] -= g * u;
          grad->d_radius[nb.index] -= g;
        }
      }
      const std::size_t c = options.sqem_closest == SqemClosest::SignedDistance ? nb.index
                                                                               : arrays.nearest_center(q);
      const double e = (q - spheres[c].center).dot(nq) - spheres[c].radius;
      sqem += e * e;
      if constexpr (kWithGradient) {
        const double g = 2.0 * e * w.sqem * inv_m;
        grad->d_center[c] -= g * nq;
        grad->d_radius[c] -= g;
      }
    }
    out.boundary = bound * inv_m;
    out.surface = surf * inv_m;
    out.sqem = sqem * inv_m;
  }

  // Ordered pairs i != j: overlap and containment.
  if (n > 1) {
    const double inv_pairs = 1.0 / static_cast<double>(n * (n - 1));
    double overlap = 0.0, contain = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const Vec3 diff = spheres[i].center - spheres[j].center;
        const double d = diff.norm();
        const Vec3 u = d > kCoincident ? Vec3(diff / d) : Vec3::Zero();  // d d / d c_i
        const double o = spheres[i].radius + spheres[j].radius - d;
        if (o > 0.0) {
          overlap += o;
          if constexpr (kWithGradient) {
            const double g = w.overlap * inv_pairs;
            grad->d_radius[i] += g;
            grad->d_radius[j] += g;
            grad->d_center[i] -= g * u;
            grad->d_center[j] += g * u;
          }
        }
        const double t = spheres[j].radius - (d + spheres[i].radius);
        if (t > 0.0) {
          contain += t * t;
          if constexpr (kWithGradient) {
            const double g = 2.0 * t * w.containment * inv_pairs;
            grad->d_radius[j] += g;
            grad->d_radius[i] -= g;
            grad->d_center[i] -= g * u;
            grad->d_center[j] += g * u;
          }
        }
      }
    }
    out.overlap = overlap * inv_pairs;
    out.containment = contain * inv_pairs;
  }

  out.total = w.coverage * out.coverage + w.overlap * out.overlap + w.boundary * out.boundary +
              w.surface * out.surface + w.containment * out.containment + w.sqem * out.sqem;
  return out;
}

}  // namespace

LossBreakdown evaluate_losses(const SampleSet& samples, std::span<const Sphere> spheres,
                              const WeightConfig& weights, const LossOptions& options) {
  return accumulate<false>(samples, spheres, weights, options, nullptr);
}

std::pair<LossBreakdown, LossGradient> evaluate_gradients(const SampleSet& samples,
                                                          std::span<const Sphere> spheres,
                                                          const WeightConfig& weights,
                                                          const LossOptions& options) {
  LossGradient grad;
  auto losses = accumulate<true>(samples, spheres, weights, options, &grad);
  return {losses, std::move(grad)};
}

}  // namespace spherepack
