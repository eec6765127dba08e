#pragma once

#include "spherepack/geometry.hpp"
#include "spherepack/loss.hpp"
#include "spherepack/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace spherepack {

/// Knobs of the packing loop. Length-valued defaults scale with the mesh
/// bounding-box diagonal D; use `defaults_for` to obtain them.
struct OptimizerConfig {
  double lr_center = 5e-3;
  double lr_radius = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int max_iters = 2000;
  double grad_clip_norm = 1.0;
  int plateau_window = 50;
  double plateau_rel_tol = 1e-3;
  int density_interval_min = 100;
  double r_threshold = 1e-2;
  double coverage_gap_tol = 1e-2;
  int max_density_events = 5;
  double loss_stop_rel_tol = 1e-5;
  double radius_sigma = 0.3;

  std::size_t interior_samples = kDefaultInteriorSamples;
  std::size_t surface_samples = kDefaultSurfaceSamples;
  /// Reductions run in a fixed order; the flag is recorded for provenance.
  bool deterministic = true;
  LossOptions loss;

  /// lr_center = 5e-3 D, lr_radius = 2e-3 D, r_threshold = coverage_gap_tol = 1e-2 D.
  static OptimizerConfig defaults_for(const TriangleMesh& mesh);

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;

  /// Applies flat key/value overrides (keys are the field names above).
  /// Throws InvalidArgument for unknown keys or unparsable values.
  void apply(const std::map<std::string, std::string>& overrides);

  /// Field name -> value, in declaration order, for manifests.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

/// Parses "key = value" lines ('#' comments, blank lines ignored).
std::map<std::string, std::string> parse_key_value_config(std::string_view text);

/// Per-sphere Adam moments. Each sphere carries its own step count so spheres
/// inserted by density control start with fresh bias correction.
struct AdamState {
  struct Moments {
    Vec3 m_center = Vec3::Zero();
    Vec3 v_center = Vec3::Zero();
    double m_radius = 0.0;
    double v_radius = 0.0;
    int steps = 0;
  };
  std::vector<Moments> spheres;

  explicit AdamState(std::size_t n = 0) : spheres(n) {}
};

struct DensityEvent {
  int iteration = 0;
  std::size_t pruned = 0;
  std::size_t added = 0;
};

struct PackResult {
  SphereSet set;
  std::vector<LossBreakdown> history;
  std::vector<DensityEvent> density_events;
  std::size_t best_iteration = 0;
  double wall_time = 0.0;
};

/// Centers drawn without replacement from the interior samples; radii
/// log-normal with median (3V/4N pi)^(1/3), then rescaled by one common factor
/// so the summed sphere volume equals the mesh volume.
/// Throws InsufficientInterior when there are no interior samples.
SphereSet initialize(const TriangleMesh& mesh, const SampleSet& samples, std::size_t n,
                     std::uint64_t seed, double radius_sigma = 0.3);

/// One clipped Adam update with separate learning rates for centers and
/// radii. Radii are clamped to at least r_threshold / 2 afterwards.
void adam_step(std::vector<Sphere>& spheres, const LossGradient& gradient, AdamState& state,
               const OptimizerConfig& config);

struct DensityResult {
  std::vector<Sphere> spheres;
  /// For each surviving original sphere, its index in the input.
  std::vector<std::size_t> kept;
  std::size_t pruned = 0;
  std::size_t added = 0;
};

/// Prunes spheres with r < r_threshold or a center outside the mesh, then
/// greedily inserts spheres at the worst-covered interior samples (farthest
/// from every sphere surface) until the count is back to `target_n` or no
/// sample is uncovered by more than coverage_gap_tol. Added spheres get radius
/// min(distance to nearest surface sample, mean radius for target_n), floored
/// at r_threshold, and are appended after the survivors.
/// Throws AllPruned when nothing survives and nothing can be added.
DensityResult density_control(const TriangleMesh& mesh, const SampleSet& samples,
                              std::span<const Sphere> spheres, std::size_t target_n,
                              const OptimizerConfig& config);

/// Full pipeline on pre-drawn samples.
PackResult pack(const TriangleMesh& mesh, const SampleSet& samples, std::size_t n,
                const WeightConfig& weights, const OptimizerConfig& config, std::uint64_t seed);

/// Draws config.interior_samples / config.surface_samples and packs.
PackResult pack(const TriangleMesh& mesh, std::size_t n, const WeightConfig& weights,
                const OptimizerConfig& config, std::uint64_t seed);

}  // namespace spherepack
