#include "spherepack/optimizer.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace spherepack {

// ---------------------------------------------------------------------------
// Configuration

OptimizerConfig OptimizerConfig::defaults_for(const TriangleMesh& mesh) {
  OptimizerConfig c;
  const double d = mesh.aabb().diagonal();
  c.lr_center = 5e-3 * d;
  c.lr_radius = 2e-3 * d;
  c.r_threshold = 1e-2 * d;
  c.coverage_gap_tol = 1e-2 * d;
  return c;
}

void OptimizerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  positive(lr_center, "lr_center");
  positive(lr_radius, "lr_radius");
  positive(eps_adam, "eps_adam");
  positive(grad_clip_norm, "grad_clip_norm");
  positive(plateau_rel_tol, "plateau_rel_tol");
  positive(r_threshold, "r_threshold");
  positive(coverage_gap_tol, "coverage_gap_tol");
  positive(loss_stop_rel_tol, "loss_stop_rel_tol");
  positive(radius_sigma, "radius_sigma");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in (0, 1)");
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (plateau_window < 1) throw InvalidArgument("plateau_window must be positive");
  if (density_interval_min < 1) throw InvalidArgument("density_interval_min must be positive");
  if (max_density_events < 0) throw InvalidArgument("max_density_events must be non-negative");
  if (interior_samples < 1 || surface_samples < 1) throw InvalidArgument("sample counts must be positive");
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void OptimizerConfig::apply(const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "lr_center") lr_center = parse_number<double>(key, value);
    else if (key == "lr_radius") lr_radius = parse_number<double>(key, value);
    else if (key == "beta1") beta1 = parse_number<double>(key, value);
    else if (key == "beta2") beta2 = parse_number<double>(key, value);
    else if (key == "eps_adam") eps_adam = parse_number<double>(key, value);
    else if (key == "max_iters") max_iters = parse_number<int>(key, value);
    else if (key == "grad_clip_norm") grad_clip_norm = parse_number<double>(key, value);
    else if (key == "plateau_window") plateau_window = parse_number<int>(key, value);
    else if (key == "plateau_rel_tol") plateau_rel_tol = parse_number<double>(key, value);
    else if (key == "density_interval_min") density_interval_min = parse_number<int>(key, value);
    else if (key == "r_threshold") r_threshold = parse_number<double>(key, value);
    else if (key == "coverage_gap_tol") coverage_gap_tol = parse_number<double>(key, value);
    else if (key == "max_density_events") max_density_events = parse_number<int>(key, value);
    else if (key == "loss_stop_rel_tol") loss_stop_rel_tol = parse_number<double>(key, value);
    else if (key == "radius_sigma") radius_sigma = parse_number<double>(key, value);
    else if (key == "interior_samples") interior_samples = parse_number<std::size_t>(key, value);
    else if (key == "surface_samples") surface_samples = parse_number<std::size_t>(key, value);
    else if (key == "deterministic") deterministic = parse_bool(key, value);
    else if (key == "sqem_closest") {
      if (value == "signed") loss.sqem_closest = SqemClosest::SignedDistance;
      else if (value == "center") loss.sqem_closest = SqemClosest::CenterDistance;
      else throw InvalidArgument("config key 'sqem_closest': expected signed or center");
    } else {
      throw InvalidArgument("unknown config key '" + key + "'");
    }
  }
}

std::vector<std::pair<std::string, std::string>> OptimizerConfig::to_key_values() const {
  return {
      {"lr_center", format_double(lr_center)},
      {"lr_radius", format_double(lr_radius)},
      {"beta1", format_double(beta1)},
      {"beta2", format_double(beta2)},
      {"eps_adam", format_double(eps_adam)},
      {"max_iters", std::to_string(max_iters)},
      {"grad_clip_norm", format_double(grad_clip_norm)},
      {"plateau_window", std::to_string(plateau_window)},
      {"plateau_rel_tol", format_double(plateau_rel_tol)},
      {"density_interval_min", std::to_string(density_interval_min)},
      {"r_threshold", format_double(r_threshold)},
      {"coverage_gap_tol", format_double(coverage_gap_tol)},
      {"max_density_events", std::to_string(max_density_events)},
      {"loss_stop_rel_tol", format_double(loss_stop_rel_tol)},
      {"radius_sigma", format_double(radius_sigma)},
      {"interior_samples", std::to_string(interior_samples)},
      {"surface_samples", std::to_string(surface_samples)},
      {"deterministic", deterministic ? "true" : "false"},
      {"sqem_closest", loss.sqem_closest == SqemClosest::SignedDistance ? "signed" : "center"},
  };
}

std::map<std::string, std::string> parse_key_value_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key or value");
    }
    out[std::string(key)] = std::string(value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

SphereSet initialize(const TriangleMesh& mesh, const SampleSet& samples, std::size_t n,
                     std::uint64_t seed, double radius_sigma) {
  if (n == 0) throw InvalidArgument("sphere count must be at least 1");
  if (samples.interior_points.empty()) throw InsufficientInterior("no interior samples to place centers");

  Rng rng(derive_seed(seed, "initialize"));
  const auto& pool = samples.interior_points;
  std::vector<Vec3> centers;
  centers.reserve(n);
  {
    // Partial Fisher-Yates: the first min(n, pool) entries are a uniform draw
    // without replacement.
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(n, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(idx[i], idx[j]);
      centers.push_back(pool[idx[i]]);
    }
  }
  if (centers.size() < n) {
    for (const Vec3& p : sample_interior(mesh, n - centers.size(), derive_seed(seed, "initialize-extra"))) {
      centers.push_back(p);
    }
  }

  const double median = mean_radius(mesh.volume(), n);
  std::vector<double> radii(n);
  double volume = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    radii[i] = median * std::exp(radius_sigma * rng.normal());
    volume += 4.0 / 3.0 * std::numbers::pi * radii[i] * radii[i] * radii[i];
  }
  const double factor = std::cbrt(mesh.volume() / volume);

  SphereSet set;
  set.mesh_id = mesh.mesh_id();
  set.seed = seed;
  set.generator = Generator::MorphIt;
  set.spheres.reserve(n);
  for (std::size_t i = 0; i < n; ++i) set.spheres.push_back({centers[i], radii[i] * factor});
  return set;
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(std::vector<Sphere>& spheres, const LossGradient& gradient, AdamState& state,
               const OptimizerConfig& config) {
  const std::size_t n = spheres.size();
  if (gradient.d_center.size() != n || gradient.d_radius.size() != n || state.spheres.size() != n) {
    throw InvalidArgument("gradient/state size does not match the sphere count");
  }
  const double norm = std::sqrt(gradient.squared_norm());
  const double clip = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;
  const double b1 = config.beta1, b2 = config.beta2;
  const double floor = 0.5 * config.r_threshold;

  for (std::size_t i = 0; i < n; ++i) {
    auto& m = state.spheres[i];
    ++m.steps;
    const double c1 = 1.0 - std::pow(b1, m.steps);
    const double c2 = 1.0 - std::pow(b2, m.steps);

    const Vec3 gc = clip * gradient.d_center[i];
    m.m_center = b1 * m.m_center + (1.0 - b1) * gc;
    m.v_center = b2 * m.v_center + (1.0 - b2) * gc.cwiseProduct(gc);
    const Vec3 m_hat = m.m_center / c1;
    const Vec3 v_hat = m.v_center / c2;
    spheres[i].center -= config.lr_center *
                         m_hat.cwiseQuotient((v_hat.array().sqrt() + config.eps_adam).matrix());

    const double gr = clip * gradient.d_radius[i];
    m.m_radius = b1 * m.m_radius + (1.0 - b1) * gr;
    m.v_radius = b2 * m.v_radius + (1.0 - b2) * gr * gr;
    const double step = (m.m_radius / c1) / (std::sqrt(m.v_radius / c2) + config.eps_adam);
    spheres[i].radius = std::max(floor, spheres[i].radius - config.lr_radius * step);
  }
}

// ---------------------------------------------------------------------------
// Density control

DensityResult density_control(const TriangleMesh& mesh, const SampleSet& samples,
                              std::span<const Sphere> spheres, std::size_t target_n,
                              const OptimizerConfig& config) {
  DensityResult out;
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const Sphere& s = spheres[i];
    if (s.radius >= config.r_threshold && contains_point_or_outside(mesh, s.center)) {
      out.spheres.push_back(s);
      out.kept.push_back(i);
    } else {
      ++out.pruned;
    }
  }

  const auto& interior = samples.interior_points;
  std::vector<double> gap(interior.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < interior.size(); ++k) {
    for (const Sphere& s : out.spheres) gap[k] = std::min(gap[k], signed_distance(interior[k], s));
  }

  const double r_cap = mean_radius(mesh.volume(), target_n);
  while (out.spheres.size() < target_n) {
    std::size_t worst = interior.size();
    double worst_gap = config.coverage_gap_tol;
    for (std::size_t k = 0; k < interior.size(); ++k) {
      if (gap[k] > worst_gap) {
        worst_gap = gap[k];
        worst = k;
      }
    }
    if (worst == interior.size()) break;

    const Vec3& p = interior[worst];
    double to_surface = std::numeric_limits<double>::infinity();
    for (const Vec3& q : samples.surface_points) to_surface = std::min(to_surface, (q - p).norm());
    const Sphere added{p, std::max(config.r_threshold, std::min(to_surface, r_cap))};
    out.spheres.push_back(added);
    ++out.added;
    for (std::size_t k = 0; k < interior.size(); ++k) {
      gap[k] = std::min(gap[k], signed_distance(interior[k], added));
    }
  }

  if (out.spheres.empty()) {
    throw AllPruned("density control pruned all " + std::to_string(spheres.size()) +
                    " spheres and found no uncovered interior sample to re-seed");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Packing loop

namespace {

// (L[t - window] - L[t]) / |L[t - window]|; positive when the loss fell.
double relative_decrease(const std::vector<LossBreakdown>& history, int window) {
  const double before = history[history.size() - 1 - static_cast<std::size_t>(window)].total;
  const double now = history.back().total;
  const double denom = std::max(std::abs(before), std::numeric_limits<double>::min());
  return (before - now) / denom;
}

}  // namespace

PackResult pack(const TriangleMesh& mesh, const SampleSet& samples, std::size_t n,
                const WeightConfig& weights, const OptimizerConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  weights.validate();

  SphereSet set = initialize(mesh, samples, n, seed, config.radius_sigma);
  std::vector<Sphere> spheres = set.spheres;
  AdamState state(spheres.size());

  PackResult result;
  result.history.reserve(static_cast<std::size_t>(config.max_iters));
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Sphere> best = spheres;
  int last_event = 0;
  const auto window = static_cast<std::size_t>(config.plateau_window);

  for (int it = 0; it < config.max_iters; ++it) {
    auto [losses, grad] = evaluate_gradients(samples, spheres, weights, config.loss);
    result.history.push_back(losses);
    if (losses.total < best_loss) {
      best_loss = losses.total;
      best = spheres;
      result.best_iteration = static_cast<std::size_t>(it);
    }

    if (result.history.size() > window) {
      const double decrease = relative_decrease(result.history, config.plateau_window);
      const int events = static_cast<int>(result.density_events.size());
      if (events < config.max_density_events && decrease < config.plateau_rel_tol &&
          it - last_event >= config.density_interval_min) {
        DensityResult dc = density_control(mesh, samples, spheres, n, config);
        AdamState next(dc.spheres.size());
        for (std::size_t k = 0; k < dc.kept.size(); ++k) next.spheres[k] = state.spheres[dc.kept[k]];
        state = std::move(next);
        spheres = std::move(dc.spheres);
        result.density_events.push_back({it, dc.pruned, dc.added});
        last_event = it;
        continue;  // the gradient belongs to the previous set
      }
      if (events >= config.max_density_events && std::abs(decrease) < config.loss_stop_rel_tol) break;
    }

    adam_step(spheres, grad, state, config);
  }

  set.spheres = std::move(best);
  result.set = std::move(set);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

PackResult pack(const TriangleMesh& mesh, std::size_t n, const WeightConfig& weights,
                const OptimizerConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const SampleSet samples = make_sample_set(mesh, config.interior_samples, config.surface_samples, seed);
  PackResult result = pack(mesh, samples, n, weights, config, seed);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace spherepack
