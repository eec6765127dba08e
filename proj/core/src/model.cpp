#include "spherepack/model.hpp"

#include "spherepack/errors.hpp"

#include <cmath>
#include <numbers>

namespace spherepack {

double Sphere::volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::MorphIt:
      return "MORPHIT";
    case Generator::Vssa:
      return "VSSA";
    case Generator::Manual:
      return "MANUAL";
  }
  return "MANUAL";
}

Generator generator_from_string(std::string_view s) {
  if (s == "MORPHIT") return Generator::MorphIt;
  if (s == "VSSA") return Generator::Vssa;
  if (s == "MANUAL") return Generator::Manual;
  throw SchemaError("unknown generator '" + std::string(s) + "'");
}

void SphereSet::validate() const {
  if (spheres.empty()) throw InvalidArgument("sphere set is empty");
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    if (!spheres[i].valid()) {
      throw InvalidArgument("sphere " + std::to_string(i) + " has a non-finite center or non-positive radius");
    }
  }
}

double SphereSet::total_volume() const {
  double v = 0.0;
  for (const Sphere& s : spheres) v += s.volume();
  return v;
}

void WeightConfig::validate() const {
  const double w[6] = {coverage, overlap, boundary, surface, containment, sqem};
  bool any_positive = false;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) throw InvalidArgument("loss weights must be finite and non-negative");
    any_positive |= x > 0.0;
  }
  if (!any_positive) throw InvalidArgument("at least one loss weight must be positive");
}

WeightConfig WeightConfig::scaled(double factor) const {
  return {coverage * factor, overlap * factor,     boundary * factor,
          surface * factor,  containment * factor, sqem * factor};
}

WeightConfig preset(std::string_view name) {
  if (name == "V") return {.coverage = 4e3, .overlap = 1e-1, .boundary = 1e1, .surface = 1e-1, .containment = 5e1, .sqem = 1e2};
  if (name == "S") return {.coverage = 1e-2, .overlap = 1e-2, .boundary = 5e3, .surface = 1e2, .containment = 1.0, .sqem = 1e3};
  if (name == "B") return {.coverage = 1e2, .overlap = 1.0, .boundary = 5.0, .surface = 5.0, .containment = 5.0, .sqem = 8e2};
  throw UnknownPreset("unknown weight preset '" + std::string(name) + "' (expected V, S or B)");
}

double& weight_by_key(WeightConfig& w, std::string_view key) {
  if (key == "w_c") return w.coverage;
  if (key == "w_o") return w.overlap;
  if (key == "w_b") return w.boundary;
  if (key == "w_s") return w.surface;
  if (key == "w_t") return w.containment;
  if (key == "w_q") return w.sqem;
  throw InvalidArgument("unknown weight key '" + std::string(key) + "'");
}

double weight_by_key(const WeightConfig& w, std::string_view key) {
  return weight_by_key(const_cast<WeightConfig&>(w), key);
}

double mean_radius(double volume, std::size_t n) {
  return std::cbrt(3.0 * volume / (4.0 * static_cast<double>(n) * std::numbers::pi));
}

}  // namespace spherepack
