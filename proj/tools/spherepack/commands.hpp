#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spherepack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFlags = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitOptimize = 4;

// Flags shared by the commands that pack.
struct PackSettings {
  std::string config_file;
  bool deterministic = false;
  double scale = 1.0;
  std::optional<std::size_t> interior_samples;
  std::optional<std::size_t> surface_samples;
  std::size_t volume_samples = 0;
  std::size_t metric_surface_samples = 0;
};

struct PackOptions {
  std::string mesh;
  std::size_t spheres = 0;
  std::string preset;
  std::string weights_file;
  std::string algo = "morphit";
  std::uint64_t seed = 0;
  std::string out;
  std::string urdf;
  std::string link;
  PackSettings settings;
};

struct EvalOptions {
  std::string mesh;
  std::string spheres_file;
  std::size_t volume_samples = 0;
  std::size_t surface_samples = 0;
  std::uint64_t seed = 0;
  double scale = 1.0;
  bool force = false;
  std::string manifest;
};

struct CompareOptions {
  std::string mesh;
  std::vector<std::size_t> spheres;
  std::vector<std::string> algos;
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool allow_large = false;
  PackSettings settings;
};

struct ExportUrdfOptions {
  std::string urdf;
  std::string map;
  std::string out;
};

struct VizOptions {
  std::string spheres_file;
  int subdivisions = 2;
  std::string out;
};

// Raised for flag combinations CLI11 cannot check on its own.
struct FlagError {
  std::string flag;
  std::string message;
};

int run_pack(const PackOptions& opts, const std::vector<std::string>& argv);
int run_eval(const EvalOptions& opts, const std::vector<std::string>& argv);
int run_compare(const CompareOptions& opts, const std::vector<std::string>& argv);
int run_export_urdf(const ExportUrdfOptions& opts, const std::vector<std::string>& argv);
int run_viz(const VizOptions& opts, const std::vector<std::string>& argv);

// Single-line "ERROR:<code>:<kind>:<message>" record on stderr.
void report_error(int code, const std::string& kind, const std::string& message);
void report_warning(const std::string& kind, const std::string& message);

}  // namespace spherepack::cli
