#include "commands.hpp"

#include "spherepack/errors.hpp"
#include "spherepack/export.hpp"
#include "spherepack/geometry.hpp"
#include "spherepack/metrics.hpp"
#include "spherepack/optimizer.hpp"
#include "spherepack/vssa.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#ifndef SPHEREPACK_VERSION
#define SPHEREPACK_VERSION "unknown"
#endif

namespace spherepack::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class InputError : public Error {
 public:
  explicit InputError(const std::string& message) : Error("InputError", message) {}
};

class MeshMismatch : public Error {
 public:
  explicit MeshMismatch(const std::string& message) : Error("MeshMismatch", message) {}
};

int exit_code_for(const Error& e) {
  static const std::set<std::string> input_kinds = {
      "ParseError", "DegenerateMesh", "SchemaError",  "LinkNotFound", "XmlError",
      "InputError", "MeshMismatch",   "UnknownPreset", "InvalidArgument"};
  return input_kinds.count(e.kind()) ? kExitInput : kExitOptimize;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path + "'");
}

std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string number(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Accumulates the run manifest written next to every output.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv) {
    doc_["tool"] = "spherepack";
    doc_["version"] = SPHEREPACK_VERSION;
    doc_["command"] = std::move(command);
    doc_["argv"] = argv;
    doc_["started_at"] = utc_now();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  void input(const std::string& path, std::string_view bytes) {
    doc_["inputs"].push_back({{"path", path}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64(bytes)}});
  }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }
  json& operator[](const char* key) { return doc_[key]; }

  void config(const OptimizerConfig& c) {
    json cfg = json::object();
    for (const auto& [k, v] : c.to_key_values()) cfg[k] = v;
    doc_["config"] = cfg;
  }

  void write(const std::string& path) {
    doc_["finished_at"] = utc_now();
    write_text(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
};

void warn_about_mesh(const TriangleMesh& mesh, const std::string& path) {
  if (!mesh.is_watertight()) report_warning("NotWatertight", "mesh '" + path + "' is not watertight; inside tests use ray parity");
  if (mesh.was_reoriented()) report_warning("Reoriented", "mesh '" + path + "' had inward winding and was flipped");
  if (const std::size_t d = mesh.degenerate_face_count()) {
    report_warning("DegenerateFaces", "mesh '" + path + "' has " + std::to_string(d) + " degenerate faces");
  }
}

TriangleMesh load_input_mesh(const std::string& path, double scale, Manifest& manifest) {
  const std::string bytes = read_text(path);
  manifest.input(path, bytes);
  TriangleMesh mesh = load_mesh(fs::path(path), scale);
  warn_about_mesh(mesh, path);
  return mesh;
}

OptimizerConfig make_config(const TriangleMesh& mesh, const PackSettings& s, Manifest& manifest) {
  OptimizerConfig c = OptimizerConfig::defaults_for(mesh);
  if (!s.config_file.empty()) {
    const std::string text = read_text(s.config_file);
    manifest.input(s.config_file, text);
    c.apply(parse_key_value_config(text));
  }
  if (s.interior_samples) c.interior_samples = *s.interior_samples;
  if (s.surface_samples) c.surface_samples = *s.surface_samples;
  if (s.deterministic) c.deterministic = true;
  c.validate();
  return c;
}

// --preset alone, --weights alone (all six keys), or a preset with per-key
// overrides from the file.
std::optional<WeightConfig> resolve_weights(const std::string& preset_name, const std::string& weights_file,
                                            Manifest& manifest) {
  if (preset_name.empty() && weights_file.empty()) return std::nullopt;
  WeightConfig w = preset_name.empty() ? WeightConfig{} : preset(preset_name);
  if (!weights_file.empty()) {
    const std::string text = read_text(weights_file);
    manifest.input(weights_file, text);
    const auto kv = parse_key_value_config(text);
    if (preset_name.empty()) {
      for (std::string_view key : kWeightKeys) {
        if (!kv.count(std::string(key))) {
          throw InvalidArgument("weights file '" + weights_file + "' lacks '" + std::string(key) + "'");
        }
      }
    }
    for (const auto& [key, value] : kv) {
      double x = 0.0;
      const auto r = std::from_chars(value.data(), value.data() + value.size(), x);
      if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
        throw InvalidArgument("weights file '" + weights_file + "': bad value for '" + key + "'");
      }
      weight_by_key(w, key) = x;
    }
  }
  w.validate();
  return w;
}

struct Packed {
  SphereSet set;
  double wall = 0.0;
};

Packed run_algorithm(const TriangleMesh& mesh, std::size_t n, const std::string& algo,
                     const std::optional<WeightConfig>& weights, const OptimizerConfig& config,
                     std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Packed out;
  if (algo == "vssa") {
    const SampleSet samples = make_sample_set(mesh, config.interior_samples, config.surface_samples, seed);
    VssaConfig vc;
    vc.n_spheres = n;
    vc.seed = seed;
    out.set = vssa_pack(mesh, samples, vc);
  } else {
    out.set = pack(mesh, n, *weights, config, seed).set;
  }
  out.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::size_t volume_samples_or_default(std::size_t n) { return n ? n : kDefaultVolumeSamples; }
std::size_t surface_samples_or_default(std::size_t n) { return n ? n : kDefaultMetricSurfaceSamples; }

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const FlagError& e) {
    report_error(kExitFlags, "flag", e.flag + ": " + e.message);
    return kExitFlags;
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    report_error(code, e.kind(), e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(kExitOptimize, "Internal", e.what());
    return kExitOptimize;
  }
}

}  // namespace

void report_error(int code, const std::string& kind, const std::string& message) {
  std::cerr << "ERROR:" << code << ':' << kind << ':' << one_line(message) << std::endl;
}

void report_warning(const std::string& kind, const std::string& message) {
  std::cerr << "WARN:" << kind << ':' << one_line(message) << std::endl;
}

int run_pack(const PackOptions& o, const std::vector<std::string>& argv) {
  return guarded([&] {
    if (o.algo == "vssa" && (!o.preset.empty() || !o.weights_file.empty())) {
      throw FlagError{o.preset.empty() ? "--weights" : "--preset", "not used by --algo vssa"};
    }
    if (o.algo == "morphit" && o.preset.empty() && o.weights_file.empty()) {
      throw FlagError{"--preset", "--algo morphit needs --preset or --weights"};
    }
    if (o.urdf.empty() != o.link.empty()) throw FlagError{"--link", "--urdf and --link go together"};

    Manifest manifest("pack", argv);
    double scale = o.settings.scale;
    Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
    if (!o.urdf.empty()) {
      const std::string text = read_text(o.urdf);
      manifest.input(o.urdf, text);
      const CollisionMeshRef ref = find_collision_mesh(text, o.link);
      if (ref.collision_count > 1) {
        report_warning("MultipleCollisions", "link '" + o.link + "' has " + std::to_string(ref.collision_count) +
                                                 " collisions; packing the first mesh ('" + ref.filename + "')");
      }
      scale *= ref.scale;
      origin = ref.origin;
    }
    TriangleMesh mesh = load_input_mesh(o.mesh, scale, manifest);
    if (!o.urdf.empty()) mesh = mesh.transformed(origin);

    const OptimizerConfig config = make_config(mesh, o.settings, manifest);
    const auto weights = resolve_weights(o.preset, o.weights_file, manifest);

    const Packed packed = run_algorithm(mesh, o.spheres, o.algo, weights, config, o.seed);
    SphereSetDocument doc;
    doc.set = packed.set;
    if (o.algo != "vssa") doc.weights = weights;
    doc.fidelity = fidelity(mesh, packed.set, packed.wall, volume_samples_or_default(o.settings.volume_samples),
                            surface_samples_or_default(o.settings.metric_surface_samples), o.seed);
    write_text(o.out, to_json(doc));

    manifest["algo"] = o.algo;
    manifest["seeds"] = {{"pack", o.seed}, {"metrics", o.seed}};
    manifest["deterministic"] = config.deterministic;
    manifest["mesh_id"] = mesh.mesh_id();
    manifest.config(config);
    manifest.output(o.out);
    manifest.write(o.out + ".manifest.json");
    return kExitOk;
  });
}

int run_eval(const EvalOptions& o, const std::vector<std::string>& argv) {
  return guarded([&] {
    Manifest manifest("eval", argv);
    const TriangleMesh mesh = load_input_mesh(o.mesh, o.scale, manifest);
    const std::string text = read_text(o.spheres_file);
    manifest.input(o.spheres_file, text);
    const SphereSetDocument doc = parse_document(text);
    if (doc.set.mesh_id != mesh.mesh_id()) {
      const std::string msg = "sphere set was built for mesh " + doc.set.mesh_id + ", '" + o.mesh + "' is " +
                              mesh.mesh_id();
      if (!o.force) throw MeshMismatch(msg + " (use --force to evaluate anyway)");
      report_warning("MeshMismatch", msg);
    }
    const double t_comp = doc.fidelity ? doc.fidelity->t_comp : 0.0;
    const FidelityReport report = fidelity(mesh, doc.set, t_comp, volume_samples_or_default(o.volume_samples),
                                           surface_samples_or_default(o.surface_samples), o.seed);
    std::cout << fidelity_to_json(report) << std::endl;

    manifest["seeds"] = {{"metrics", o.seed}};
    manifest["mesh_id"] = mesh.mesh_id();
    manifest.write(o.manifest.empty() ? o.spheres_file + ".eval.manifest.json" : o.manifest);
    return kExitOk;
  });
}

int run_compare(const CompareOptions& o, const std::vector<std::string>& argv) {
  return guarded([&] {
    static const std::set<std::string> known = {"morphit-V", "morphit-S", "morphit-B", "vssa"};
    for (const std::string& a : o.algos) {
      if (!known.count(a)) throw FlagError{"--algos", "unknown algorithm '" + a + "' (morphit-V|S|B, vssa)"};
    }
    for (std::size_t n : o.spheres) {
      if (n == 0) throw FlagError{"--spheres", "sphere counts must be positive"};
      if (n > 100 && !o.allow_large) {
        throw FlagError{"--spheres", std::to_string(n) + " exceeds 100 spheres; pass --allow-large"};
      }
    }

    Manifest manifest("compare", argv);
    const TriangleMesh mesh = load_input_mesh(o.mesh, o.settings.scale, manifest);
    const OptimizerConfig config = make_config(mesh, o.settings, manifest);

    using Cell = std::tuple<std::string, std::size_t, std::uint64_t>;
    std::set<Cell> unique;
    for (const auto& a : o.algos)
      for (std::size_t n : o.spheres)
        for (std::uint64_t s : o.seeds) unique.emplace(a, n, s);
    const std::vector<Cell> cells(unique.begin(), unique.end());
    std::vector<std::string> rows(cells.size());

    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPHEREPACK_THREADS")) {
      std::size_t cap = 0;
      const std::string_view v(env);
      const auto r = std::from_chars(v.data(), v.data() + v.size(), cap);
      if (r.ec != std::errc() || cap == 0) throw FlagError{"SPHEREPACK_THREADS", "must be a positive integer"};
      workers = std::min(workers, cap);
    }
    workers = std::min(workers, cells.size());

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> succeeded{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        const auto& [algo, n, seed] = cells[i];
        std::string row = algo + "," + std::to_string(n) + "," + std::to_string(seed) + ",";
        try {
          std::optional<WeightConfig> w;
          if (algo != "vssa") w = preset(algo.substr(algo.size() - 1));
          const Packed p = run_algorithm(mesh, n, algo, w, config, seed);
          const FidelityReport f =
              fidelity(mesh, p.set, p.wall, volume_samples_or_default(o.settings.volume_samples),
                       surface_samples_or_default(o.settings.metric_surface_samples), seed);
          row += number(f.t_comp) + "," + number(f.d_max) + "," + number(f.d_avg) + "," + number(f.r_inside) + "," +
                 number(f.r_outside) + "," + number(f.r_union) + ",";
          ++succeeded;
        } catch (const std::exception& e) {
          const auto* err = dynamic_cast<const Error*>(&e);
          std::string msg = (err ? err->kind() + ": " : std::string()) + one_line(e.what());
          std::string quoted = "\"";
          for (char c : msg) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
          row += ",,,,,," + quoted + "\"";
        }
        rows[i] = std::move(row);
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::string csv = "algo,n_spheres,seed,t_comp,d_max,d_avg,r_inside,r_outside,r_union,error\n";
    for (const auto& r : rows) csv += r + "\n";
    write_text(o.out, csv);

    manifest["seeds"] = o.seeds;
    manifest["algos"] = o.algos;
    manifest["sphere_counts"] = o.spheres;
    manifest["workers"] = workers;
    manifest["deterministic"] = config.deterministic;
    manifest["mesh_id"] = mesh.mesh_id();
    manifest.config(config);
    manifest.output(o.out);
    manifest.write(o.out + ".manifest.json");

    if (succeeded == 0) {
      report_error(kExitOptimize, "AllRowsFailed", "no compare cell succeeded; see the error column of " + o.out);
      return kExitOptimize;
    }
    return kExitOk;
  });
}

int run_export_urdf(const ExportUrdfOptions& o, const std::vector<std::string>& argv) {
  return guarded([&] {
    std::vector<std::pair<std::string, std::string>> entries;
    std::stringstream ss(o.map);
    for (std::string item; std::getline(ss, item, ',');) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
        throw FlagError{"--map", "expected link=spheres.json, got '" + item + "'"};
      }
      entries.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    if (entries.empty()) throw FlagError{"--map", "no link=file entries"};

    Manifest manifest("export-urdf", argv);
    const std::string urdf = read_text(o.urdf);
    manifest.input(o.urdf, urdf);
    std::map<std::string, SphereSet> sets;
    for (const auto& [link, path] : entries) {
      const std::string text = read_text(path);
      manifest.input(path, text);
      if (!sets.emplace(link, from_json(text)).second) throw FlagError{"--map", "link '" + link + "' mapped twice"};
    }
    write_text(o.out, rewrite_urdf(urdf, sets));
    manifest.output(o.out);
    manifest.write(o.out + ".manifest.json");
    return kExitOk;
  });
}

int run_viz(const VizOptions& o, const std::vector<std::string>& argv) {
  return guarded([&] {
    Manifest manifest("viz", argv);
    const std::string text = read_text(o.spheres_file);
    manifest.input(o.spheres_file, text);
    write_text(o.out, to_obj_viz(from_json(text), o.subdivisions));
    manifest.output(o.out);
    manifest.write(o.out + ".manifest.json");
    return kExitOk;
  });
}

}  // namespace spherepack::cli
