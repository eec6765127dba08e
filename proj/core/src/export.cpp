#include "spherepack/export.hpp"

#include "spherepack/errors.hpp"
#include "xml.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace spherepack {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json fidelity_object(const FidelityReport& r) {
  ordered_json j;
  j["t_comp"] = r.t_comp;
  j["d_max"] = r.d_max;
  j["d_avg"] = r.d_avg;
  j["r_inside"] = r.r_inside;
  j["r_outside"] = r.r_outside;
  j["r_union"] = r.r_union;
  j["r_inside_se"] = r.r_inside_se;
  j["r_outside_se"] = r.r_outside_se;
  j["r_union_se"] = r.r_union_se;
  j["uncovered_fraction"] = r.uncovered_fraction;
  j["n_volume_samples"] = r.n_volume_samples;
  j["n_surface_samples"] = r.n_surface_samples;
  j["seed"] = r.seed;
  return j;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw SchemaError("field '" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

std::uint64_t require_unsigned(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_unsigned()) {
    throw SchemaError("field '" + std::string(key) + "' in " + where + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw SchemaError("field '" + std::string(key) + "' in " + where + " must be a string");
  return v.get<std::string>();
}

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_json(const SphereSetDocument& doc) {
  doc.set.validate();
  ordered_json j;
  j["schema_version"] = std::string(kSchemaVersion);
  j["mesh_id"] = doc.set.mesh_id;
  j["generator"] = std::string(to_string(doc.set.generator));
  j["seed"] = doc.set.seed;
  if (doc.weights) {
    ordered_json w;
    for (auto key : kWeightKeys) w[std::string(key)] = weight_by_key(*doc.weights, key);
    j["weights"] = std::move(w);
  }
  ordered_json spheres = ordered_json::array();
  for (const Sphere& s : doc.set.spheres) {
    ordered_json e;
    e["center"] = {s.center.x(), s.center.y(), s.center.z()};
    e["radius"] = s.radius;
    spheres.push_back(std::move(e));
  }
  j["spheres"] = std::move(spheres);
  if (doc.fidelity) j["fidelity"] = fidelity_object(*doc.fidelity);
  return j.dump(2) + "\n";
}

std::string fidelity_to_json(const FidelityReport& report) { return fidelity_object(report).dump(2) + "\n"; }

SphereSetDocument parse_document(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  const std::string root = "document";
  const std::string version = require_string(j, "schema_version", root);
  if (version != kSchemaVersion) throw SchemaError("unsupported schema_version '" + version + "'");

  SphereSetDocument doc;
  doc.set.mesh_id = require_string(j, "mesh_id", root);
  doc.set.generator = generator_from_string(require_string(j, "generator", root));
  doc.set.seed = require_unsigned(j, "seed", root);

  const auto& spheres = require(j, "spheres", root);
  if (!spheres.is_array() || spheres.empty()) throw SchemaError("'spheres' must be a non-empty array");
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const std::string where = "spheres[" + std::to_string(i) + "]";
    const auto& c = require(spheres[i], "center", where);
    if (!c.is_array() || c.size() != 3 || !std::all_of(c.begin(), c.end(), [](const auto& x) { return x.is_number(); })) {
      throw SchemaError("'center' in " + where + " must be an array of 3 numbers");
    }
    Sphere s{Vec3(c[0].get<double>(), c[1].get<double>(), c[2].get<double>()),
             require_number(spheres[i], "radius", where)};
    if (!s.valid()) throw SchemaError(where + " has a non-positive radius or non-finite center");
    doc.set.spheres.push_back(s);
  }

  if (auto it = j.find("weights"); it != j.end() && !it->is_null()) {
    WeightConfig w;
    for (auto key : kWeightKeys) {
      weight_by_key(w, key) = require_number(*it, std::string(key).c_str(), "weights");
    }
    doc.weights = w;
  }
  if (auto it = j.find("fidelity"); it != j.end() && !it->is_null()) {
    const std::string where = "fidelity";
    FidelityReport r;
    r.t_comp = require_number(*it, "t_comp", where);
    r.d_max = require_number(*it, "d_max", where);
    r.d_avg = require_number(*it, "d_avg", where);
    r.r_inside = require_number(*it, "r_inside", where);
    r.r_outside = require_number(*it, "r_outside", where);
    r.r_union = require_number(*it, "r_union", where);
    r.n_volume_samples = require_unsigned(*it, "n_volume_samples", where);
    r.n_surface_samples = require_unsigned(*it, "n_surface_samples", where);
    r.seed = require_unsigned(*it, "seed", where);
    auto optional_number = [&](const char* key) {
      auto f = it->find(key);
      return f != it->end() && f->is_number() ? f->get<double>() : 0.0;
    };
    r.r_inside_se = optional_number("r_inside_se");
    r.r_outside_se = optional_number("r_outside_se");
    r.r_union_se = optional_number("r_union_se");
    r.uncovered_fraction = optional_number("uncovered_fraction");
    doc.fidelity = r;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// URDF

namespace {

// Start of the whitespace run that precedes `pos` on its line, including the
// line break, when nothing but blanks sits between the break and `pos`.
std::size_t line_start_before(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && (text[i - 1] == ' ' || text[i - 1] == '\t')) --i;
  if (i > 0 && text[i - 1] == '\n') {
    --i;
    if (i > 0 && text[i - 1] == '\r') --i;
    return i;
  }
  return pos;
}

std::string indent_of(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && (text[i - 1] == ' ' || text[i - 1] == '\t')) --i;
  if (i == 0 || text[i - 1] == '\n') return std::string(text.substr(i, pos - i));
  return {};
}

std::string collision_xml(const std::string& link, std::size_t k, const Sphere& s) {
  return "<collision name=\"spherepack_" + xml::escape_attribute(link) + "_" + std::to_string(k) +
         "\"><origin xyz=\"" + shortest(s.center.x()) + " " + shortest(s.center.y()) + " " +
         shortest(s.center.z()) + "\" rpy=\"0 0 0\"/><geometry><sphere radius=\"" + shortest(s.radius) +
         "\"/></geometry></collision>";
}

struct Edit {
  std::size_t begin, end;
  std::string text;
};

const xml::Element* find_link(const xml::Element& root, std::string_view name) {
  for (const xml::Element* link : root.children_named("link")) {
    const std::string* n = link->attribute("name");
    if (n && *n == name) return link;
  }
  return nullptr;
}

xml::Element parse_robot(std::string_view urdf) {
  xml::Element root = xml::parse(urdf);
  if (root.name != "robot") throw XmlError("root element is <" + root.name + ">, expected <robot>");
  return root;
}

Vec3 parse_triplet(const std::string* attr, const Vec3& fallback, const char* what) {
  if (!attr) return fallback;
  std::istringstream in(*attr);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z())) throw XmlError(std::string("malformed ") + what + " '" + *attr + "'");
  return v;
}

}  // namespace

std::string rewrite_urdf(std::string_view urdf, const std::map<std::string, SphereSet>& link_sets) {
  const xml::Element root = parse_robot(urdf);
  std::vector<Edit> edits;
  for (const auto& [name, set] : link_sets) {
    set.validate();
    const xml::Element* link = find_link(root, name);
    if (!link) throw LinkNotFound("link '" + name + "' not found in URDF");

    const auto collisions = link->children_named("collision");
    const std::string link_indent = indent_of(urdf, link->begin);
    std::string child_indent;
    if (!collisions.empty()) child_indent = indent_of(urdf, collisions.front()->begin);
    else if (!link->children.empty()) child_indent = indent_of(urdf, link->children.front().begin);
    else child_indent = link_indent + "  ";

    std::string block;
    for (std::size_t k = 0; k < set.spheres.size(); ++k) {
      block += "\n" + child_indent + collision_xml(name, k, set.spheres[k]);
    }

    if (link->self_closing) {
      std::string_view tag = urdf.substr(link->begin, link->end - link->begin);
      tag = tag.substr(0, tag.rfind('/'));
      while (!tag.empty() && (tag.back() == ' ' || tag.back() == '\t')) tag.remove_suffix(1);
      edits.push_back({link->begin, link->end, std::string(tag) + ">" + block + "\n" + link_indent + "</link>"});
    } else if (!collisions.empty()) {
      for (std::size_t c = 0; c < collisions.size(); ++c) {
        edits.push_back({line_start_before(urdf, collisions[c]->begin), collisions[c]->end,
                         c == 0 ? block : std::string()});
      }
    } else {
      const std::size_t at = line_start_before(urdf, link->content_end);
      edits.push_back({at, at, block});
    }
  }

  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin > b.begin; });
  std::string out(urdf);
  for (const Edit& e : edits) out.replace(e.begin, e.end - e.begin, e.text);
  return out;
}

Eigen::Isometry3d urdf_pose(const Vec3& xyz, const Vec3& rpy) {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.translate(xyz);
  pose.rotate(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
              Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()));
  return pose;
}

CollisionMeshRef find_collision_mesh(std::string_view urdf, std::string_view link_name) {
  const xml::Element root = parse_robot(urdf);
  const xml::Element* link = find_link(root, link_name);
  if (!link) throw LinkNotFound("link '" + std::string(link_name) + "' not found in URDF");
  const auto collisions = link->children_named("collision");
  CollisionMeshRef ref;
  ref.collision_count = collisions.size();
  for (const xml::Element* c : collisions) {
    const xml::Element* geometry = c->first_child("geometry");
    const xml::Element* mesh = geometry ? geometry->first_child("mesh") : nullptr;
    if (!mesh) continue;
    const std::string* filename = mesh->attribute("filename");
    if (!filename) throw XmlError("mesh collision of link '" + std::string(link_name) + "' has no filename");
    ref.filename = *filename;
    const Vec3 scale = parse_triplet(mesh->attribute("scale"), Vec3::Ones(), "mesh scale");
    if (scale.x() != scale.y() || scale.y() != scale.z()) {
      throw XmlError("non-uniform mesh scale on link '" + std::string(link_name) + "' is not supported");
    }
    ref.scale = scale.x();
    if (const xml::Element* origin = c->first_child("origin")) {
      ref.origin = urdf_pose(parse_triplet(origin->attribute("xyz"), Vec3::Zero(), "origin xyz"),
                             parse_triplet(origin->attribute("rpy"), Vec3::Zero(), "origin rpy"));
    }
    return ref;
  }
  throw XmlError("link '" + std::string(link_name) + "' has no mesh collision geometry");
}

// ---------------------------------------------------------------------------
// OBJ visualization

std::string to_obj_viz(const SphereSet& set, int subdivisions) {
  if (subdivisions < 0 || subdivisions > 4) throw InvalidArgument("subdivisions must lie in [0, 4]");
  set.validate();
  std::vector<Vec3> unit;
  std::vector<Face> faces;
  make_icosphere(subdivisions, 1.0, unit, faces);
  std::string out;
  char line[160];
  std::size_t offset = 1;
  for (std::size_t k = 0; k < set.spheres.size(); ++k) {
    const Sphere& s = set.spheres[k];
    out += "o sphere_" + std::to_string(k) + "\n";
    for (const Vec3& u : unit) {
      const Vec3 p = s.center + s.radius * u;
      std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
      out += line;
    }
    for (const Face& f : faces) {
      std::snprintf(line, sizeof line, "f %zu %zu %zu\n", f[0] + offset, f[1] + offset, f[2] + offset);
      out += line;
    }
    offset += unit.size();
  }
  return out;
}

}  // namespace spherepack
