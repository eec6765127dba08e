#include "spherepack/errors.hpp"
#include "spherepack/geometry.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace spherepack {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits on runs of blanks.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line_no) {
  double value = 0.0;
  // from_chars rejects a leading '+', which some exporters emit.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid number '" + std::string(tok) + "'");
  }
  return value;
}

long parse_long(std::string_view tok, std::size_t line_no) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid index '" + std::string(tok) + "'");
  }
  return value;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(text.substr(pos, end - pos), line_no);
    pos = end + 1;
  }
}

TriangleMesh parse_obj(std::string_view text, double scale) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    auto line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) return;
    const auto tok = tokens(line);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError("line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                            parse_double(tok[3], line_no));
      vertices.back() *= scale;
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw ParseError("line " + std::to_string(line_no) + ": face needs 3 vertices");
      std::vector<std::uint32_t> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const auto slash = tok[k].find('/');
        long idx = parse_long(tok[k].substr(0, slash), line_no);
        const long nv = static_cast<long>(vertices.size());
        if (idx < 0) idx = nv + idx + 1;  // relative reference
        if (idx < 1 || idx > nv) {
          throw ParseError("line " + std::to_string(line_no) + ": face index " +
                           std::string(tok[k].substr(0, slash)) + " out of range (" +
                           std::to_string(nv) + " vertices defined)");
        }
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
    // vn, vt, o, g, s, usemtl, mtllib: ignored.
  });
  if (faces.size() < 4) throw DegenerateMesh("OBJ has " + std::to_string(faces.size()) + " faces; need at least 4");
  return TriangleMesh(std::move(vertices), std::move(faces));
}

// STL carries unshared corners; weld exact duplicates so the watertightness
// check sees shared edges.
class Welder {
 public:
  std::uint32_t add(const Vec3& v) {
    const std::array<double, 3> key{v.x(), v.y(), v.z()};
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(vertices_.size()));
    if (inserted) vertices_.push_back(v);
    return it->second;
  }
  std::vector<Vec3> take() { return std::move(vertices_); }

 private:
  std::map<std::array<double, 3>, std::uint32_t> index_;
  std::vector<Vec3> vertices_;
};

TriangleMesh parse_stl_binary(std::string_view bytes, double scale) {
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  Welder welder;
  std::vector<Face> faces;
  faces.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* rec = bytes.data() + 84 + 50 * std::size_t{i};
    Face f{};
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 + 12 * k, 12);
      f[k] = welder.add(scale * Vec3(xyz[0], xyz[1], xyz[2]));
    }
    faces.push_back(f);
  }
  if (faces.size() < 4) throw DegenerateMesh("STL has " + std::to_string(faces.size()) + " facets; need at least 4");
  return TriangleMesh(welder.take(), std::move(faces));
}

TriangleMesh parse_stl_ascii(std::string_view text, double scale) {
  Welder welder;
  std::vector<Face> faces;
  std::vector<std::uint32_t> corners;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto tok = tokens(trim(raw));
    if (tok.empty()) return;
    if (tok[0] == "vertex") {
      if (tok.size() < 4) throw ParseError("line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      corners.push_back(welder.add(scale * Vec3(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                                parse_double(tok[3], line_no))));
    } else if (tok[0] == "endloop") {
      if (corners.size() < 3) throw ParseError("line " + std::to_string(line_no) + ": facet with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) faces.push_back({corners[0], corners[k], corners[k + 1]});
      corners.clear();
    } else if (tok[0] != "solid" && tok[0] != "facet" && tok[0] != "outer" && tok[0] != "endfacet" &&
               tok[0] != "endsolid") {
      throw ParseError("line " + std::to_string(line_no) + ": unexpected token '" + std::string(tok[0]) + "'");
    }
  });
  if (faces.size() < 4) throw DegenerateMesh("STL has " + std::to_string(faces.size()) + " facets; need at least 4");
  return TriangleMesh(welder.take(), std::move(faces));
}

}  // namespace

TriangleMesh load_mesh(std::string_view bytes, MeshFormat format, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("mesh scale must be positive");
  if (format == MeshFormat::Obj) return parse_obj(bytes, scale);
  if (bytes.size() >= 84) {
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    if (84 + 50 * std::uint64_t{count} == bytes.size()) return parse_stl_binary(bytes, scale);
  }
  if (trim(bytes).substr(0, 5) == "solid") return parse_stl_ascii(bytes, scale);
  throw ParseError("input is neither ASCII STL nor a binary STL of consistent length");
}

MeshFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".stl") return MeshFormat::Stl;
  throw ParseError("unsupported mesh extension '" + ext + "' (expected .obj or .stl)");
}

TriangleMesh load_mesh(const std::filesystem::path& path, double scale) {
  const auto format = format_from_extension(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_mesh(buf.str(), format, scale);
}

std::string write_obj(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  std::string out;
  char line[128];
  for (const Vec3& v : vertices) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += line;
  }
  for (const Face& f : faces) {
    std::snprintf(line, sizeof line, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += line;
  }
  return out;
}

}  // namespace spherepack
