#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "layoutfuse/align.hpp"
#include "layoutfuse/error.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"
#include "layoutfuse/merge.hpp"
#include "layoutfuse/scene.hpp"

namespace layoutfuse {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Atomic file writes: temp file in the target directory, then rename.
// ---------------------------------------------------------------------------

inline void atomic_write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// LFPM raster container: 16-byte magic "LFPM0001" (zero padded), then u32
// height, width, channels, reserved, then row-major 32-bit payload.
// Pointmaps use 4 float channels (x, y, z, valid), confidence and depth one
// float channel, masks one i32 channel. All little-endian.
// ---------------------------------------------------------------------------

inline constexpr char kLfpmMagic[8] = {'L', 'F', 'P', 'M', '0', '0', '0', '1'};

namespace io_detail {

inline std::string lfpm_bytes(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                              const void* payload, std::size_t payload_bytes) {
  std::string bytes;
  bytes.resize(32 + payload_bytes);
  std::memset(bytes.data(), 0, 32);
  std::memcpy(bytes.data(), kLfpmMagic, 8);
  const std::uint32_t reserved = 0;
  std::memcpy(bytes.data() + 16, &height, 4);
  std::memcpy(bytes.data() + 20, &width, 4);
  std::memcpy(bytes.data() + 24, &channels, 4);
  std::memcpy(bytes.data() + 28, &reserved, 4);
  std::memcpy(bytes.data() + 32, payload, payload_bytes);
  return bytes;
}

struct LfpmHeader {
  std::uint32_t height = 0, width = 0, channels = 0;
};

inline std::pair<LfpmHeader, std::string> read_lfpm_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file", path.string(), 0);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 32) throw FormatError("truncated header", path.string(), bytes.size());
  if (std::memcmp(bytes.data(), kLfpmMagic, 8) != 0) {
    throw FormatError("bad magic", path.string(), 0);
  }
  for (int i = 8; i < 16; ++i) {
    if (bytes[i] != 0) throw FormatError("bad magic padding", path.string(), static_cast<std::size_t>(i));
  }
  LfpmHeader h;
  std::memcpy(&h.height, bytes.data() + 16, 4);
  std::memcpy(&h.width, bytes.data() + 20, 4);
  std::memcpy(&h.channels, bytes.data() + 24, 4);
  const std::size_t expect = 32 + 4ull * h.height * h.width * h.channels;
  if (bytes.size() != expect) {
    throw FormatError("payload size mismatch", path.string(), std::min(bytes.size(), expect));
  }
  return {h, std::move(bytes)};
}

}  // namespace io_detail

inline void write_lfpm_f32(const fs::path& path, std::uint32_t height, std::uint32_t width,
                           std::uint32_t channels, const std::vector<float>& data) {
  if (data.size() != static_cast<std::size_t>(height) * width * channels) {
    throw InputError("write_lfpm_f32: payload size mismatch");
  }
  atomic_write_file(path,
                    io_detail::lfpm_bytes(height, width, channels, data.data(), data.size() * 4));
}

inline void write_lfpm_i32(const fs::path& path, std::uint32_t height, std::uint32_t width,
                           const std::vector<std::int32_t>& data) {
  if (data.size() != static_cast<std::size_t>(height) * width) {
    throw InputError("write_lfpm_i32: payload size mismatch");
  }
  atomic_write_file(path, io_detail::lfpm_bytes(height, width, 1, data.data(), data.size() * 4));
}

struct LfpmF32 {
  std::uint32_t height = 0, width = 0, channels = 0;
  std::vector<float> data;
};

inline LfpmF32 read_lfpm_f32(const fs::path& path) {
  auto [h, bytes] = io_detail::read_lfpm_raw(path);
  LfpmF32 out{h.height, h.width, h.channels, {}};
  out.data.resize(static_cast<std::size_t>(h.height) * h.width * h.channels);
  std::memcpy(out.data.data(), bytes.data() + 32, out.data.size() * 4);
  return out;
}

inline std::pair<io_detail::LfpmHeader, std::vector<std::int32_t>> read_lfpm_i32(
    const fs::path& path) {
  auto [h, bytes] = io_detail::read_lfpm_raw(path);
  if (h.channels != 1) throw FormatError("mask must have one channel", path.string(), 24);
  std::vector<std::int32_t> data(static_cast<std::size_t>(h.height) * h.width);
  std::memcpy(data.data(), bytes.data() + 32, data.size() * 4);
  return {h, std::move(data)};
}

// Typed wrappers.

inline void write_pointmap(const fs::path& path, const Pointmap& pm) {
  std::vector<float> data;
  data.reserve(pm.points.size() * 4);
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    data.push_back(static_cast<float>(pm.points[i].x()));
    data.push_back(static_cast<float>(pm.points[i].y()));
    data.push_back(static_cast<float>(pm.points[i].z()));
    data.push_back(pm.valid[i] ? 1.0f : 0.0f);
  }
  write_lfpm_f32(path, pm.height, pm.width, 4, data);
}

inline Pointmap read_pointmap(const fs::path& path) {
  const LfpmF32 raw = read_lfpm_f32(path);
  if (raw.channels != 4) throw FormatError("pointmap must have four channels", path.string(), 24);
  Pointmap pm(static_cast<int>(raw.width), static_cast<int>(raw.height));
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    pm.points[i] = Vec3(raw.data[4 * i], raw.data[4 * i + 1], raw.data[4 * i + 2]);
    pm.valid[i] = raw.data[4 * i + 3] != 0.0f ? 1 : 0;
  }
  return pm;
}

inline void write_scalar_map(const fs::path& path, const Grid<double>& map) {
  std::vector<float> data(map.data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(map.data[i]);
  write_lfpm_f32(path, map.height, map.width, 1, data);
}

inline Grid<double> read_scalar_map(const fs::path& path) {
  const LfpmF32 raw = read_lfpm_f32(path);
  if (raw.channels != 1) throw FormatError("scalar map must have one channel", path.string(), 24);
  Grid<double> map(static_cast<int>(raw.width), static_cast<int>(raw.height));
  for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] = raw.data[i];
  return map;
}

inline void write_mask(const fs::path& path, const IdMap& mask) {
  write_lfpm_i32(path, mask.height, mask.width, mask.data);
}

inline IdMap read_mask(const fs::path& path) {
  auto [h, data] = read_lfpm_i32(path);
  IdMap mask(static_cast<int>(h.width), static_cast<int>(h.height));
  mask.data = std::move(data);
  return mask;
}

// ---------------------------------------------------------------------------
// JSON schemas
// ---------------------------------------------------------------------------

namespace io_detail {

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from(const json& j, const std::string& file) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected 3-vector", file, 0);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json pose_json(const PoseSE3& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(p.rotation(i, k));
  }
  return {{"rotation", r}, {"translation", vec3_json(p.translation)}};
}

inline PoseSE3 pose_from(const json& j, const std::string& file) {
  PoseSE3 p;
  const auto& r = j.at("rotation");
  if (!r.is_array() || r.size() != 9) throw FormatError("expected 3x3 rotation", file, 0);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) p.rotation(i, k) = r[3 * i + k].get<double>();
  }
  p.translation = vec3_from(j.at("translation"), file);
  return p;
}

inline SemanticClass class_from(const std::string& s, const std::string& file) {
  if (s == "floor") return SemanticClass::Floor;
  if (s == "ceiling") return SemanticClass::Ceiling;
  if (s == "wall") return SemanticClass::Wall;
  throw FormatError("unknown semantic class '" + s + "'", file, 0);
}

inline json adjacency_json(const AdjacencyMatrix& a) {
  json pairs = json::array();
  for (int i = 0; i < a.n; ++i) {
    for (int j = i + 1; j < a.n; ++j) {
      if (a.at(i, j)) pairs.push_back(json::array({i, j}));
    }
  }
  return pairs;
}

inline AdjacencyMatrix adjacency_from(const json& pairs, int n) {
  AdjacencyMatrix a(n);
  for (const auto& p : pairs) a.set(p[0].get<int>(), p[1].get<int>());
  return a;
}

}  // namespace io_detail

inline json scene_to_json(const Scene& scene) {
  json j;
  j["format"] = "layoutfuse-scene-v1";
  j["units"] = "meters";
  j["sign_convention"] = "interior-positive";
  j["seed"] = scene.spec.seed;
  j["wall_count"] = scene.spec.wall_count;
  j["room_extent"] = scene.spec.room_extent;
  j["ceiling_height"] = scene.ceiling_height;
  j["camera_count"] = scene.spec.camera_count;
  j["noise_sigma"] = scene.spec.noise_sigma;
  j["image_size"] = scene.spec.image_size;
  json fp = json::array();
  for (const auto& v : scene.footprint) fp.push_back(json::array({v.x(), v.y()}));
  j["footprint"] = fp;
  json planes = json::array();
  for (std::size_t i = 0; i < scene.planes.size(); ++i) {
    planes.push_back({{"id", i},
                      {"class", to_string(scene.planes[i].semantic_class)},
                      {"normal", io_detail::vec3_json(scene.planes[i].normal)},
                      {"offset", scene.planes[i].offset}});
  }
  j["planes"] = planes;
  j["adjacency"] = io_detail::adjacency_json(scene.adjacency);
  json cams = json::array();
  for (const auto& c : scene.cameras) {
    json cj = io_detail::pose_json(c.pose);
    cj["fx"] = c.intrinsics.fx;
    cj["fy"] = c.intrinsics.fy;
    cj["cx"] = c.intrinsics.cx;
    cj["cy"] = c.intrinsics.cy;
    cj["width"] = c.width;
    cj["height"] = c.height;
    cams.push_back(cj);
  }
  j["cameras"] = cams;
  return j;
}

inline Scene scene_from_json(const json& j, const std::string& file) {
  Scene scene;
  if (j.value("format", "") != "layoutfuse-scene-v1") {
    throw FormatError("not a layoutfuse scene file", file, 0);
  }
  scene.spec.seed = j.at("seed").get<std::uint64_t>();
  scene.spec.wall_count = j.at("wall_count").get<int>();
  scene.spec.room_extent = j.at("room_extent").get<double>();
  scene.spec.camera_count = j.at("camera_count").get<int>();
  scene.spec.noise_sigma = j.at("noise_sigma").get<double>();
  scene.spec.image_size = j.at("image_size").get<int>();
  scene.ceiling_height = j.at("ceiling_height").get<double>();
  scene.spec.ceiling_height = scene.ceiling_height;
  for (const auto& v : j.at("footprint")) {
    scene.footprint.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  for (const auto& p : j.at("planes")) {
    Plane plane;
    plane.normal = io_detail::vec3_from(p.at("normal"), file);
    plane.offset = p.at("offset").get<double>();
    plane.semantic_class = io_detail::class_from(p.at("class").get<std::string>(), file);
    scene.planes.push_back(plane);
  }
  scene.adjacency =
      io_detail::adjacency_from(j.at("adjacency"), static_cast<int>(scene.planes.size()));
  for (const auto& c : j.at("cameras")) {
    Camera cam;
    cam.pose = io_detail::pose_from(c, file);
    cam.intrinsics = {c.at("fx").get<double>(), c.at("fy").get<double>(),
                      c.at("cx").get<double>(), c.at("cy").get<double>()};
    cam.width = c.at("width").get<int>();
    cam.height = c.at("height").get<int>();
    scene.cameras.push_back(cam);
  }
  return scene;
}

inline json layout_to_json(const Layout& layout) {
  json j;
  j["format"] = "layoutfuse-layout-v1";
  j["units"] = "meters";
  j["sign_convention"] = "interior-positive";
  json planes = json::array();
  for (const auto& lp : layout.planes) {
    json sources = json::array();
    for (const auto& s : lp.sources) {
      sources.push_back({{"image_id", s.image_id}, {"plane_index", s.source_plane_index}});
    }
    planes.push_back({{"id", lp.id},
                      {"class", to_string(lp.plane.semantic_class)},
                      {"normal", io_detail::vec3_json(lp.plane.normal)},
                      {"offset", lp.plane.offset},
                      {"sources", sources}});
  }
  j["planes"] = planes;
  json lines = json::array();
  for (const auto& l : layout.lines) {
    lines.push_back({{"point", io_detail::vec3_json(l.line.point)},
                     {"direction", io_detail::vec3_json(l.line.direction)},
                     {"planes", json::array({l.plane_a, l.plane_b})}});
  }
  j["lines"] = lines;
  json junctions = json::array();
  for (const auto& jj : layout.junctions) {
    junctions.push_back({{"position", io_detail::vec3_json(jj.junction.position)},
                         {"planes", json::array({jj.plane_a, jj.plane_b, jj.plane_c})}});
  }
  j["junctions"] = junctions;
  j["adjacency"] = io_detail::adjacency_json(layout.adjacency);
  j["warnings"] = layout.warnings;
  return j;
}

inline Layout layout_from_json(const json& j, const std::string& file) {
  if (j.value("format", "") != "layoutfuse-layout-v1") {
    throw FormatError("not a layoutfuse layout file", file, 0);
  }
  Layout layout;
  for (const auto& p : j.at("planes")) {
    LayoutPlane lp;
    lp.id = p.at("id").get<int>();
    lp.plane.normal = io_detail::vec3_from(p.at("normal"), file);
    lp.plane.offset = p.at("offset").get<double>();
    lp.plane.semantic_class = io_detail::class_from(p.at("class").get<std::string>(), file);
    for (const auto& s : p.at("sources")) {
      lp.sources.push_back({s.at("image_id").get<int>(), s.at("plane_index").get<int>()});
    }
    layout.planes.push_back(std::move(lp));
  }
  for (const auto& l : j.at("lines")) {
    LayoutLine ll;
    ll.line.point = io_detail::vec3_from(l.at("point"), file);
    ll.line.direction = io_detail::vec3_from(l.at("direction"), file);
    ll.plane_a = l.at("planes")[0].get<int>();
    ll.plane_b = l.at("planes")[1].get<int>();
    layout.lines.push_back(ll);
  }
  for (const auto& jj : j.at("junctions")) {
    LayoutJunction lj;
    lj.junction.position = io_detail::vec3_from(jj.at("position"), file);
    lj.plane_a = jj.at("planes")[0].get<int>();
    lj.plane_b = jj.at("planes")[1].get<int>();
    lj.plane_c = jj.at("planes")[2].get<int>();
    layout.junctions.push_back(lj);
  }
  layout.adjacency =
      io_detail::adjacency_from(j.at("adjacency"), static_cast<int>(layout.planes.size()));
  for (const auto& w : j.at("warnings")) layout.warnings.push_back(w.get<std::string>());
  return layout;
}

// ---------------------------------------------------------------------------
// Manifest: the seam between the oracle and externally produced pointmaps.
// ---------------------------------------------------------------------------

struct ManifestPair {
  int i = -1;
  int j = -1;
  fs::path pointmap_self, pointmap_other, confidence_self, confidence_other;
};

struct Manifest {
  std::vector<std::pair<int, fs::path>> view_masks;  // (image id, mask path)
  std::vector<ManifestPair> pairs;
  std::optional<fs::path> scene;  // optional ground-truth reference
};

inline json manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = "layoutfuse-manifest-v1";
  json views = json::array();
  for (const auto& [id, path] : m.view_masks) {
    views.push_back({{"id", id}, {"mask", path.string()}});
  }
  j["views"] = views;
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"pointmap_self", p.pointmap_self.string()},
                     {"pointmap_other", p.pointmap_other.string()},
                     {"confidence_self", p.confidence_self.string()},
                     {"confidence_other", p.confidence_other.string()}});
  }
  j["pairs"] = pairs;
  if (m.scene) j["scene"] = m.scene->string();
  return j;
}

inline Manifest manifest_from_json(const json& j, const std::string& file) {
  if (j.value("format", "") != "layoutfuse-manifest-v1") {
    throw FormatError("not a layoutfuse manifest", file, 0);
  }
  Manifest m;
  for (const auto& v : j.at("views")) {
    m.view_masks.push_back({v.at("id").get<int>(), fs::path(v.at("mask").get<std::string>())});
  }
  for (const auto& p : j.at("pairs")) {
    ManifestPair mp;
    mp.i = p.at("i").get<int>();
    mp.j = p.at("j").get<int>();
    mp.pointmap_self = p.at("pointmap_self").get<std::string>();
    mp.pointmap_other = p.at("pointmap_other").get<std::string>();
    mp.confidence_self = p.at("confidence_self").get<std::string>();
    mp.confidence_other = p.at("confidence_other").get<std::string>();
    m.pairs.push_back(std::move(mp));
  }
  if (j.contains("scene")) m.scene = fs::path(j.at("scene").get<std::string>());
  return m;
}

inline json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file", path.string(), 0);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("JSON parse error: ") + e.what(), path.string(), e.byte);
  }
  return j;
}

inline void save_json_file(const fs::path& path, const json& j) {
  atomic_write_file(path, j.dump(2) + "\n");
}

/// Load view bundles through a manifest. Paths resolve relative to the
/// manifest's directory.
inline std::vector<ViewBundle> load_bundles(const Manifest& m, const fs::path& base_dir) {
  auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base_dir / p; };
  std::map<int, IdMap> masks;
  for (const auto& [id, path] : m.view_masks) masks[id] = read_mask(resolve(path));
  std::vector<ViewBundle> bundles;
  for (const auto& p : m.pairs) {
    if (p.i == p.j) throw InputError("manifest: pair (" + std::to_string(p.i) + ", " +
                                     std::to_string(p.j) + ") pairs a view with itself");
    ViewBundle b;
    b.image_id = p.i;
    b.partner_id = p.j;
    b.pointmap_self = read_pointmap(resolve(p.pointmap_self));
    b.pointmap_other = read_pointmap(resolve(p.pointmap_other));
    const Grid<double> cs = read_scalar_map(resolve(p.confidence_self));
    const Grid<double> co = read_scalar_map(resolve(p.confidence_other));
    b.confidence_self = cs;
    b.confidence_other = co;
    const auto it = masks.find(p.i);
    if (it == masks.end()) {
      throw InputError("manifest: no mask for view " + std::to_string(p.i));
    }
    b.plane_masks = it->second;
    bundles.push_back(std::move(b));
  }
  return bundles;
}

/// Write a scene's bundles plus manifest into a directory (the synth layout).
inline fs::path write_scene_directory(const Scene& scene, const std::vector<ViewBundle>& bundles,
                                      const fs::path& dir) {
  fs::create_directories(dir);
  save_json_file(dir / "scene.json", scene_to_json(scene));
  Manifest m;
  m.scene = "scene.json";
  std::map<int, bool> seen;
  for (const auto& b : bundles) {
    if (!seen.count(b.image_id)) {
      const std::string mask_name = "view" + std::to_string(b.image_id) + ".mask.lfpm";
      write_mask(dir / mask_name, b.plane_masks);
      m.view_masks.push_back({b.image_id, mask_name});
      seen[b.image_id] = true;
    }
  }
  for (std::size_t k = 0; k < bundles.size(); ++k) {
    const auto& b = bundles[k];
    const std::string stem = "pair" + std::to_string(k);
    ManifestPair p;
    p.i = b.image_id;
    p.j = b.partner_id;
    p.pointmap_self = stem + "_self.lfpm";
    p.pointmap_other = stem + "_other.lfpm";
    p.confidence_self = stem + "_conf_self.lfpm";
    p.confidence_other = stem + "_conf_other.lfpm";
    write_pointmap(dir / p.pointmap_self, b.pointmap_self);
    write_pointmap(dir / p.pointmap_other, b.pointmap_other);
    write_scalar_map(dir / p.confidence_self, b.confidence_self);
    write_scalar_map(dir / p.confidence_other, b.confidence_other);
    m.pairs.push_back(std::move(p));
  }
  save_json_file(dir / "manifest.json", manifest_to_json(m));
  return dir / "manifest.json";
}

// ---------------------------------------------------------------------------
// Renderers
// ---------------------------------------------------------------------------

namespace io_detail {

inline std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v == 0.0 ? 0.0 : v);  // avoid -0
  return buf;
}

inline const char* palette_color(int id) {
  static constexpr const char* kPalette[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                             "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
                                             "#008080", "#9a6324", "#800000", "#808000"};
  return kPalette[((id % 12) + 12) % 12];
}

}  // namespace io_detail

/// Birdview SVG of plan-space wall segments, one polyline per segment,
/// colored by the given ids (cluster or plane ids). Optionally outlines a
/// footprint polygon.
inline std::string render_birdview_segments(const std::vector<WallSegment2D>& segments,
                                            const std::vector<int>& color_ids,
                                            const std::vector<Vec2>& outline = {}) {
  double xlo = 1e30, xhi = -1e30, ylo = 1e30, yhi = -1e30;
  auto grow = [&](const Vec2& p) {
    xlo = std::min(xlo, p.x());
    xhi = std::max(xhi, p.x());
    ylo = std::min(ylo, p.y());
    yhi = std::max(yhi, p.y());
  };
  for (const auto& s : segments) {
    grow(s.a);
    grow(s.b);
  }
  for (const auto& p : outline) grow(p);
  if (segments.empty() && outline.empty()) {
    xlo = ylo = 0.0;
    xhi = yhi = 1.0;
  }
  const double pad = 0.05 * std::max(xhi - xlo, yhi - ylo) + 0.1;
  using io_detail::fmt;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + fmt(xlo - pad) + " " +
         fmt(ylo - pad) + " " + fmt(xhi - xlo + 2 * pad) + " " + fmt(yhi - ylo + 2 * pad) +
         "\">\n";
  if (!outline.empty()) {
    svg += "  <polygon points=\"";
    for (std::size_t i = 0; i < outline.size(); ++i) {
      if (i) svg += " ";
      svg += fmt(outline[i].x()) + "," + fmt(outline[i].y());
    }
    svg += "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"0.03\"/>\n";
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const int id = i < color_ids.size() ? color_ids[i] : 0;
    svg += "  <polyline points=\"" + fmt(segments[i].a.x()) + "," + fmt(segments[i].a.y()) + " " +
           fmt(segments[i].b.x()) + "," + fmt(segments[i].b.y()) + "\" fill=\"none\" stroke=\"" +
           io_detail::palette_color(id) + "\" stroke-width=\"0.06\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// Birdview SVG of a merged layout: each wall's base edge colored by plane
/// id over the floor polygon outline.
inline std::string render_birdview(const Layout& layout) {
  std::vector<WallSegment2D> segments;
  std::vector<int> ids;
  std::vector<Vec2> outline;
  if (layout.floor_index() >= 0) {
    try {
      const RoomFaces room = faces_from_layout(layout);
      outline = room.footprint;
      for (const auto& f : room.faces) {
        if (f.kind != RoomFace::Kind::Wall) continue;
        WallSegment2D s;
        s.a = f.edge_a;
        s.b = f.edge_b;
        segments.push_back(s);
        ids.push_back(f.plane_id);
      }
    } catch (const InputError&) {
      // Open layouts fall through to the provenance-free rendering below.
    }
  }
  return render_birdview_segments(segments, ids, outline);
}

/// Wireframe OBJ: junction vertices plus one line element per layout edge.
inline std::string render_wireframe(const Layout& layout) {
  using io_detail::fmt;
  std::string obj = "# layoutfuse wireframe\n";
  for (const auto& j : layout.junctions) {
    obj += "v " + fmt(j.junction.position.x(), 6) + " " + fmt(j.junction.position.y(), 6) + " " +
           fmt(j.junction.position.z(), 6) + "\n";
  }
  for (const auto& e : wireframe_edges(layout)) {
    obj += "l " + std::to_string(e.junction_a + 1) + " " + std::to_string(e.junction_b + 1) + "\n";
  }
  return obj;
}

}  // namespace layoutfuse
