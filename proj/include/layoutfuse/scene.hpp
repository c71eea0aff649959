#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "layoutfuse/error.hpp"
#include "layoutfuse/faces.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"
#include "layoutfuse/rng.hpp"

namespace layoutfuse {

/// Parameters of a synthetic rectilinear room. Rooms are extruded simple
/// rectilinear polygons, so wall_count must be even and between 4 and 12.
struct SceneSpec {
  int wall_count = 4;
  double room_extent = 6.0;     // meters, long side of the bounding rectangle
  double ceiling_height = 2.8;  // meters
  int camera_count = 3;
  double noise_sigma = 0.0;  // meters, isotropic point noise
  std::uint64_t seed = 1;
  int image_size = 96;  // square renders
};

struct Camera {
  PoseSE3 pose;  // camera-to-world
  Intrinsics intrinsics;
  int width = 0;
  int height = 0;
};

/// Ground-truth scene: plane 0 is the floor, plane 1 the ceiling, walls
/// follow in footprint order. All normals point into the room.
struct Scene {
  SceneSpec spec;
  std::vector<Plane> planes;
  AdjacencyMatrix adjacency;
  std::vector<Camera> cameras;
  std::vector<Vec2> footprint;  // world (x, z) of wall base corners, in order
  double ceiling_height = 0.0;

  Vec3 interior_point() const {
    Vec2 c = Vec2::Zero();
    for (const auto& v : footprint) c += v;
    c /= static_cast<double>(footprint.size());
    return {c.x(), ceiling_height * 0.5, c.y()};
  }
};

/// GT scene as a Layout (same plane ids), for rendering and evaluation.
inline Layout scene_to_layout(const Scene& scene) {
  Layout layout;
  layout.adjacency = scene.adjacency;
  for (std::size_t i = 0; i < scene.planes.size(); ++i) {
    layout.planes.push_back({static_cast<int>(i), scene.planes[i], {}});
  }
  std::vector<Plane> raw(scene.planes.begin(), scene.planes.end());
  derive_lines_and_junctions(raw, layout.adjacency, &layout.lines, &layout.junctions);
  return layout;
}

/// One pointmap pair as produced for an ordered image pair (i, j): both maps
/// live in camera i's frame, masks belong to image i.
struct ViewBundle {
  int image_id = -1;
  int partner_id = -1;
  Pointmap pointmap_self;    // X_{i,i}
  Pointmap pointmap_other;   // X_{j,i}
  ConfidenceMap confidence_self;
  ConfidenceMap confidence_other;
  IdMap plane_masks;  // plane ids for image i, -1 = none
};

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

inline double distance_to_boundary(const Vec2& p, const std::vector<Vec2>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  }
  return best;
}

/// Rectilinear footprint: axis-aligned rectangle with (wall_count - 4) / 2
/// rectangular corner notches, centered and rotated by a global angle.
inline std::vector<Vec2> make_footprint(const SceneSpec& spec, Rng& rng) {
  const double w = spec.room_extent * rng.uniform(0.78, 1.0);
  const double d = spec.room_extent * rng.uniform(0.68, 0.88);
  const int notch_count = (spec.wall_count - 4) / 2;

  // Pick distinct corners for the notches.
  std::vector<int> corner_order = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i) {
    std::swap(corner_order[i], corner_order[rng.uniform_int(0, i)]);
  }
  std::vector<bool> notched(4, false);
  for (int k = 0; k < notch_count; ++k) notched[corner_order[k]] = true;

  // Slot-based notch depths: parallel notch walls stay at least ~0.25 m
  // apart, well beyond the merge proximity, so distinct planes never blur
  // into one cluster.
  std::vector<int> slot_x = {0, 1, 2, 3}, slot_z = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i) std::swap(slot_x[i], slot_x[rng.uniform_int(0, i)]);
  for (int i = 3; i > 0; --i) std::swap(slot_z[i], slot_z[rng.uniform_int(0, i)]);
  std::vector<double> dx(4, 0.0), dz(4, 0.0);
  for (int c = 0; c < 4; ++c) {
    if (!notched[c]) continue;
    dx[c] = 0.8 + 0.35 * slot_x[c] + rng.uniform(0.0, 0.08);
    dz[c] = 0.8 + 0.28 * slot_z[c] + rng.uniform(0.0, 0.08);
  }

  std::vector<Vec2> poly;
  auto add_corner = [&](int c) {
    switch (c) {
      case 0:
        if (notched[0]) {
          poly.push_back({0, dz[0]});
          poly.push_back({dx[0], dz[0]});
          poly.push_back({dx[0], 0});
        } else {
          poly.push_back({0, 0});
        }
        break;
      case 1:
        if (notched[1]) {
          poly.push_back({w - dx[1], 0});
          poly.push_back({w - dx[1], dz[1]});
          poly.push_back({w, dz[1]});
        } else {
          poly.push_back({w, 0});
        }
        break;
      case 2:
        if (notched[2]) {
          poly.push_back({w, d - dz[2]});
          poly.push_back({w - dx[2], d - dz[2]});
          poly.push_back({w - dx[2], d});
        } else {
          poly.push_back({w, d});
        }
        break;
      case 3:
        if (notched[3]) {
          poly.push_back({dx[3], d});
          poly.push_back({dx[3], d - dz[3]});
          poly.push_back({0, d - dz[3]});
        } else {
          poly.push_back({0, d});
        }
        break;
    }
  };
  for (int c = 0; c < 4; ++c) add_corner(c);

  Vec2 centroid = Vec2::Zero();
  for (const auto& v : poly) centroid += v;
  centroid /= static_cast<double>(poly.size());

  const double phi = rng.uniform(0.0, M_PI / 2.0);
  const double cs = std::cos(phi), sn = std::sin(phi);
  for (auto& v : poly) {
    const Vec2 q = v - centroid;
    v = Vec2(cs * q.x() - sn * q.y(), sn * q.x() + cs * q.y());
  }
  return poly;
}

inline Camera make_camera(const Vec2& position, double height, double yaw, double pitch,
                          int image_size) {
  const Vec3 up = Vec3::UnitY();
  Vec3 forward(std::cos(pitch) * std::cos(yaw), -std::sin(pitch), std::cos(pitch) * std::sin(yaw));
  Vec3 down = (-up + up.dot(forward) * forward).normalized();
  Camera cam;
  cam.pose.rotation.col(0) = down.cross(forward);
  cam.pose.rotation.col(1) = down;
  cam.pose.rotation.col(2) = forward;
  cam.pose.translation = Vec3(position.x(), height, position.y());
  const double s = static_cast<double>(image_size);
  cam.intrinsics = {s / 2.0, s / 2.0, (s - 1.0) / 2.0, (s - 1.0) / 2.0};  // 90 degree fov
  cam.width = image_size;
  cam.height = image_size;
  return cam;
}

}  // namespace detail

/// Structural depth and plane-id mask rendered from one camera. Every pixel
/// of a closed room hits a face; the mask holds the nearest plane's id.
inline std::pair<DepthMap, IdMap> render_structural_depth(const Scene& scene, int cam_index) {
  if (cam_index < 0 || cam_index >= static_cast<int>(scene.cameras.size())) {
    throw InputError("render_structural_depth: camera index out of range");
  }
  const Camera& cam = scene.cameras[cam_index];
  const RoomFaces room = faces_from_layout(scene_to_layout(scene));
  if (!room.contains(cam.pose.translation)) {
    throw RenderError("render_structural_depth: camera outside the room volume");
  }

  DepthMap depth(cam.width, cam.height, 0.0);
  IdMap mask(cam.width, cam.height, -1);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir_cam((u - cam.intrinsics.cx) / cam.intrinsics.fx,
                         (v - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0);
      const Vec3 dir_world = cam.pose.rotation * dir_cam;
      // dir has unit forward component, so the ray parameter is camera depth.
      if (auto hit = raycast(room, cam.pose.translation, dir_world)) {
        depth.at(v, u) = hit->t;
        mask.at(v, u) = hit->plane_id;
      }
    }
  }
  return {std::move(depth), std::move(mask)};
}

/// Deterministic synthetic room. Cameras are placed inside the room so that
/// each sees at least two walls; placement also aims to cover every wall,
/// the floor and the ceiling across the set of views (best effort for view
/// counts too small to cover the room). A camera_count of 1 duplicates the
/// single camera so downstream pairing has two views of identical pose.
inline Scene generate_room(const SceneSpec& spec) {
  if (spec.wall_count < 4 || spec.wall_count > 12 || spec.wall_count % 2 != 0) {
    throw InputError("generate_room: wall_count must be even and within [4, 12], got " +
                     std::to_string(spec.wall_count));
  }
  if (spec.camera_count < 1) throw InputError("generate_room: camera_count must be >= 1");
  if (spec.room_extent <= 0 || spec.ceiling_height <= 0) {
    throw InputError("generate_room: extents must be positive");
  }
  if (spec.image_size < 16) throw InputError("generate_room: image_size too small");

  Scene scene;
  scene.spec = spec;
  scene.ceiling_height = spec.ceiling_height;

  Rng rng_room = Rng::substream(spec.seed, 0);
  scene.footprint = detail::make_footprint(spec, rng_room);
  const int m = static_cast<int>(scene.footprint.size());

  Vec2 centroid = Vec2::Zero();
  for (const auto& v : scene.footprint) centroid += v;
  centroid /= static_cast<double>(m);
  const Vec3 interior(centroid.x(), spec.ceiling_height / 2.0, centroid.y());

  scene.planes.push_back({Vec3::UnitY(), 0.0, SemanticClass::Floor});
  scene.planes.push_back({-Vec3::UnitY(), spec.ceiling_height, SemanticClass::Ceiling});
  for (int k = 0; k < m; ++k) {
    const Vec2 a = scene.footprint[k];
    const Vec2 b = scene.footprint[(k + 1) % m];
    const Vec2 e = (b - a).normalized();
    Vec2 n2(-e.y(), e.x());  // interior-left for counterclockwise footprints
    Plane wall{Vec3(n2.x(), 0.0, n2.y()), 0.0, SemanticClass::Wall};
    wall.offset = -(n2.x() * a.x() + n2.y() * a.y());
    if (wall.signed_distance(interior) < 0.0) wall = wall.flipped();
    scene.planes.push_back(wall);
  }

  scene.adjacency = AdjacencyMatrix(2 + m);
  for (int k = 0; k < m; ++k) {
    scene.adjacency.set(2 + k, 2 + (k + 1) % m);
    scene.adjacency.set(2 + k, 0);
    scene.adjacency.set(2 + k, 1);
  }

  // Camera placement: sample, render, check coverage, retry.
  const int cams = spec.camera_count;
  const double hfloor = 0.0, hceil = spec.ceiling_height;
  const double margin = 0.45;
  const int size = spec.image_size;
  const double px_scale = static_cast<double>(size) * size / (96.0 * 96.0);
  const int per_cam_min = std::max(16, static_cast<int>(40 * px_scale));
  const int cover_min = std::max(60, static_cast<int>(250 * px_scale));

  auto sample_interior = [&](Rng& rng) {
    double xlo = 1e30, xhi = -1e30, zlo = 1e30, zhi = -1e30;
    for (const auto& v : scene.footprint) {
      xlo = std::min(xlo, v.x());
      xhi = std::max(xhi, v.x());
      zlo = std::min(zlo, v.y());
      zhi = std::max(zhi, v.y());
    }
    for (int tries = 0; tries < 4000; ++tries) {
      Vec2 p(rng.uniform(xlo, xhi), rng.uniform(zlo, zhi));
      if (point_in_polygon(p, scene.footprint) &&
          detail::distance_to_boundary(p, scene.footprint) >= margin) {
        return p;
      }
    }
    return centroid;
  };

  std::vector<Camera> best_cams;
  long best_score = -1;
  Rng rng_cam = Rng::substream(spec.seed, 1);
  for (int attempt = 0; attempt < 400; ++attempt) {
    scene.cameras.clear();
    for (int k = 0; k < cams; ++k) {
      const double yaw = 2.0 * M_PI * (k + rng_cam.uniform()) / cams;
      const double pitch = (k % 2 == 0 ? 1.0 : -1.0) * rng_cam.uniform(rad(3.0), rad(10.0));
      const double height = spec.ceiling_height * rng_cam.uniform(0.4, 0.6);
      Vec2 pos = sample_interior(rng_cam);
      // Pull back against the look direction to widen what the view covers.
      const Vec2 look2(std::cos(yaw), std::sin(yaw));
      const Vec2 pulled = pos - rng_cam.uniform(0.1, 0.3) * spec.room_extent * look2;
      if (point_in_polygon(pulled, scene.footprint) &&
          detail::distance_to_boundary(pulled, scene.footprint) >= margin) {
        pos = pulled;
      }
      scene.cameras.push_back(detail::make_camera(pos, height, yaw, pitch, size));
    }

    // Coverage: per-camera wall visibility and whole-set plane coverage.
    std::vector<long> plane_px(scene.planes.size(), 0);
    std::vector<long> plane_px_single(scene.planes.size(), 0);
    bool cams_ok = true;
    for (int k = 0; k < cams; ++k) {
      auto [depth, mask] = render_structural_depth(scene, k);
      std::vector<long> local(scene.planes.size(), 0);
      for (auto id : mask.data) {
        if (id >= 0) ++local[id];
      }
      int walls_seen = 0;
      for (std::size_t p = 2; p < local.size(); ++p) {
        if (local[p] >= per_cam_min) ++walls_seen;
      }
      if (walls_seen < 2) cams_ok = false;
      for (std::size_t p = 0; p < local.size(); ++p) {
        plane_px[p] += local[p];
        plane_px_single[p] = std::max(plane_px_single[p], local[p]);
      }
    }
    long covered = 0;
    for (std::size_t p = 2; p < plane_px.size(); ++p) {
      if (plane_px[p] >= cover_min) ++covered;
    }
    const bool fc_ok = plane_px_single[0] >= cover_min && plane_px_single[1] >= cover_min;
    const long score = (cams_ok ? 1000000 : 0) + covered * 1000 + (fc_ok ? 500 : 0);
    if (score > best_score) {
      best_score = score;
      best_cams = scene.cameras;
    }
    if (cams_ok && fc_ok && covered == m) break;
  }
  scene.cameras = best_cams;

  if (spec.camera_count == 1) {
    scene.cameras.push_back(scene.cameras.front());
  }
  return scene;
}

/// Pointmap pairs for the given ordered pairing. Points carry isotropic
/// Gaussian noise of the requested sigma; the synthetic confidence is
/// 1 / (1 + |noise| / sigma), clipped to [0.1, 1], and identically 1 when
/// sigma is zero. Deterministic in (scene seed, pair index).
inline std::vector<ViewBundle> emit_view_bundles(const Scene& scene,
                                                 const std::vector<std::pair<int, int>>& pairing,
                                                 double noise_sigma) {
  const int n = static_cast<int>(scene.cameras.size());
  std::vector<int> needed;
  for (const auto& [i, j] : pairing) {
    if (i == j) throw InputError("emit_view_bundles: a view cannot pair with itself");
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw InputError("emit_view_bundles: pair index out of range");
    }
    needed.push_back(i);
    needed.push_back(j);
  }

  std::vector<Pointmap> self_maps(n);
  std::vector<IdMap> masks(n);
  std::vector<bool> have(n, false);
  for (int id : needed) {
    if (have[id]) continue;
    auto [depth, mask] = render_structural_depth(scene, id);
    self_maps[id] = backproject(depth, scene.cameras[id].intrinsics);
    masks[id] = std::move(mask);
    have[id] = true;
  }

  std::vector<ViewBundle> bundles;
  bundles.reserve(pairing.size());
  for (std::size_t p = 0; p < pairing.size(); ++p) {
    const auto [i, j] = pairing[p];
    ViewBundle b;
    b.image_id = i;
    b.partner_id = j;
    b.plane_masks = masks[i];
    b.pointmap_self = self_maps[i];

    const PoseSE3 rel = scene.cameras[i].pose.inverse() * scene.cameras[j].pose;
    b.pointmap_other = self_maps[j];
    for (std::size_t k = 0; k < b.pointmap_other.points.size(); ++k) {
      if (b.pointmap_other.valid[k]) b.pointmap_other.points[k] = rel.apply(b.pointmap_other.points[k]);
    }

    b.confidence_self = ConfidenceMap(b.pointmap_self.width, b.pointmap_self.height, 1.0);
    b.confidence_other = ConfidenceMap(b.pointmap_other.width, b.pointmap_other.height, 1.0);
    if (noise_sigma > 0.0) {
      Rng rng = Rng::substream(scene.spec.seed, 0xB0 + p);
      auto perturb = [&](Pointmap& pm, ConfidenceMap& conf) {
        for (std::size_t k = 0; k < pm.points.size(); ++k) {
          if (!pm.valid[k]) continue;
          const Vec3 eps = rng.normal3(noise_sigma);
          pm.points[k] += eps;
          conf.data[k] = std::clamp(1.0 / (1.0 + eps.norm() / noise_sigma), 0.1, 1.0);
        }
      };
      perturb(b.pointmap_self, b.confidence_self);
      perturb(b.pointmap_other, b.confidence_other);
    }
    bundles.push_back(std::move(b));
  }
  return bundles;
}

/// All ordered pairs (i, j), i != j, among n views.
inline std::vector<std::pair<int, int>> all_ordered_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) pairs.push_back({i, j});
    }
  }
  return pairs;
}

}  // namespace layoutfuse
