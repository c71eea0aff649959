#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "layoutfuse/error.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"

namespace layoutfuse {

/// Orthonormal basis adapted to a vertical direction: plan coordinates are
/// (e1.P, e2.P) and height is up.P.
struct ProjectionFrame {
  Vec3 up = Vec3::UnitY();
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitZ();

  static ProjectionFrame from_up(const Vec3& up_dir) {
    ProjectionFrame f;
    f.up = up_dir.normalized();
    const Vec3 seed = std::abs(f.up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    f.e1 = (seed - seed.dot(f.up) * f.up).normalized();
    f.e2 = f.e1.cross(f.up);  // plan coords are (x, z) when up is +y
    return f;
  }

  Vec2 plan(const Vec3& p) const { return {e1.dot(p), e2.dot(p)}; }
  double height(const Vec3& p) const { return up.dot(p); }
  Vec3 unplan(const Vec2& p, double h) const { return p.x() * e1 + p.y() * e2 + h * up; }
};

/// Even-odd crossing test. Boundary points are implementation-defined, which
/// is fine for the measure-zero cases they occur in here.
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

inline double polygon_signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    a += poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
  }
  return 0.5 * a;
}

/// One bounded structural face of a room: the supporting plane plus the
/// information needed to clip it (wall edge in plan coordinates, or the
/// footprint polygon for floor/ceiling).
struct RoomFace {
  enum class Kind { Floor, Ceiling, Wall };
  Kind kind = Kind::Wall;
  Plane plane;
  int plane_id = -1;
  Vec2 edge_a = Vec2::Zero();  // wall only: plan endpoints of the base edge
  Vec2 edge_b = Vec2::Zero();
};

/// Bounded boundary of a room volume: footprint polygon extruded between the
/// floor and ceiling heights measured along `frame.up`.
struct RoomFaces {
  ProjectionFrame frame;
  std::vector<Vec2> footprint;  // plan coordinates
  double height_floor = 0.0;
  double height_ceiling = 0.0;
  std::vector<RoomFace> faces;

  bool contains(const Vec3& p, double tol = 0.0) const {
    const double h = frame.height(p);
    if (h < height_floor - tol || h > height_ceiling + tol) return false;
    return point_in_polygon(frame.plan(p), footprint);
  }
};

struct RayHit {
  double t = 0.0;  // parameter along the ray; equals camera depth when the
                   // direction has unit forward component
  int plane_id = -1;
};

/// Nearest face intersection along origin + t * dir, t > t_min. The bounds
/// tolerance keeps seams between faces watertight.
inline std::optional<RayHit> raycast(const RoomFaces& room, const Vec3& origin,
                                     const Vec3& dir, double t_min = 1e-9,
                                     double bounds_tol = 1e-9) {
  std::optional<RayHit> best;
  for (const auto& face : room.faces) {
    const double denom = face.plane.normal.dot(dir);
    if (std::abs(denom) < 1e-15) continue;
    const double t = -face.plane.signed_distance(origin) / denom;
    if (t <= t_min) continue;
    if (best && t >= best->t) continue;
    const Vec3 x = origin + t * dir;
    if (face.kind == RoomFace::Kind::Wall) {
      const double h = room.frame.height(x);
      if (h < room.height_floor - bounds_tol || h > room.height_ceiling + bounds_tol) continue;
      const Vec2 p = room.frame.plan(x);
      const Vec2 ab = face.edge_b - face.edge_a;
      const double len2 = ab.squaredNorm();
      if (len2 <= 0.0) continue;
      const double s = (p - face.edge_a).dot(ab) / len2;
      const double s_tol = bounds_tol / std::sqrt(len2);
      if (s < -s_tol || s > 1.0 + s_tol) continue;
    } else {
      if (!point_in_polygon(room.frame.plan(x), room.footprint)) continue;
    }
    best = RayHit{t, face.plane_id};
  }
  return best;
}

/// Rebuild the bounded boundary of a layout whose walls form a closed cycle
/// in the wall-wall adjacency. Layouts without walls fall back to an
/// unbounded floor/ceiling slab; walls that do not close a cycle are an
/// error, since the volume would be ill-defined.
inline RoomFaces faces_from_layout(const Layout& layout) {
  const int floor_i = layout.floor_index();
  const int ceil_i = layout.ceiling_index();
  if (floor_i < 0 || ceil_i < 0) {
    throw InputError("faces_from_layout: layout lacks a floor or ceiling plane");
  }
  const Plane& floor = layout.planes[floor_i].plane;
  const Plane& ceiling = layout.planes[ceil_i].plane;

  RoomFaces room;
  room.frame = ProjectionFrame::from_up(floor.normal);

  std::vector<int> walls;
  for (std::size_t i = 0; i < layout.planes.size(); ++i) {
    if (layout.planes[i].plane.semantic_class == SemanticClass::Wall) {
      walls.push_back(static_cast<int>(i));
    }
  }

  // Heights along up, measured where the plan origin projects.
  auto height_of = [&](const Plane& p) {
    const double nu = p.normal.dot(room.frame.up);
    if (std::abs(nu) < 0.5) throw InputError("faces_from_layout: floor/ceiling not horizontal");
    return -p.offset / nu;
  };
  room.height_floor = height_of(floor);
  room.height_ceiling = height_of(ceiling);
  if (room.height_ceiling < room.height_floor) std::swap(room.height_floor, room.height_ceiling);

  room.faces.push_back({RoomFace::Kind::Floor, floor, layout.planes[floor_i].id, {}, {}});
  room.faces.push_back({RoomFace::Kind::Ceiling, ceiling, layout.planes[ceil_i].id, {}, {}});
  if (walls.empty()) return room;

  if (walls.size() < 3) {
    throw InputError("faces_from_layout: walls cannot close a footprint");
  }

  // Walk the wall-wall adjacency as a single cycle.
  std::vector<std::vector<int>> nbr(layout.planes.size());
  for (int a : walls) {
    for (int b : walls) {
      if (a < b && layout.adjacency.at(a, b)) {
        nbr[a].push_back(b);
        nbr[b].push_back(a);
      }
    }
  }
  for (int w : walls) {
    if (nbr[w].size() != 2) {
      throw InputError("faces_from_layout: wall adjacency is not a simple cycle");
    }
  }
  std::vector<int> cycle;
  cycle.push_back(walls[0]);
  int prev = -1;
  while (true) {
    const int cur = cycle.back();
    const int nxt = (nbr[cur][0] != prev) ? nbr[cur][0] : nbr[cur][1];
    if (nxt == cycle.front()) break;
    cycle.push_back(nxt);
    prev = cur;
    if (cycle.size() > walls.size()) {
      throw InputError("faces_from_layout: wall adjacency is not a simple cycle");
    }
  }
  if (cycle.size() != walls.size()) {
    throw InputError("faces_from_layout: wall adjacency has more than one cycle");
  }

  // Corner between consecutive walls, in plan coordinates.
  auto plan_line = [&](const Plane& p) {
    const Vec2 n(p.normal.dot(room.frame.e1), p.normal.dot(room.frame.e2));
    const double len = n.norm();
    if (len < 1e-9) throw InputError("faces_from_layout: wall parallel to floor");
    return std::make_pair(Vec2(n / len), p.offset / len);
  };
  auto corner = [&](const Plane& a, const Plane& b) {
    const auto [na, da] = plan_line(a);
    const auto [nb, db] = plan_line(b);
    const double det = na.x() * nb.y() - na.y() * nb.x();
    if (std::abs(det) < 1e-9) throw InputError("faces_from_layout: consecutive walls parallel");
    return Vec2((-da * nb.y() + db * na.y()) / det, (-na.x() * db + nb.x() * da) / det);
  };

  const std::size_t m = cycle.size();
  std::vector<Vec2> corners(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& wa = layout.planes[cycle[k]].plane;
    const auto& wb = layout.planes[cycle[(k + 1) % m]].plane;
    corners[k] = corner(wa, wb);
  }
  room.footprint = corners;
  for (std::size_t k = 0; k < m; ++k) {
    const int idx = cycle[k];
    RoomFace f;
    f.kind = RoomFace::Kind::Wall;
    f.plane = layout.planes[idx].plane;
    f.plane_id = layout.planes[idx].id;
    f.edge_a = corners[(k + m - 1) % m];
    f.edge_b = corners[k];
    room.faces.push_back(f);
  }
  return room;
}

}  // namespace layoutfuse
