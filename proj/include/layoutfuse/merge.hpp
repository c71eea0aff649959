#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "layoutfuse/error.hpp"
#include "layoutfuse/faces.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"
#include "layoutfuse/single_view.hpp"

namespace layoutfuse {

enum class SegmentOrientation { Unclassified, Vertical, Horizontal };

inline const char* to_string(SegmentOrientation o) {
  switch (o) {
    case SegmentOrientation::Vertical: return "vertical";
    case SegmentOrientation::Horizontal: return "horizontal";
    case SegmentOrientation::Unclassified: return "unclassified";
  }
  return "unclassified";
}

/// One wall observation as a line segment in the plan (x-z) view.
struct WallSegment2D {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  int image_id = -1;
  int source_plane_index = -1;  // index into that view's PartialLayout planes
  SegmentOrientation orientation = SegmentOrientation::Unclassified;
  Vec2 interior_normal = Vec2::Zero();  // plan direction the wall faces

  double length() const { return (b - a).norm(); }
  Vec2 center() const { return 0.5 * (a + b); }
};

struct MergeParams {
  double proximity_threshold = 0.2;  // meters between a segment and a cluster
  double overlap_threshold = 0.3;    // along-axis overlap fraction
  double margin = 0.1;               // meters, blocker and corner tolerance
  double angle_snap_tol = 15.0;      // degrees to the nearest axis
};

/// World-frame floor and ceiling, averaged over the views that saw them.
inline std::pair<Plane, Plane> average_floor_ceiling(const std::vector<PartialLayout>& partials,
                                                     const std::vector<PoseSE3>& poses) {
  if (partials.size() != poses.size()) {
    throw InputError("average_floor_ceiling: partials and poses disagree");
  }
  Vec3 nf = Vec3::Zero(), nc = Vec3::Zero();
  double df = 0.0, dc = 0.0;
  int count_f = 0, count_c = 0;
  for (std::size_t v = 0; v < partials.size(); ++v) {
    for (const auto& fp : partials[v].planes) {
      if (fp.plane.semantic_class == SemanticClass::Wall) continue;
      const Plane world = transform_plane(fp.plane, poses[v]);
      if (fp.plane.semantic_class == SemanticClass::Floor) {
        nf += world.normal;
        df += world.offset;
        ++count_f;
      } else {
        nc += world.normal;
        dc += world.offset;
        ++count_c;
      }
    }
  }
  if (count_f == 0) throw MissingPlaneError("average_floor_ceiling: no view contains a floor");
  if (count_c == 0) throw MissingPlaneError("average_floor_ceiling: no view contains a ceiling");

  Plane floor{nf.normalized(), df / count_f, SemanticClass::Floor};
  Plane ceiling{nc.normalized(), dc / count_c, SemanticClass::Ceiling};
  // Interior-pointing floor normal is "up" by definition; the ceiling faces it.
  if (ceiling.normal.dot(floor.normal) > 0.0) ceiling = ceiling.flipped();
  return {floor, ceiling};
}

struct ProjectedWalls {
  ProjectionFrame frame;
  std::vector<WallSegment2D> segments;
  std::vector<std::string> warnings;
};

/// Project every view's wall planes onto the plan defined by the floor
/// normal. Segment endpoints are the extremal projections of the wall's
/// inlier points along the wall direction; walls too far from vertical are
/// skipped with a warning.
inline ProjectedWalls project_walls(const std::vector<PartialLayout>& partials,
                                    const std::vector<PoseSE3>& poses, const Plane& floor) {
  if (partials.size() != poses.size()) {
    throw InputError("project_walls: partials and poses disagree");
  }
  ProjectedWalls out;
  out.frame = ProjectionFrame::from_up(floor.normal);
  for (std::size_t v = 0; v < partials.size(); ++v) {
    for (std::size_t p = 0; p < partials[v].planes.size(); ++p) {
      const auto& fp = partials[v].planes[p];
      if (fp.plane.semantic_class != SemanticClass::Wall) continue;
      const Plane world = transform_plane(fp.plane, poses[v]);
      const double tilt = std::abs(world.normal.dot(out.frame.up));
      if (tilt > 0.5) {
        out.warnings.push_back("view " + std::to_string(partials[v].image_id) + " plane " +
                               std::to_string(p) + " is near-parallel to the floor, skipped");
        continue;
      }
      Vec2 n2(world.normal.dot(out.frame.e1), world.normal.dot(out.frame.e2));
      n2.normalize();
      const Vec2 dir(-n2.y(), n2.x());

      // Plan-space line of the wall, using the mean inlier height to absorb
      // any residual tilt.
      double mean_h = 0.0;
      for (const auto& x : fp.inlier_points) mean_h += out.frame.height(poses[v].apply(x));
      mean_h /= static_cast<double>(fp.inlier_points.size());
      const double nu = world.normal.dot(out.frame.up);
      const double d2 = (world.offset + nu * mean_h) /
                        std::hypot(world.normal.dot(out.frame.e1), world.normal.dot(out.frame.e2));
      const Vec2 p0 = -d2 * n2;

      double smin = std::numeric_limits<double>::infinity();
      double smax = -std::numeric_limits<double>::infinity();
      for (const auto& x : fp.inlier_points) {
        const double s = (out.frame.plan(poses[v].apply(x)) - p0).dot(dir);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
      }
      WallSegment2D seg;
      seg.a = p0 + smin * dir;
      seg.b = p0 + smax * dir;
      seg.image_id = partials[v].image_id;
      seg.source_plane_index = static_cast<int>(p);
      seg.interior_normal = n2;
      out.segments.push_back(seg);
    }
  }
  return out;
}

namespace merge_detail {

inline double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

inline double segment_angle(const WallSegment2D& s) {
  const Vec2 d = s.b - s.a;
  double a = std::atan2(d.y(), d.x());
  if (a < 0.0) a += M_PI;  // undirected
  if (a >= M_PI) a -= M_PI;
  return a;
}

}  // namespace merge_detail

/// Length-weighted misalignment of all segments to the axes rotated by
/// theta, folding angles by 90 degrees:
///   f(theta) = sum_i L_i |wrap(4 (alpha_i - theta))|.
inline double rotation_objective(const std::vector<WallSegment2D>& segments, double theta) {
  double f = 0.0;
  for (const auto& s : segments) {
    f += s.length() * std::abs(merge_detail::wrap_pi(4.0 * (merge_detail::segment_angle(s) - theta)));
  }
  return f;
}

/// Scene rotation estimate: the f-minimizing theta in [0, pi/2). f is
/// piecewise linear with kinks at alpha_i mod pi/2 and (alpha_i + pi/4) mod
/// pi/2, so evaluating the kinks finds the exact minimum; ties break toward
/// the smallest non-negative angle.
inline double estimate_scene_rotation(const std::vector<WallSegment2D>& segments) {
  if (segments.empty()) throw InputError("estimate_scene_rotation: no segments");
  std::vector<double> candidates;
  candidates.reserve(segments.size() * 2);
  const double quarter = M_PI / 2.0;
  for (const auto& s : segments) {
    const double alpha = merge_detail::segment_angle(s);
    candidates.push_back(std::fmod(alpha, quarter));
    candidates.push_back(std::fmod(alpha + M_PI / 4.0, quarter));
  }
  for (double& c : candidates) {
    if (c < 0.0) c += quarter;
  }
  std::sort(candidates.begin(), candidates.end());
  double best_theta = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double theta : candidates) {
    const double f = rotation_objective(segments, theta);
    if (f < best_f - 1e-15) {
      best_f = f;
      best_theta = theta;
    }
  }
  return best_theta;
}

/// Rotate all segments by -theta and snap each to the nearest axis about its
/// midpoint: vertical segments run along the plan y axis, horizontal along
/// x. Segments farther than angle_snap_tol from both axes stay unclassified
/// and keep their rotated endpoints.
inline std::vector<WallSegment2D> snap_axis(const std::vector<WallSegment2D>& segments,
                                            double theta, const MergeParams& params) {
  const double cs = std::cos(-theta), sn = std::sin(-theta);
  auto rot = [&](const Vec2& p) { return Vec2(cs * p.x() - sn * p.y(), sn * p.x() + cs * p.y()); };
  const double tol = rad(params.angle_snap_tol);

  std::vector<WallSegment2D> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    WallSegment2D r = s;
    r.a = rot(s.a);
    r.b = rot(s.b);
    r.interior_normal = rot(s.interior_normal);
    const double alpha = merge_detail::segment_angle(r);
    const double d_horiz = std::min(alpha, M_PI - alpha);
    const double d_vert = std::abs(alpha - M_PI / 2.0);
    const double len = r.length();
    const Vec2 mid = r.center();
    if (d_horiz <= tol && d_horiz <= d_vert) {
      r.orientation = SegmentOrientation::Horizontal;
      r.a = mid - Vec2(len / 2.0, 0.0);
      r.b = mid + Vec2(len / 2.0, 0.0);
      r.interior_normal = Vec2(0.0, r.interior_normal.y() >= 0.0 ? 1.0 : -1.0);
    } else if (d_vert <= tol) {
      r.orientation = SegmentOrientation::Vertical;
      r.a = mid - Vec2(0.0, len / 2.0);
      r.b = mid + Vec2(0.0, len / 2.0);
      r.interior_normal = Vec2(r.interior_normal.x() >= 0.0 ? 1.0 : -1.0, 0.0);
    } else {
      r.orientation = SegmentOrientation::Unclassified;
    }
    out.push_back(r);
  }
  return out;
}

/// One merged wall: member segments of one orientation, the incremental
/// centroid on the perpendicular axis and the union extent along the axis.
struct SegmentCluster {
  int id = -1;
  SegmentOrientation orientation = SegmentOrientation::Unclassified;
  std::vector<WallSegment2D> members;
  double perp_centroid = 0.0;
  double lo = 0.0, hi = 0.0;  // along-axis extent

  bool has_image(int image_id) const {
    for (const auto& m : members) {
      if (m.image_id == image_id) return true;
    }
    return false;
  }
};

namespace merge_detail {

inline double perp_pos(const WallSegment2D& s) {
  return s.orientation == SegmentOrientation::Vertical ? s.center().x() : s.center().y();
}

inline std::pair<double, double> along_interval(const WallSegment2D& s) {
  if (s.orientation == SegmentOrientation::Vertical) {
    return std::minmax(s.a.y(), s.b.y());
  }
  return std::minmax(s.a.x(), s.b.x());
}

/// True if some opposite-orientation segment lies in the along-axis gap
/// between segment and cluster and reaches across their perpendicular
/// corridor; such a wall separates them into distinct physical planes.
inline bool blocked_by_opposite(const WallSegment2D& seg, const SegmentCluster& cluster,
                                const std::vector<WallSegment2D>& opposite, double margin) {
  const auto [slo, shi] = along_interval(seg);
  const double gap_lo = std::min(shi, cluster.hi);
  const double gap_hi = std::max(slo, cluster.lo);
  if (gap_lo >= gap_hi) return false;  // extents touch or overlap, nothing in between
  const double corridor_lo = std::min(perp_pos(seg), cluster.perp_centroid);
  const double corridor_hi = std::max(perp_pos(seg), cluster.perp_centroid);
  for (const auto& o : opposite) {
    if (o.orientation == seg.orientation || o.orientation == SegmentOrientation::Unclassified) {
      continue;
    }
    const double o_pos = perp_pos(o);  // along seg's axis
    if (o_pos < gap_lo - margin || o_pos > gap_hi + margin) continue;
    const auto [olo, ohi] = along_interval(o);  // across seg's axis
    if (ohi + margin < corridor_lo || olo - margin > corridor_hi) continue;
    return true;
  }
  return false;
}

inline void run_pass(std::vector<WallSegment2D> segs, const std::vector<WallSegment2D>& opposite,
                     const MergeParams& params, std::vector<SegmentCluster>* clusters) {
  std::sort(segs.begin(), segs.end(), [](const WallSegment2D& x, const WallSegment2D& y) {
    const double px = perp_pos(x), py = perp_pos(y);
    if (px != py) return px < py;
    const auto ax = along_interval(x), ay = along_interval(y);
    if (ax.first != ay.first) return ax.first < ay.first;
    if (x.image_id != y.image_id) return x.image_id < y.image_id;
    return x.source_plane_index < y.source_plane_index;
  });

  const std::size_t first_new = clusters->size();
  for (const auto& seg : segs) {
    const auto [lo, hi] = along_interval(seg);
    bool found = false;
    for (std::size_t c = first_new; c < clusters->size() && !found; ++c) {
      SegmentCluster& cluster = (*clusters)[c];
      if (cluster.has_image(seg.image_id)) continue;
      if (std::abs(perp_pos(seg) - cluster.perp_centroid) >= params.proximity_threshold) continue;
      const double overlap = std::min(hi, cluster.hi) - std::max(lo, cluster.lo);
      const double denom = std::min(hi - lo, cluster.hi - cluster.lo);
      const bool overlaps = denom > 0.0 && overlap / denom > params.overlap_threshold;
      if (overlaps || !blocked_by_opposite(seg, cluster, opposite, params.margin)) {
        cluster.members.push_back(seg);
        cluster.lo = std::min(cluster.lo, lo);
        cluster.hi = std::max(cluster.hi, hi);
        double sum = 0.0;
        for (const auto& m : cluster.members) sum += perp_pos(m);
        cluster.perp_centroid = sum / static_cast<double>(cluster.members.size());
        found = true;
      }
    }
    if (!found) {
      SegmentCluster fresh;
      fresh.id = static_cast<int>(clusters->size());
      fresh.orientation = seg.orientation;
      fresh.members.push_back(seg);
      fresh.perp_centroid = perp_pos(seg);
      fresh.lo = lo;
      fresh.hi = hi;
      clusters->push_back(std::move(fresh));
    }
  }
}

}  // namespace merge_detail

/// Greedy wall merging: one pass over vertical segments sorted by x, one
/// over horizontal segments sorted by z. A segment joins the first cluster
/// that (a) holds no segment from the same image, (b) lies within
/// proximity_threshold on the perpendicular axis, and (c) either overlaps
/// the cluster's merged extent beyond overlap_threshold or has no
/// opposite-orientation segment in the gap between them (within margin).
/// Unclassified segments are left out. Cluster ids are deterministic.
inline std::vector<SegmentCluster> merge_planes(const std::vector<WallSegment2D>& vertical,
                                                const std::vector<WallSegment2D>& horizontal,
                                                const MergeParams& params) {
  std::vector<SegmentCluster> clusters;
  merge_detail::run_pass(vertical, horizontal, params, &clusters);
  merge_detail::run_pass(horizontal, vertical, params, &clusters);
  return clusters;
}

/// Full g2 output assembly: floor and ceiling, one wall plane per cluster
/// (normal snapped to an axis of the rotated plan, offset the
/// length-weighted mean of member offsets), adjacency from the per-view
/// matrices lifted through cluster membership plus geometric completion of
/// perpendicular corners, and derived lines and junctions.
inline Layout assemble_layout(const std::vector<SegmentCluster>& clusters, const Plane& floor,
                              const Plane& ceiling, const std::vector<PartialLayout>& partials,
                              const std::vector<PoseSE3>& poses, const ProjectionFrame& frame,
                              double theta, const MergeParams& params) {
  (void)poses;
  Layout layout;
  layout.planes.push_back({0, floor, {}});
  layout.planes.push_back({1, ceiling, {}});

  const double cs = std::cos(theta), sn = std::sin(theta);
  auto unrotate = [&](const Vec2& p) {
    return Vec2(cs * p.x() - sn * p.y(), sn * p.x() + cs * p.y());
  };

  for (const auto& cluster : clusters) {
    if (cluster.members.empty() || cluster.orientation == SegmentOrientation::Unclassified) {
      continue;
    }
    const Vec2 axis_normal = cluster.orientation == SegmentOrientation::Vertical
                                 ? Vec2(1.0, 0.0)
                                 : Vec2(0.0, 1.0);
    double sign_vote = 0.0, offset_sum = 0.0, length_sum = 0.0;
    for (const auto& m : cluster.members) {
      sign_vote += m.length() * m.interior_normal.dot(axis_normal);
      offset_sum += m.length() * merge_detail::perp_pos(m);
      length_sum += m.length();
    }
    const double s = sign_vote >= 0.0 ? 1.0 : -1.0;
    const double position = offset_sum / length_sum;

    const Vec2 n2 = unrotate(s * axis_normal);
    LayoutPlane lp;
    lp.id = static_cast<int>(layout.planes.size());
    lp.plane.normal = n2.x() * frame.e1 + n2.y() * frame.e2;
    lp.plane.offset = -s * position;
    lp.plane.semantic_class = SemanticClass::Wall;
    for (const auto& m : cluster.members) lp.sources.push_back({m.image_id, m.source_plane_index});
    layout.planes.push_back(std::move(lp));
  }

  const int n = static_cast<int>(layout.planes.size());
  layout.adjacency = AdjacencyMatrix(n);
  if (n == 2) {
    layout.warnings.push_back("no wall clusters; layout holds only floor and ceiling");
  }
  for (int w = 2; w < n; ++w) {
    layout.adjacency.set(w, 0);
    layout.adjacency.set(w, 1);
  }

  // Wall-wall adjacency lifted from the per-view matrices.
  std::vector<const SegmentCluster*> live;
  for (const auto& c : clusters) {
    if (!c.members.empty() && c.orientation != SegmentOrientation::Unclassified) live.push_back(&c);
  }
  auto cluster_of = [&](int image_id, int plane_index) {
    for (std::size_t c = 0; c < live.size(); ++c) {
      for (const auto& m : live[c]->members) {
        if (m.image_id == image_id && m.source_plane_index == plane_index) {
          return static_cast<int>(c);
        }
      }
    }
    return -1;
  };
  std::set<std::pair<int, int>> candidates;
  for (const auto& partial : partials) {
    const int np = static_cast<int>(partial.planes.size());
    for (int i = 0; i < np; ++i) {
      for (int j = i + 1; j < np; ++j) {
        if (!partial.adjacency.at(i, j)) continue;
        if (partial.planes[i].plane.semantic_class != SemanticClass::Wall ||
            partial.planes[j].plane.semantic_class != SemanticClass::Wall) {
          continue;
        }
        const int ci = cluster_of(partial.image_id, i);
        const int cj = cluster_of(partial.image_id, j);
        if (ci >= 0 && cj >= 0 && ci != cj) candidates.insert(std::minmax(ci, cj));
      }
    }
  }
  // Geometric completion, phase 1: a vertical and a horizontal cluster are a
  // corner candidate when each one's extent reaches the corner position
  // within margin, or falls short of it with no third cluster crossing the
  // gap (a corner no camera observed).
  auto reaches_corner = [&](const SegmentCluster& c, double corner_along,
                            const SegmentCluster& partner) {
    if (corner_along >= c.lo - params.margin && corner_along <= c.hi + params.margin) return true;
    const double gap_lo = std::min(std::max(c.lo, c.hi), corner_along);
    const double gap_hi = std::max(std::min(c.lo, c.hi), corner_along);
    for (const auto* other : live) {
      if (other == &c || other == &partner) continue;
      if (other->orientation == c.orientation) continue;
      if (other->perp_centroid < gap_lo - params.margin ||
          other->perp_centroid > gap_hi + params.margin) {
        continue;
      }
      if (c.perp_centroid >= other->lo - params.margin &&
          c.perp_centroid <= other->hi + params.margin) {
        return false;  // a wall crossing the gap separates the two corners
      }
    }
    return true;
  };
  for (std::size_t a = 0; a < live.size(); ++a) {
    for (std::size_t b = a + 1; b < live.size(); ++b) {
      if (live[a]->orientation == live[b]->orientation) continue;
      const SegmentCluster* vert =
          live[a]->orientation == SegmentOrientation::Vertical ? live[a] : live[b];
      const SegmentCluster* horiz = vert == live[a] ? live[b] : live[a];
      if (reaches_corner(*vert, horiz->perp_centroid, *horiz) &&
          reaches_corner(*horiz, vert->perp_centroid, *vert)) {
        candidates.insert({static_cast<int>(a), static_cast<int>(b)});
      }
    }
  }
  // Phase 2: in a simple rectilinear footprint every wall meets exactly one
  // perpendicular partner per end. Each candidate corner consumes one end of
  // each wall; accept candidates greedily by ascending total corner-to-end
  // distance while both ends are free.
  struct CornerCandidate {
    double total_dist;
    int a, b;
    int side_a, side_b;
  };
  auto end_side = [&](const SegmentCluster& c, double corner) {
    return corner <= 0.5 * (c.lo + c.hi) ? 0 : 1;
  };
  auto end_dist = [&](const SegmentCluster& c, double corner, int side) {
    return std::abs(corner - (side == 0 ? c.lo : c.hi));
  };
  std::vector<CornerCandidate> ranked;
  for (const auto& [a, b] : candidates) {
    const double corner_a = live[b]->perp_centroid;  // along a's axis
    const double corner_b = live[a]->perp_centroid;
    CornerCandidate cand;
    cand.a = a;
    cand.b = b;
    cand.side_a = end_side(*live[a], corner_a);
    cand.side_b = end_side(*live[b], corner_b);
    cand.total_dist =
        end_dist(*live[a], corner_a, cand.side_a) + end_dist(*live[b], corner_b, cand.side_b);
    ranked.push_back(cand);
  }
  std::sort(ranked.begin(), ranked.end(), [](const CornerCandidate& x, const CornerCandidate& y) {
    if (x.total_dist != y.total_dist) return x.total_dist < y.total_dist;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::vector<std::array<bool, 2>> end_used(live.size(), {false, false});
  for (const auto& cand : ranked) {
    if (end_used[cand.a][cand.side_a] || end_used[cand.b][cand.side_b]) continue;
    end_used[cand.a][cand.side_a] = true;
    end_used[cand.b][cand.side_b] = true;
    layout.adjacency.set(2 + cand.a, 2 + cand.b);
  }

  std::vector<Plane> raw;
  raw.reserve(layout.planes.size());
  for (const auto& lp : layout.planes) raw.push_back(lp.plane);
  derive_lines_and_junctions(raw, layout.adjacency, &layout.lines, &layout.junctions);
  return layout;
}

/// The whole g2 stage on aligned partial layouts.
struct MergeResult {
  Layout layout;
  ProjectionFrame frame;
  double rotation = 0.0;
  std::vector<WallSegment2D> snapped_segments;
  std::vector<SegmentCluster> clusters;
  std::vector<std::string> warnings;
};

inline MergeResult merge_views(const std::vector<PartialLayout>& partials,
                               const std::vector<PoseSE3>& poses, const MergeParams& params) {
  MergeResult result;
  auto [floor, ceiling] = average_floor_ceiling(partials, poses);
  ProjectedWalls projected = project_walls(partials, poses, floor);
  result.frame = projected.frame;
  result.warnings = projected.warnings;

  if (projected.segments.empty()) {
    result.layout = assemble_layout({}, floor, ceiling, partials, poses, result.frame, 0.0, params);
    result.layout.warnings.insert(result.layout.warnings.end(), result.warnings.begin(),
                                  result.warnings.end());
    return result;
  }

  result.rotation = estimate_scene_rotation(projected.segments);
  result.snapped_segments = snap_axis(projected.segments, result.rotation, params);

  std::vector<WallSegment2D> vertical, horizontal;
  for (const auto& s : result.snapped_segments) {
    if (s.orientation == SegmentOrientation::Vertical) vertical.push_back(s);
    if (s.orientation == SegmentOrientation::Horizontal) horizontal.push_back(s);
  }
  result.clusters = merge_planes(vertical, horizontal, params);
  result.layout = assemble_layout(result.clusters, floor, ceiling, partials, poses, result.frame,
                                  result.rotation, params);
  result.layout.warnings.insert(result.layout.warnings.end(), result.warnings.begin(),
                                result.warnings.end());
  return result;
}

}  // namespace layoutfuse
