#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "layoutfuse/error.hpp"
#include "layoutfuse/faces.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"

namespace layoutfuse {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// via shortest augmenting paths with potentials. Returns row -> column.
inline std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0) return {};
  if (n > m) throw InputError("hungarian_min_cost: needs rows <= cols");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

// ---------------------------------------------------------------------------
// 2D segmentation and depth metrics
// ---------------------------------------------------------------------------

struct SegDepthMetrics {
  double iou_pct = 0.0;
  double pe_pct = 0.0;
  double ee = 0.0;
  double rmse = 0.0;
};

namespace metrics_detail {

inline std::vector<Vec2> edge_pixels(const IdMap& seg) {
  std::vector<Vec2> edges;
  for (int v = 0; v < seg.height; ++v) {
    for (int u = 0; u < seg.width; ++u) {
      const int id = seg.at(v, u);
      const bool edge = (seg.in_bounds(v, u - 1) && seg.at(v, u - 1) != id) ||
                        (seg.in_bounds(v, u + 1) && seg.at(v, u + 1) != id) ||
                        (seg.in_bounds(v - 1, u) && seg.at(v - 1, u) != id) ||
                        (seg.in_bounds(v + 1, u) && seg.at(v + 1, u) != id);
      if (edge) edges.push_back({static_cast<double>(u), static_cast<double>(v)});
    }
  }
  return edges;
}

inline double mean_nearest_distance(const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
  if (from.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace metrics_detail

/// IoU / PE / EE / RMSE of a predicted plane segmentation and depth against
/// ground truth. Plane ids correspond through a maximum-total-overlap
/// one-to-one matching; IoU averages intersection-over-union over matched
/// pairs, PE is the percentage of gt-labeled pixels whose matched label
/// disagrees, EE the symmetrized mean distance between layout-edge pixels,
/// RMSE the depth error over pixels valid on both sides.
inline SegDepthMetrics seg_depth_metrics(const IdMap& pred_seg, const IdMap& gt_seg,
                                         const DepthMap& pred_depth, const DepthMap& gt_depth) {
  if (pred_seg.width != gt_seg.width || pred_seg.height != gt_seg.height ||
      pred_depth.width != gt_depth.width || pred_depth.height != gt_depth.height) {
    throw InputError("seg_depth_metrics: dimensions differ");
  }
  std::set<int> pred_ids, gt_ids;
  std::map<std::pair<int, int>, long> overlap;
  long domain = 0;
  for (int v = 0; v < gt_seg.height; ++v) {
    for (int u = 0; u < gt_seg.width; ++u) {
      const int g = gt_seg.at(v, u);
      const int p = pred_seg.at(v, u);
      if (p >= 0) pred_ids.insert(p);
      if (g < 0) continue;
      ++domain;
      gt_ids.insert(g);
      if (p >= 0) ++overlap[{p, g}];
    }
  }
  if (gt_ids.empty() || pred_ids.empty()) {
    throw MetricError("seg_depth_metrics: empty segmentation");
  }

  const std::vector<int> pred_list(pred_ids.begin(), pred_ids.end());
  const std::vector<int> gt_list(gt_ids.begin(), gt_ids.end());
  const bool pred_rows = pred_list.size() <= gt_list.size();
  const std::size_t rows = pred_rows ? pred_list.size() : gt_list.size();
  const std::size_t cols = pred_rows ? gt_list.size() : pred_list.size();
  Eigen::MatrixXd cost(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const int p = pred_rows ? pred_list[r] : pred_list[c];
      const int g = pred_rows ? gt_list[c] : gt_list[r];
      const auto it = overlap.find({p, g});
      cost(r, c) = -(it == overlap.end() ? 0.0 : static_cast<double>(it->second));
    }
  }
  const std::vector<int> assign = hungarian_min_cost(cost);
  std::map<int, int> gt_of_pred;
  for (std::size_t r = 0; r < rows; ++r) {
    const int p = pred_rows ? pred_list[r] : pred_list[assign[r]];
    const int g = pred_rows ? gt_list[assign[r]] : gt_list[r];
    if (overlap.count({p, g}) && overlap[{p, g}] > 0) gt_of_pred[p] = g;
  }

  SegDepthMetrics out;
  double iou_sum = 0.0;
  for (const auto& [p, g] : gt_of_pred) {
    long inter = overlap[{p, g}];
    long uni = 0;
    for (int v = 0; v < gt_seg.height; ++v) {
      for (int u = 0; u < gt_seg.width; ++u) {
        if (gt_seg.at(v, u) < 0) continue;
        if (pred_seg.at(v, u) == p || gt_seg.at(v, u) == g) ++uni;
      }
    }
    iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
  }
  out.iou_pct = gt_of_pred.empty() ? 0.0 : 100.0 * iou_sum / static_cast<double>(gt_of_pred.size());

  long wrong = 0;
  for (int v = 0; v < gt_seg.height; ++v) {
    for (int u = 0; u < gt_seg.width; ++u) {
      const int g = gt_seg.at(v, u);
      if (g < 0) continue;
      const int p = pred_seg.at(v, u);
      const auto it = p >= 0 ? gt_of_pred.find(p) : gt_of_pred.end();
      if (it == gt_of_pred.end() || it->second != g) ++wrong;
    }
  }
  out.pe_pct = 100.0 * static_cast<double>(wrong) / static_cast<double>(domain);

  const auto pred_edges = metrics_detail::edge_pixels(pred_seg);
  const auto gt_edges = metrics_detail::edge_pixels(gt_seg);
  if (pred_edges.empty() && gt_edges.empty()) {
    out.ee = 0.0;
  } else if (pred_edges.empty() || gt_edges.empty()) {
    out.ee = std::hypot(gt_seg.width, gt_seg.height);  // maximal disagreement
  } else {
    out.ee = 0.5 * (metrics_detail::mean_nearest_distance(pred_edges, gt_edges) +
                    metrics_detail::mean_nearest_distance(gt_edges, pred_edges));
  }

  double se = 0.0;
  long nd = 0;
  for (std::size_t i = 0; i < gt_depth.data.size(); ++i) {
    if (gt_depth.data[i] <= 0.0 || pred_depth.data[i] <= 0.0) continue;
    const double d = pred_depth.data[i] - gt_depth.data[i];
    se += d * d;
    ++nd;
  }
  out.rmse = nd > 0 ? std::sqrt(se / static_cast<double>(nd)) : 0.0;
  return out;
}

/// Re-render a layout from a camera: nearest positive-depth face hit per
/// pixel, clipped to the layout's reconstructed room volume. A camera
/// outside the volume, or a layout whose walls do not close a volume at all,
/// yields an all-invalid result.
inline std::pair<IdMap, DepthMap> reproject_layout(const Layout& layout, const PoseSE3& pose,
                                                   const Intrinsics& K, int width, int height) {
  IdMap seg(width, height, -1);
  DepthMap depth(width, height, 0.0);
  RoomFaces room;
  try {
    room = faces_from_layout(layout);
  } catch (const InputError&) {
    return {std::move(seg), std::move(depth)};  // open layout: nothing to hit
  }
  const bool unbounded_slab = room.footprint.empty();
  if (!unbounded_slab && !room.contains(pose.translation)) {
    return {std::move(seg), std::move(depth)};
  }
  if (unbounded_slab) {
    const double h = room.frame.height(pose.translation);
    if (h <= room.height_floor || h >= room.height_ceiling) {
      return {std::move(seg), std::move(depth)};
    }
  }
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
      const Vec3 dir_world = pose.rotation * dir_cam;
      if (auto hit = raycast(room, pose.translation, dir_world)) {
        seg.at(v, u) = hit->plane_id;
        depth.at(v, u) = hit->t;
      }
    }
  }
  return {std::move(seg), std::move(depth)};
}

// ---------------------------------------------------------------------------
// Relative pose metrics
// ---------------------------------------------------------------------------

struct PoseErrorPair {
  int i = -1;
  int j = -1;
  double rotation_error = 0.0;           // degrees
  double translation_angle_error = 0.0;  // degrees
};

struct RelativePoseErrors {
  std::vector<PoseErrorPair> pairs;
  int excluded_pairs = 0;  // near-zero ground-truth baselines
};

/// Relative rotation and translation-direction errors over all ordered view
/// pairs. Pairs whose ground-truth baseline is (near) zero have no defined
/// translation direction and are excluded.
inline RelativePoseErrors relative_pose_errors(const std::vector<PoseSE3>& pred,
                                               const std::vector<PoseSE3>& gt) {
  if (pred.size() != gt.size() || pred.size() < 2) {
    throw InputError("relative_pose_errors: need equal pose counts >= 2");
  }
  RelativePoseErrors out;
  const int n = static_cast<int>(pred.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const PoseSE3 rel_p = pred[i].inverse() * pred[j];
      const PoseSE3 rel_g = gt[i].inverse() * gt[j];
      if (rel_g.translation.norm() < 1e-9) {
        ++out.excluded_pairs;
        continue;
      }
      PoseErrorPair pe;
      pe.i = i;
      pe.j = j;
      pe.rotation_error = deg(rotation_angle(rel_p.rotation, rel_g.rotation));
      pe.translation_angle_error = rel_p.translation.norm() < 1e-12
                                       ? 180.0
                                       : deg(vector_angle(rel_p.translation, rel_g.translation));
      out.pairs.push_back(pe);
    }
  }
  return out;
}

struct AccuracyAt {
  double rra_pct = 0.0;
  double rta_pct = 0.0;
};

/// RRA@tau and RTA@tau: percentage of pairs with error strictly below tau.
inline AccuracyAt accuracy_at(const std::vector<PoseErrorPair>& errors, double tau_deg) {
  if (errors.empty()) return {0.0, 0.0};
  long rra = 0, rta = 0;
  for (const auto& e : errors) {
    if (e.rotation_error < tau_deg) ++rra;
    if (e.translation_angle_error < tau_deg) ++rta;
  }
  const double n = static_cast<double>(errors.size());
  return {100.0 * rra / n, 100.0 * rta / n};
}

/// mAA@30: area under acc(t) for t in [0, 30] degrees, where acc(t) is the
/// fraction of pairs whose worse error (rotation vs translation) is below t.
/// Computed exactly from the piecewise-constant accuracy curve.
inline double maa30(const std::vector<PoseErrorPair>& errors) {
  if (errors.empty()) return 0.0;
  double area = 0.0;
  for (const auto& e : errors) {
    const double worst = std::max(e.rotation_error, e.translation_angle_error);
    area += std::max(0.0, 30.0 - worst);
  }
  return area / (30.0 * static_cast<double>(errors.size()));
}

// ---------------------------------------------------------------------------
// 3D plane precision / recall
// ---------------------------------------------------------------------------

struct MatchThresholds {
  double angle_deg = 10.0;
  double offset_m = 0.15;
};

struct PlanePrecisionRecall {
  double precision_pct = 0.0;
  double recall_pct = 0.0;
  int matched = 0;
  bool degenerate = false;  // one of the sides was empty
};

/// One-to-one plane matching maximizing match count over pairs within both
/// thresholds (cost angle + offset/offset_m breaks ties), then
/// precision = matched / |pred| and recall = matched / |gt|. When a
/// reference interior point is given, both sides are sign-normalized toward
/// it before comparison.
inline PlanePrecisionRecall plane_precision_recall(
    const std::vector<Plane>& pred, const std::vector<Plane>& gt, const MatchThresholds& thr,
    const std::optional<Vec3>& reference_interior = std::nullopt) {
  PlanePrecisionRecall out;
  if (pred.empty() || gt.empty()) {
    out.degenerate = true;
    return out;
  }
  auto normalized = [&](const Plane& p) {
    return reference_interior ? p.oriented_toward(*reference_interior) : p;
  };
  std::vector<Plane> a, b;
  for (const auto& p : pred) a.push_back(normalized(p));
  for (const auto& p : gt) b.push_back(normalized(p));

  const double big = 1e9;
  const bool pred_rows = a.size() <= b.size();
  const std::size_t rows = pred_rows ? a.size() : b.size();
  const std::size_t cols = pred_rows ? b.size() : a.size();
  Eigen::MatrixXd cost(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Plane& pp = pred_rows ? a[r] : a[c];
      const Plane& pg = pred_rows ? b[c] : b[r];
      const double angle = deg(plane_angle(pp, pg));
      const double doff = std::abs(pp.offset - pg.offset);
      cost(r, c) = (angle < thr.angle_deg && doff < thr.offset_m)
                       ? angle + doff / thr.offset_m
                       : big;
    }
  }
  const std::vector<int> assign = hungarian_min_cost(cost);
  for (std::size_t r = 0; r < rows; ++r) {
    if (assign[r] >= 0 && cost(r, assign[r]) < big) ++out.matched;
  }
  out.precision_pct = 100.0 * out.matched / static_cast<double>(pred.size());
  out.recall_pct = 100.0 * out.matched / static_cast<double>(gt.size());
  return out;
}

}  // namespace layoutfuse
