#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "layoutfuse/align.hpp"
#include "layoutfuse/error.hpp"
#include "layoutfuse/merge.hpp"
#include "layoutfuse/metrics.hpp"
#include "layoutfuse/scene.hpp"
#include "layoutfuse/single_view.hpp"

namespace layoutfuse {

/// Worker cap for per-view stages; LAYOUTFUSE_THREADS overrides.
inline int thread_cap() {
  if (const char* env = std::getenv("LAYOUTFUSE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
inline void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(thread_cap(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct PipelineOptions {
  G1Params g1;
  AlignOptions align;
  MergeParams merge;
};

struct PipelineResult {
  std::vector<PartialLayout> partials;  // ordered by ascending image id
  AlignmentState alignment;
  AlignReport align_report;
  ViewGraph view_graph;
  MergeResult merged;

  const Layout& layout() const { return merged.layout; }

  std::vector<PoseSE3> poses_by_view() const {
    std::vector<PoseSE3> poses;
    poses.reserve(partials.size());
    for (const auto& p : partials) {
      poses.push_back(alignment.poses[alignment.view_index(p.image_id)]);
    }
    return poses;
  }
};

/// g1 for every distinct view among the bundles; each view uses its
/// lowest-partner bundle. Views process concurrently.
inline std::vector<PartialLayout> run_g1(const std::vector<ViewBundle>& bundles,
                                         const G1Params& params) {
  std::map<int, const ViewBundle*> per_view;
  for (const auto& b : bundles) {
    auto [it, fresh] = per_view.emplace(b.image_id, &b);
    if (!fresh && b.partner_id < it->second->partner_id) it->second = &b;
  }
  std::vector<const ViewBundle*> ordered;
  for (const auto& [id, b] : per_view) ordered.push_back(b);
  std::vector<PartialLayout> partials(ordered.size());
  parallel_for(static_cast<int>(ordered.size()),
               [&](int i) { partials[i] = build_partial_layout(*ordered[i], params); });
  return partials;
}

/// The full post-network pipeline: per-view g1, global alignment, g2 merge.
/// Bundles are processed in canonical (image_id, partner_id) order, so the
/// result is exactly invariant to the order they arrive in.
inline PipelineResult run_pipeline(const std::vector<ViewBundle>& bundles_in,
                                   const PipelineOptions& opts = {}) {
  if (bundles_in.empty()) throw InputError("run_pipeline: no bundles");
  std::vector<ViewBundle> bundles = bundles_in;
  std::sort(bundles.begin(), bundles.end(), [](const ViewBundle& a, const ViewBundle& b) {
    return std::tie(a.image_id, a.partner_id) < std::tie(b.image_id, b.partner_id);
  });
  PipelineResult result;
  result.partials = run_g1(bundles, opts.g1);
  result.view_graph = build_view_graph(bundles);
  auto [state, report] = align(bundles, opts.align);
  result.alignment = std::move(state);
  result.align_report = report;
  result.merged = merge_views(result.partials, result.poses_by_view(), opts.merge);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation against a ground-truth scene
// ---------------------------------------------------------------------------

struct LadderEntry {
  MatchThresholds thresholds;
  PlanePrecisionRecall pr;
};

struct EvalReport {
  SegDepthMetrics reprojection;  // re-IoU / re-PE / re-EE / re-RMSE, view mean
  std::map<int, AccuracyAt> accuracy;  // keyed by tau in degrees
  double maa = 0.0;
  int excluded_pairs = 0;
  PlanePrecisionRecall pr;           // at the default thresholds
  std::vector<LadderEntry> ladder;   // threshold sweep
};

/// Predicted planes expressed in the ground-truth world frame: the layout
/// lives in the anchor view's frame, so the anchor's ground-truth pose maps
/// it back to the scene frame.
inline std::vector<Plane> layout_planes_in_world(const Layout& layout, const PoseSE3& anchor_gt) {
  std::vector<Plane> planes;
  planes.reserve(layout.planes.size());
  for (const auto& lp : layout.planes) planes.push_back(transform_plane(lp.plane, anchor_gt));
  return planes;
}

/// Full evaluation: reprojection metrics per view at the predicted poses
/// against ground-truth structural renders, relative pose accuracies, and 3D
/// plane precision/recall in the scene frame.
inline EvalReport evaluate_against_scene(const Scene& scene, const Layout& layout,
                                         const std::vector<int>& image_ids,
                                         const std::vector<PoseSE3>& pred_poses,
                                         const MatchThresholds& thresholds = {}) {
  if (image_ids.size() != pred_poses.size() || image_ids.empty()) {
    throw InputError("evaluate_against_scene: ids and poses disagree");
  }
  EvalReport report;

  // Reprojection: render the predicted layout from each predicted camera.
  // A view whose reprojection is empty (open layout, camera outside the
  // reconstructed volume) scores as a total miss.
  SegDepthMetrics sum;
  for (std::size_t v = 0; v < image_ids.size(); ++v) {
    const int cam_id = image_ids[v];
    if (cam_id < 0 || cam_id >= static_cast<int>(scene.cameras.size())) {
      throw InputError("evaluate_against_scene: image id " + std::to_string(cam_id) +
                       " has no scene camera");
    }
    const Camera& cam = scene.cameras[cam_id];
    auto [gt_depth, gt_seg] = render_structural_depth(scene, cam_id);
    auto [pred_seg, pred_depth] =
        reproject_layout(layout, pred_poses[v], cam.intrinsics, cam.width, cam.height);
    SegDepthMetrics m;
    try {
      m = seg_depth_metrics(pred_seg, gt_seg, pred_depth, gt_depth);
    } catch (const MetricError&) {
      double gt_mean = 0.0;
      for (double d : gt_depth.data) gt_mean += d;
      m = {0.0, 100.0, std::hypot(cam.width, cam.height),
           gt_mean / static_cast<double>(gt_depth.data.size())};
    }
    sum.iou_pct += m.iou_pct;
    sum.pe_pct += m.pe_pct;
    sum.ee += m.ee;
    sum.rmse += m.rmse;
  }
  const double nv = static_cast<double>(image_ids.size());
  report.reprojection = {sum.iou_pct / nv, sum.pe_pct / nv, sum.ee / nv, sum.rmse / nv};

  // Relative pose accuracy.
  if (image_ids.size() >= 2) {
    std::vector<PoseSE3> gt;
    gt.reserve(image_ids.size());
    for (int id : image_ids) gt.push_back(scene.cameras[id].pose);
    const RelativePoseErrors errors = relative_pose_errors(pred_poses, gt);
    report.excluded_pairs = errors.excluded_pairs;
    for (int tau : {5, 10, 15, 30}) {
      report.accuracy[tau] = accuracy_at(errors.pairs, tau);
    }
    report.maa = maa30(errors.pairs);
  }

  // 3D plane matching in the scene frame.
  const int anchor_id = *std::min_element(image_ids.begin(), image_ids.end());
  const std::vector<Plane> pred_world =
      layout_planes_in_world(layout, scene.cameras[anchor_id].pose);
  const std::optional<Vec3> interior = scene.interior_point();
  report.pr = plane_precision_recall(pred_world, scene.planes, thresholds, interior);
  for (const MatchThresholds t :
       {MatchThresholds{5.0, 0.1}, MatchThresholds{10.0, 0.15}, MatchThresholds{15.0, 0.2},
        MatchThresholds{30.0, 0.4}}) {
    report.ladder.push_back({t, plane_precision_recall(pred_world, scene.planes, t, interior)});
  }
  return report;
}

}  // namespace layoutfuse
