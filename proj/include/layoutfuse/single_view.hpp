#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "layoutfuse/error.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/layout.hpp"
#include "layoutfuse/scene.hpp"

namespace layoutfuse {

/// Tuning of the per-view layout extraction (g1).
struct G1Params {
  double epsilon1 = 0.005;  // depth-consistency tolerance, in units of mean scene depth
  int min_pixels = 50;      // smallest usable plane mask
  Vec3 up_axis = -Vec3::UnitY();  // gravity-up in camera frame (y-down convention)
};

/// A plane fitted from one view's pointmap, with the pixels that produced it.
struct FittedPlane {
  Plane plane;  // camera frame
  int mask_id = -1;
  int pixel_count = 0;
  double fit_rms = 0.0;
  std::vector<Vec3> inlier_points;  // camera frame; feeds wall projection in g2
};

struct SkippedMask {
  int mask_id = -1;
  std::string reason;
};

/// Per-view partial layout in camera coordinates.
struct PartialLayout {
  int image_id = -1;
  std::vector<FittedPlane> planes;
  std::vector<LayoutLine> lines;
  std::vector<LayoutJunction> junctions;
  AdjacencyMatrix adjacency;
  std::vector<SkippedMask> skipped;
};

/// Fit one plane per mask id with at least min_pixels valid pixels. The
/// semantic class comes from the normal direction against the gravity axis
/// (within 30 degrees of up => floor, of -up => ceiling, else wall); at most
/// one floor and one ceiling survive per view, largest mask wins.
inline std::vector<FittedPlane> lift_planes(const Pointmap& pm, const IdMap& masks,
                                            const G1Params& params,
                                            std::vector<SkippedMask>* skipped = nullptr) {
  if (pm.width != masks.width || pm.height != masks.height) {
    throw InputError("lift_planes: pointmap and mask dimensions differ");
  }
  std::map<int, std::vector<Vec3>> by_id;
  for (int v = 0; v < pm.height; ++v) {
    for (int u = 0; u < pm.width; ++u) {
      const int id = masks.at(v, u);
      if (id < 0 || !pm.is_valid(v, u)) continue;
      by_id[id].push_back(pm.at(v, u));
    }
  }

  const double cos30 = std::cos(rad(30.0));
  const Vec3 up = params.up_axis.normalized();
  std::vector<FittedPlane> planes;
  auto record_skip = [&](int id, const std::string& reason) {
    if (skipped) skipped->push_back({id, reason});
  };

  for (auto& [id, points] : by_id) {
    if (static_cast<int>(points.size()) < params.min_pixels) {
      record_skip(id, "below min_pixels (" + std::to_string(points.size()) + ")");
      continue;
    }
    FittedPlane fp;
    fp.mask_id = id;
    fp.pixel_count = static_cast<int>(points.size());
    try {
      PlaneFit fit = fit_plane(points);
      fp.plane = fit.plane;
      fp.fit_rms = fit.residual_rms;
    } catch (const DegenerateInputError& e) {
      record_skip(id, std::string("degenerate fit: ") + e.what());
      continue;
    }
    const double c = fp.plane.normal.dot(up);
    fp.plane.semantic_class = c > cos30    ? SemanticClass::Floor
                              : c < -cos30 ? SemanticClass::Ceiling
                                           : SemanticClass::Wall;
    fp.inlier_points = std::move(points);
    planes.push_back(std::move(fp));
  }

  // At most one floor and one ceiling per view.
  for (SemanticClass cls : {SemanticClass::Floor, SemanticClass::Ceiling}) {
    int best = -1;
    for (std::size_t i = 0; i < planes.size(); ++i) {
      if (planes[i].plane.semantic_class != cls) continue;
      if (best < 0 || planes[i].pixel_count > planes[best].pixel_count) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) continue;
    for (std::size_t i = planes.size(); i-- > 0;) {
      if (planes[i].plane.semantic_class == cls && static_cast<int>(i) != best) {
        record_skip(planes[i].mask_id, std::string("duplicate ") + to_string(cls));
        planes.erase(planes.begin() + i);
      }
    }
  }
  return planes;
}

namespace g1_detail {

inline double median_of(std::vector<double>* values) {
  auto mid = values->begin() + values->size() / 2;
  std::nth_element(values->begin(), mid, values->end());
  double median = *mid;
  if (values->size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(values->begin(), mid));
  }
  return median;
}

}  // namespace g1_detail

/// Depth-consistency adjacency: two planes are adjacent iff their masks share
/// an 8-connected boundary and, along that boundary, the median distance of
/// the boundary pointmap points to the fitted plane intersection line stays
/// below the tolerance in units of the view's mean depth.
///
/// The tolerance is max(epsilon1, 1.5 x median pixel footprint / mean depth):
/// a rasterized boundary point sits up to a pixel footprint away from the
/// true corner, so sub-pixel agreement cannot be demanded of it. At the
/// 512-pixel resolution epsilon1 = 0.005 was calibrated for, the footprint
/// floor is inactive and epsilon1 alone governs.
inline AdjacencyMatrix infer_adjacency(const std::vector<FittedPlane>& planes,
                                       const IdMap& masks, const Pointmap& pm,
                                       const G1Params& params) {
  const int n = static_cast<int>(planes.size());
  AdjacencyMatrix adjacency(n);
  if (n < 2) return adjacency;

  std::map<int, int> plane_of_mask;
  for (int i = 0; i < n; ++i) plane_of_mask[planes[i].mask_id] = i;

  // Boundary samples per unordered plane pair; both sides contribute. Each
  // sample carries the point and its local pixel footprint.
  struct Sample {
    Vec3 point;
    double footprint;
  };
  std::map<std::pair<int, int>, std::vector<Sample>> boundary;
  static constexpr int kOff[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                     {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  for (int v = 0; v < masks.height; ++v) {
    for (int u = 0; u < masks.width; ++u) {
      const int a = masks.at(v, u);
      if (a < 0 || !pm.is_valid(v, u)) continue;
      const auto ia = plane_of_mask.find(a);
      if (ia == plane_of_mask.end()) continue;
      for (const auto& off : kOff) {
        const int vv = v + off[0], uu = u + off[1];
        if (!masks.in_bounds(vv, uu)) continue;
        const int b = masks.at(vv, uu);
        if (b < 0 || b == a || !pm.is_valid(vv, uu)) continue;
        const auto ib = plane_of_mask.find(b);
        if (ib == plane_of_mask.end()) continue;

        double footprint = 0.0;
        for (const auto [dv, du] : {std::pair{0, 1}, {0, -1}, {1, 0}, {-1, 0}}) {
          if (!masks.in_bounds(v + dv, u + du) || !pm.is_valid(v + dv, u + du)) continue;
          if (masks.at(v + dv, u + du) != a) continue;
          footprint = std::max(footprint, (pm.at(v + dv, u + du) - pm.at(v, u)).norm());
        }
        const auto key = std::minmax(ia->second, ib->second);
        boundary[{key.first, key.second}].push_back({pm.at(v, u), footprint});
        break;  // one sample per boundary pixel is enough
      }
    }
  }
  if (boundary.empty()) return adjacency;

  double depth_sum = 0.0;
  std::size_t depth_count = 0;
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    if (!pm.valid[i]) continue;
    depth_sum += pm.points[i].z();
    ++depth_count;
  }
  const double depth_scale = depth_count > 0 ? depth_sum / depth_count : 1.0;
  if (depth_scale <= 0.0) return adjacency;

  for (auto& [pair, samples] : boundary) {
    Line3D line;
    try {
      line = plane_intersection(planes[pair.first].plane, planes[pair.second].plane);
    } catch (const ParallelPlanesError&) {
      continue;  // parallel planes are never adjacent
    }
    std::vector<double> dists, footprints;
    dists.reserve(samples.size());
    footprints.reserve(samples.size());
    for (const auto& s : samples) {
      dists.push_back(line.distance_to(s.point));
      if (s.footprint > 0.0) footprints.push_back(s.footprint);
    }
    const double median = g1_detail::median_of(&dists);
    const double pixel_floor =
        footprints.empty() ? 0.0 : 1.5 * g1_detail::median_of(&footprints) / depth_scale;
    if (median / depth_scale < std::max(params.epsilon1, pixel_floor)) {
      adjacency.set(pair.first, pair.second);
    }
  }
  return adjacency;
}

/// g1: lift planes, infer adjacency, and derive lines and junctions for one
/// view, all in camera coordinates.
inline PartialLayout build_partial_layout(const ViewBundle& bundle, const G1Params& params) {
  PartialLayout partial;
  partial.image_id = bundle.image_id;
  partial.planes = lift_planes(bundle.pointmap_self, bundle.plane_masks, params, &partial.skipped);
  partial.adjacency =
      infer_adjacency(partial.planes, bundle.plane_masks, bundle.pointmap_self, params);
  std::vector<Plane> raw;
  raw.reserve(partial.planes.size());
  for (const auto& fp : partial.planes) raw.push_back(fp.plane);
  derive_lines_and_junctions(raw, partial.adjacency, &partial.lines, &partial.junctions);
  return partial;
}

}  // namespace layoutfuse
