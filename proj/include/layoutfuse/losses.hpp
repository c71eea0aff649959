#pragma once

#include <cmath>
#include <string>

#include "layoutfuse/error.hpp"
#include "layoutfuse/geometry.hpp"

namespace layoutfuse {

struct LossParams {
  double alpha = 0.2;  // confidence regularizer weight; the reference value
                       // is unpublished, so it stays a parameter
  bool metric_mode = false;
};

/// Mean distance-to-origin of the points selected by the gt validity mask.
inline double mean_point_norm(const Pointmap& pm, const Pointmap& gt_mask_source) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    if (!gt_mask_source.valid[i]) continue;
    sum += pm.points[i].norm();
    ++count;
  }
  if (count == 0) throw InputError("regr_loss: no valid pixels in the ground truth");
  return sum / static_cast<double>(count);
}

/// Per-pixel pointmap regression loss over the gt validity mask.
///
/// Non-metric: l(i) = |X_i / z - Xbar_i / zbar|^2 with z and zbar the mean
/// distances of valid points to the origin (scale-invariant by construction).
/// Metric: l(i) = |X_i - Xbar_i|^2 / zbar.
inline Grid<double> regr_loss(const Pointmap& pred, const Pointmap& gt, bool metric_mode) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw InputError("regr_loss: pred and gt dimensions differ");
  }
  const double zbar = mean_point_norm(gt, gt);
  if (zbar <= 0.0) throw InputError("regr_loss: ground-truth scale is zero");

  Grid<double> loss(pred.width, pred.height, 0.0);
  if (metric_mode) {
    for (std::size_t i = 0; i < gt.valid.size(); ++i) {
      if (!gt.valid[i]) continue;
      loss.data[i] = (pred.points[i] - gt.points[i]).squaredNorm() / zbar;
    }
    return loss;
  }
  const double z = mean_point_norm(pred, gt);
  if (z <= 0.0) throw InputError("regr_loss: predicted scale is zero");
  for (std::size_t i = 0; i < gt.valid.size(); ++i) {
    if (!gt.valid[i]) continue;
    loss.data[i] = (pred.points[i] / z - gt.points[i] / zbar).squaredNorm();
  }
  return loss;
}

/// Confidence-weighted loss for one view:
///   sum_{i in D} C_i * l_regr(i) - alpha * log C_i
/// over the gt validity mask D.
inline double conf_loss(const Pointmap& pred, const Pointmap& gt, const ConfidenceMap& conf,
                        const LossParams& params) {
  if (conf.width != gt.width || conf.height != gt.height) {
    throw InputError("conf_loss: confidence dimensions differ from ground truth");
  }
  if (params.alpha <= 0.0) throw InputError("conf_loss: alpha must be positive");
  const Grid<double> loss = regr_loss(pred, gt, params.metric_mode);
  double total = 0.0;
  for (std::size_t i = 0; i < gt.valid.size(); ++i) {
    if (!gt.valid[i]) continue;
    const double c = conf.data[i];
    if (!(c > 0.0)) {
      throw InputError("conf_loss: non-positive confidence at index " + std::to_string(i));
    }
    total += c * loss.data[i] - params.alpha * std::log(c);
  }
  return total;
}

}  // namespace layoutfuse
