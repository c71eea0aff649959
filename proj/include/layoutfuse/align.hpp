#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "layoutfuse/error.hpp"
#include "layoutfuse/geometry.hpp"
#include "layoutfuse/scene.hpp"

namespace layoutfuse {

struct ViewGraphEdge {
  int n = -1;
  int m = -1;  // image ids, n < m
  double mean_confidence = 0.0;
};

/// Pairwise view graph with its maximum-confidence spanning tree (computed as
/// an MST on negated weights). On disconnected graphs mst_edges holds a
/// spanning forest and `connected` is false.
struct ViewGraph {
  std::vector<int> vertices;  // image ids, ascending
  std::vector<ViewGraphEdge> edges;
  std::vector<std::size_t> mst_edges;  // indices into edges
  bool connected = true;
  std::vector<int> component_of;  // per vertex
};

inline ViewGraph build_view_graph(const std::vector<ViewBundle>& bundles) {
  if (bundles.empty()) throw InputError("build_view_graph: no bundles");
  ViewGraph g;
  std::map<int, int> vid;
  for (const auto& b : bundles) {
    vid.emplace(b.image_id, 0);
    vid.emplace(b.partner_id, 0);
  }
  for (auto& [id, idx] : vid) {
    idx = static_cast<int>(g.vertices.size());
    g.vertices.push_back(id);
  }

  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<int, int>, Acc> acc;
  for (const auto& b : bundles) {
    const auto key = std::minmax(b.image_id, b.partner_id);
    Acc& a = acc[{key.first, key.second}];
    auto add = [&](const ConfidenceMap& c, const Pointmap& pm) {
      for (std::size_t i = 0; i < c.data.size(); ++i) {
        if (!pm.valid[i]) continue;
        a.sum += c.data[i];
        ++a.count;
      }
    };
    add(b.confidence_self, b.pointmap_self);
    add(b.confidence_other, b.pointmap_other);
  }
  for (const auto& [key, a] : acc) {
    g.edges.push_back({key.first, key.second, a.count ? a.sum / a.count : 0.0});
  }

  // Kruskal on descending confidence; deterministic tie-break on ids.
  std::vector<std::size_t> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = g.edges[a];
    const auto& eb = g.edges[b];
    if (ea.mean_confidence != eb.mean_confidence) return ea.mean_confidence > eb.mean_confidence;
    return std::tie(ea.n, ea.m) < std::tie(eb.n, eb.m);
  });
  std::vector<int> parent(g.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t ei : order) {
    const int a = find(vid.at(g.edges[ei].n));
    const int b = find(vid.at(g.edges[ei].m));
    if (a == b) continue;
    parent[a] = b;
    g.mst_edges.push_back(ei);
  }
  g.component_of.resize(g.vertices.size());
  std::map<int, int> root_label;
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    const int r = find(static_cast<int>(i));
    auto [it, fresh] = root_label.emplace(r, static_cast<int>(root_label.size()));
    g.component_of[i] = it->second;
  }
  g.connected = root_label.size() <= 1;
  return g;
}

/// Joint state of the global alignment: per-view camera-to-world poses, one
/// positive scale per bundle edge (constrained to a unit product), and the
/// per-view world-frame pointmaps chi.
struct AlignmentState {
  std::vector<int> image_ids;  // ascending; defines the view index order
  std::vector<PoseSE3> poses;
  std::vector<double> scales;             // per bundle
  std::vector<Pointmap> global_pointmaps;  // chi, per view

  int view_index(int image_id) const {
    const auto it = std::lower_bound(image_ids.begin(), image_ids.end(), image_id);
    if (it == image_ids.end() || *it != image_id) {
      throw InputError("AlignmentState: unknown image id " + std::to_string(image_id));
    }
    return static_cast<int>(it - image_ids.begin());
  }
};

struct AlignReport {
  int iterations = 0;
  double final_objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

struct AlignOptions {
  int max_iters = 100;
  double lr = 1e-3;    // initial line-search step, adapted across iterations
  double tol = 1e-7;   // gradient-norm stopping threshold
};

namespace align_detail {

// One (bundle, view-slot) term of the alignment objective, with only the
// valid pixels retained.
struct Block {
  int edge = -1;       // bundle index; selects sigma and the pose
  int pose_view = -1;  // view whose pose maps the block into the world
  int chi_view = -1;   // view whose chi the block constrains
  std::vector<std::uint32_t> px;
  Eigen::Matrix3Xd X;
  Eigen::VectorXd C;
};

struct Problem {
  std::vector<int> image_ids;
  std::vector<Block> blocks;
  std::vector<int> map_width, map_height;  // per view
};

inline Problem build_problem(const std::vector<ViewBundle>& bundles) {
  if (bundles.empty()) throw InputError("align: no bundles");
  Problem prob;
  std::map<int, int> vid;
  for (const auto& b : bundles) {
    vid.emplace(b.image_id, 0);
    vid.emplace(b.partner_id, 0);
  }
  for (auto& [id, idx] : vid) {
    idx = static_cast<int>(prob.image_ids.size());
    prob.image_ids.push_back(id);
  }
  prob.map_width.assign(prob.image_ids.size(), 0);
  prob.map_height.assign(prob.image_ids.size(), 0);

  auto make_block = [](int edge, int pose_view, int chi_view, const Pointmap& pm,
                       const ConfidenceMap& conf) {
    Block blk;
    blk.edge = edge;
    blk.pose_view = pose_view;
    blk.chi_view = chi_view;
    const std::size_t n = pm.valid_count();
    blk.px.reserve(n);
    blk.X.resize(3, static_cast<Eigen::Index>(n));
    blk.C.resize(static_cast<Eigen::Index>(n));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < pm.points.size(); ++i) {
      if (!pm.valid[i]) continue;
      blk.px.push_back(static_cast<std::uint32_t>(i));
      blk.X.col(k) = pm.points[i];
      blk.C[k] = conf.data[i];
      ++k;
    }
    return blk;
  };

  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const auto& b = bundles[e];
    const int vi = vid.at(b.image_id);
    const int vj = vid.at(b.partner_id);
    prob.map_width[vi] = b.pointmap_self.width;
    prob.map_height[vi] = b.pointmap_self.height;
    prob.map_width[vj] = b.pointmap_other.width;
    prob.map_height[vj] = b.pointmap_other.height;
    prob.blocks.push_back(make_block(static_cast<int>(e), vi, vi, b.pointmap_self, b.confidence_self));
    prob.blocks.push_back(
        make_block(static_cast<int>(e), vi, vj, b.pointmap_other, b.confidence_other));
  }
  return prob;
}

}  // namespace align_detail

/// Weighted rigid registration (Kabsch): the rotation and translation
/// minimizing sum_i w_i |dst_i - (R src_i + t)|^2.
inline PoseSE3 umeyama_rigid(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst,
                             const Eigen::VectorXd& weights) {
  if (src.cols() != dst.cols() || src.cols() != weights.size() || src.cols() < 3) {
    throw InputError("umeyama_rigid: bad correspondence set");
  }
  const double wsum = weights.sum();
  if (wsum <= 0.0) throw InputError("umeyama_rigid: zero total weight");
  const Vec3 mu_s = (src * weights) / wsum;
  const Vec3 mu_d = (dst * weights) / wsum;
  Mat3 H = Mat3::Zero();
  for (Eigen::Index i = 0; i < src.cols(); ++i) {
    H += weights[i] * (src.col(i) - mu_s) * (dst.col(i) - mu_d).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) S(2, 2) = -1.0;
  PoseSE3 pose;
  pose.rotation = svd.matrixV() * S * svd.matrixU().transpose();
  pose.translation = mu_d - pose.rotation * mu_s;
  return pose;
}

/// Exact evaluation of the alignment objective
///   sum_e sum_{v in e} sum_i C_i^{v,e} |chi_i^v - sigma_e T_e X_i^{v,e}|^2
/// over the valid pixels of every bundle.
inline double align_objective(const AlignmentState& state, const std::vector<ViewBundle>& bundles) {
  const align_detail::Problem prob = align_detail::build_problem(bundles);
  if (state.poses.size() != prob.image_ids.size() || state.scales.size() != bundles.size() ||
      state.global_pointmaps.size() != prob.image_ids.size()) {
    throw InputError("align_objective: state dimensions do not match bundles");
  }
  for (double s : state.scales) {
    if (!(s > 0.0)) throw DomainError("align_objective: scale must be positive");
  }
  double total = 0.0;
  for (const auto& blk : prob.blocks) {
    const PoseSE3& T = state.poses[blk.pose_view];
    const double sigma = state.scales[blk.edge];
    const Pointmap& chi = state.global_pointmaps[blk.chi_view];
    for (Eigen::Index k = 0; k < blk.X.cols(); ++k) {
      const Vec3 y = T.rotation * blk.X.col(k) + T.translation;
      const Vec3 r = chi.points[blk.px[k]] - sigma * y;
      total += blk.C[k] * r.squaredNorm();
    }
  }
  return total;
}

/// Analytic gradient of the alignment objective. Pose gradients are with
/// respect to a left-multiplicative tangent [omega; u] (T <- exp(xi) T with
/// x -> x + omega cross x + u); scale gradients are with respect to
/// log sigma_e, unprojected. Matches central finite differences under the
/// same retraction.
struct AlignGradient {
  std::vector<Eigen::Matrix<double, 6, 1>> pose;  // per view, [omega; u]
  std::vector<double> log_scale;                  // per bundle

  double squared_norm(int skip_view = -1) const {
    double s = 0.0;
    for (std::size_t v = 0; v < pose.size(); ++v) {
      if (static_cast<int>(v) != skip_view) s += pose[v].squaredNorm();
    }
    for (double g : log_scale) s += g * g;
    return s;
  }
};

namespace align_detail {

inline AlignGradient gradient_impl(const Problem& prob, const AlignmentState& state) {
  AlignGradient grad;
  grad.pose.assign(state.poses.size(), Eigen::Matrix<double, 6, 1>::Zero());
  grad.log_scale.assign(state.scales.size(), 0.0);
  for (const auto& blk : prob.blocks) {
    const PoseSE3& T = state.poses[blk.pose_view];
    const double sigma = state.scales[blk.edge];
    const Pointmap& chi = state.global_pointmaps[blk.chi_view];
    Vec3 g_omega = Vec3::Zero(), g_u = Vec3::Zero();
    double g_sigma = 0.0;
    for (Eigen::Index k = 0; k < blk.X.cols(); ++k) {
      const Vec3 y = T.rotation * blk.X.col(k) + T.translation;
      const Vec3 r = chi.points[blk.px[k]] - sigma * y;
      const double c = blk.C[k];
      g_u -= 2.0 * sigma * c * r;
      g_omega -= 2.0 * sigma * c * y.cross(r);
      g_sigma -= 2.0 * c * y.dot(r);
    }
    grad.pose[blk.pose_view].head<3>() += g_omega;
    grad.pose[blk.pose_view].tail<3>() += g_u;
    grad.log_scale[blk.edge] += sigma * g_sigma;
  }
  return grad;
}

inline void update_chi(const Problem& prob, AlignmentState* state) {
  for (std::size_t v = 0; v < state->global_pointmaps.size(); ++v) {
    Pointmap& chi = state->global_pointmaps[v];
    if (chi.width != prob.map_width[v] || chi.height != prob.map_height[v]) {
      chi = Pointmap(prob.map_width[v], prob.map_height[v]);
    }
    std::fill(chi.points.begin(), chi.points.end(), Vec3::Zero());
    std::fill(chi.valid.begin(), chi.valid.end(), 0);
  }
  std::vector<std::vector<double>> den(state->global_pointmaps.size());
  for (std::size_t v = 0; v < den.size(); ++v) {
    den[v].assign(state->global_pointmaps[v].points.size(), 0.0);
  }
  for (const auto& blk : prob.blocks) {
    const PoseSE3& T = state->poses[blk.pose_view];
    const double sigma = state->scales[blk.edge];
    Pointmap& chi = state->global_pointmaps[blk.chi_view];
    for (Eigen::Index k = 0; k < blk.X.cols(); ++k) {
      const Vec3 y = sigma * (T.rotation * blk.X.col(k) + T.translation);
      chi.points[blk.px[k]] += blk.C[k] * y;
      den[blk.chi_view][blk.px[k]] += blk.C[k];
    }
  }
  for (std::size_t v = 0; v < den.size(); ++v) {
    Pointmap& chi = state->global_pointmaps[v];
    for (std::size_t i = 0; i < den[v].size(); ++i) {
      if (den[v][i] > 0.0) {
        chi.points[i] /= den[v][i];
        chi.valid[i] = 1;
      }
    }
  }
}

inline double objective_impl(const Problem& prob, const AlignmentState& state) {
  double total = 0.0;
  for (const auto& blk : prob.blocks) {
    const PoseSE3& T = state.poses[blk.pose_view];
    const double sigma = state.scales[blk.edge];
    const Pointmap& chi = state.global_pointmaps[blk.chi_view];
    for (Eigen::Index k = 0; k < blk.X.cols(); ++k) {
      const Vec3 y = T.rotation * blk.X.col(k) + T.translation;
      const Vec3 r = chi.points[blk.px[k]] - sigma * y;
      total += blk.C[k] * r.squaredNorm();
    }
  }
  return total;
}

/// Initial poses: per-edge rigid registration propagated over the MST from
/// the anchor (lowest image id).
inline void init_poses(const Problem& prob, const std::vector<ViewBundle>& bundles,
                       const ViewGraph& graph, AlignmentState* state) {
  std::map<int, int> vid;
  for (std::size_t i = 0; i < prob.image_ids.size(); ++i) vid[prob.image_ids[i]] = static_cast<int>(i);

  // Self pointmap per view: from its lowest-partner bundle.
  std::vector<int> self_bundle(prob.image_ids.size(), -1);
  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const int v = vid.at(bundles[e].image_id);
    if (self_bundle[v] < 0 || bundles[e].partner_id < bundles[self_bundle[v]].partner_id) {
      self_bundle[v] = static_cast<int>(e);
    }
  }

  // Relative pose of view b in view a's frame, from bundle (a, b)'s other
  // slot matched against b's own self map on common valid pixels.
  auto relative = [&](int a, int b, PoseSE3* out) {
    int bundle_ab = -1;
    for (std::size_t e = 0; e < bundles.size(); ++e) {
      if (bundles[e].image_id == a && bundles[e].partner_id == b) {
        bundle_ab = static_cast<int>(e);
        break;
      }
    }
    if (bundle_ab < 0 || self_bundle[vid.at(b)] < 0) return false;
    const Pointmap& other = bundles[bundle_ab].pointmap_other;         // X_{b,a}
    const Pointmap& self = bundles[self_bundle[vid.at(b)]].pointmap_self;  // X_{b,b}
    const ConfidenceMap& cw = bundles[bundle_ab].confidence_other;
    std::vector<std::uint32_t> common;
    for (std::size_t i = 0; i < other.valid.size(); ++i) {
      if (other.valid[i] && i < self.valid.size() && self.valid[i]) {
        common.push_back(static_cast<std::uint32_t>(i));
      }
    }
    if (common.size() < 3) return false;
    Eigen::Matrix3Xd src(3, common.size()), dst(3, common.size());
    Eigen::VectorXd w(common.size());
    for (std::size_t k = 0; k < common.size(); ++k) {
      src.col(k) = self.points[common[k]];
      dst.col(k) = other.points[common[k]];
      w[k] = cw.data[common[k]];
    }
    *out = umeyama_rigid(src, dst, w);
    return true;
  };

  // BFS over MST edges from the anchor.
  const int anchor = 0;  // image_ids are ascending
  state->poses.assign(prob.image_ids.size(), PoseSE3::identity());
  std::vector<bool> placed(prob.image_ids.size(), false);
  placed[anchor] = true;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t ei : graph.mst_edges) {
      const int a = vid.at(graph.edges[ei].n);
      const int b = vid.at(graph.edges[ei].m);
      for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
        if (!placed[from] || placed[to]) continue;
        PoseSE3 rel;
        if (relative(prob.image_ids[from], prob.image_ids[to], &rel)) {
          state->poses[to] = state->poses[from] * rel;
        } else if (relative(prob.image_ids[to], prob.image_ids[from], &rel)) {
          state->poses[to] = state->poses[from] * rel.inverse();
        }
        placed[to] = true;
        progress = true;
      }
    }
  }
}

}  // namespace align_detail

inline AlignGradient align_gradient(const AlignmentState& state,
                                    const std::vector<ViewBundle>& bundles) {
  const align_detail::Problem prob = align_detail::build_problem(bundles);
  return align_detail::gradient_impl(prob, state);
}

/// Gradient of the alignment objective with respect to one view's chi.
inline std::vector<Vec3> align_chi_gradient(const AlignmentState& state,
                                            const std::vector<ViewBundle>& bundles, int view) {
  const align_detail::Problem prob = align_detail::build_problem(bundles);
  std::vector<Vec3> g(state.global_pointmaps[view].points.size(), Vec3::Zero());
  for (const auto& blk : prob.blocks) {
    if (blk.chi_view != view) continue;
    const PoseSE3& T = state.poses[blk.pose_view];
    const double sigma = state.scales[blk.edge];
    const Pointmap& chi = state.global_pointmaps[view];
    for (Eigen::Index k = 0; k < blk.X.cols(); ++k) {
      const Vec3 y = T.rotation * blk.X.col(k) + T.translation;
      g[blk.px[k]] += 2.0 * blk.C[k] * (chi.points[blk.px[k]] - sigma * y);
    }
  }
  return g;
}

/// Global alignment: initialize poses over the maximum-confidence spanning
/// tree, then run projected gradient descent with a backtracking line search
/// on the pose tangents and log-scales, re-solving chi in closed form after
/// every accepted step. The anchor view (lowest image id) stays at identity
/// and the scale product is projected back to 1 after every step.
inline std::pair<AlignmentState, AlignReport> align(const std::vector<ViewBundle>& bundles,
                                                    const AlignOptions& opts = {}) {
  const align_detail::Problem prob = align_detail::build_problem(bundles);
  const ViewGraph graph = build_view_graph(bundles);
  if (!graph.connected) throw InputError("align: view graph is disconnected");

  AlignmentState state;
  state.image_ids = prob.image_ids;
  state.scales.assign(bundles.size(), 1.0);
  state.global_pointmaps.resize(prob.image_ids.size());
  align_detail::init_poses(prob, bundles, graph, &state);
  align_detail::update_chi(prob, &state);

  const int anchor = 0;
  double objective = align_detail::objective_impl(prob, state);
  double step0 = opts.lr;

  AlignReport report;
  report.converged = false;

  std::vector<double> log_s(bundles.size(), 0.0);
  auto project_logs = [&](std::vector<double>* s) {
    const double mean = std::accumulate(s->begin(), s->end(), 0.0) / s->size();
    for (double& x : *s) x -= mean;
  };

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    AlignGradient grad = align_detail::gradient_impl(prob, state);
    grad.pose[anchor].setZero();
    // Project the scale gradient onto the sum-zero tangent of the
    // product-one constraint.
    project_logs(&grad.log_scale);

    const double g2 = grad.squared_norm(anchor);
    report.gradient_norm = std::sqrt(g2);
    report.iterations = iter;
    if (report.gradient_norm < opts.tol) {
      report.converged = true;
      break;
    }

    bool accepted = false;
    double step = step0;
    for (int ls = 0; ls < 40 && !accepted; ++ls, step *= 0.5) {
      AlignmentState cand = state;
      for (std::size_t v = 0; v < cand.poses.size(); ++v) {
        if (static_cast<int>(v) == anchor) continue;
        const Vec3 omega = -step * grad.pose[v].head<3>();
        const Vec3 u = -step * grad.pose[v].tail<3>();
        const Mat3 Rinc = rotation_exp(omega);
        cand.poses[v].rotation = Rinc * state.poses[v].rotation;
        cand.poses[v].translation = Rinc * state.poses[v].translation + u;
      }
      std::vector<double> ls_new = log_s;
      for (std::size_t e = 0; e < ls_new.size(); ++e) ls_new[e] -= step * grad.log_scale[e];
      project_logs(&ls_new);
      for (std::size_t e = 0; e < ls_new.size(); ++e) cand.scales[e] = std::exp(ls_new[e]);

      const double cand_obj = align_detail::objective_impl(prob, cand);
      if (cand_obj <= objective - 1e-4 * step * g2) {
        state = std::move(cand);
        log_s = std::move(ls_new);
        accepted = true;
        step0 = std::min(step * 2.0, 1e3);
      }
    }
    if (!accepted) break;  // no further descent possible at this precision

    align_detail::update_chi(prob, &state);
    objective = align_detail::objective_impl(prob, state);
    report.iterations = iter + 1;
  }

  report.final_objective = objective;
  return {std::move(state), report};
}

}  // namespace layoutfuse
