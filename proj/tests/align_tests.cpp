#include <catch2/catch_amalgamated.hpp>

#include "layoutfuse/align.hpp"
#include "layoutfuse/rng.hpp"
#include "test_oracles.hpp"

using namespace layoutfuse;

namespace {

SceneSpec quick_spec(int walls, int cams, std::uint64_t seed, double noise = 0.0, int size = 48) {
  SceneSpec spec;
  spec.wall_count = walls;
  spec.camera_count = cams;
  spec.seed = seed;
  spec.noise_sigma = noise;
  spec.image_size = size;
  return spec;
}

/// Tiny random bundles (not a renderable scene) for objective/gradient math.
std::vector<ViewBundle> random_bundles(Rng& rng, int views, int w = 6, int h = 5) {
  std::vector<ViewBundle> bundles;
  for (int i = 0; i < views; ++i) {
    for (int j = 0; j < views; ++j) {
      if (i == j) continue;
      ViewBundle b;
      b.image_id = i;
      b.partner_id = j;
      b.pointmap_self = Pointmap(w, h);
      b.pointmap_other = Pointmap(w, h);
      b.confidence_self = ConfidenceMap(w, h, 1.0);
      b.confidence_other = ConfidenceMap(w, h, 1.0);
      b.plane_masks = IdMap(w, h, -1);
      for (std::size_t k = 0; k < b.pointmap_self.points.size(); ++k) {
        b.pointmap_self.points[k] = rng.normal3(1.0) + Vec3(0, 0, 3);
        b.pointmap_self.valid[k] = rng.uniform() < 0.85 ? 1 : 0;
        b.pointmap_other.points[k] = rng.normal3(1.0) + Vec3(0, 0, 3);
        b.pointmap_other.valid[k] = rng.uniform() < 0.85 ? 1 : 0;
        b.confidence_self.data[k] = rng.uniform(0.2, 1.5);
        b.confidence_other.data[k] = rng.uniform(0.2, 1.5);
      }
      bundles.push_back(std::move(b));
    }
  }
  return bundles;
}

AlignmentState random_state(Rng& rng, const std::vector<ViewBundle>& bundles) {
  AlignmentState state;
  auto [tmp, report] = align(bundles, {0, 1e-3, 1e-7});  // zero iterations: init only
  state = tmp;
  for (std::size_t v = 0; v < state.poses.size(); ++v) {
    state.poses[v].rotation = rotation_exp(rng.normal3(0.5));
    state.poses[v].translation = rng.normal3(1.0);
  }
  std::vector<double> logs(state.scales.size());
  double mean = 0.0;
  for (auto& s : logs) {
    s = rng.uniform(-0.3, 0.3);
    mean += s;
  }
  mean /= logs.size();
  for (std::size_t e = 0; e < logs.size(); ++e) state.scales[e] = std::exp(logs[e] - mean);
  for (auto& chi : state.global_pointmaps) {
    for (std::size_t k = 0; k < chi.points.size(); ++k) {
      if (chi.valid[k]) chi.points[k] += rng.normal3(0.4);
    }
  }
  return state;
}

double product_of_scales(const AlignmentState& state) {
  double p = 1.0;
  for (double s : state.scales) p *= s;
  return p;
}

std::vector<ViewBundle> scene_bundles(const SceneSpec& spec) {
  const Scene scene = generate_room(spec);
  return emit_view_bundles(scene, all_ordered_pairs(static_cast<int>(scene.cameras.size())),
                           spec.noise_sigma);
}

}  // namespace

TEST_CASE("view graph of a single pair is its own MST") {
  Rng rng(1);
  const auto bundles = random_bundles(rng, 2);
  const ViewGraph g = build_view_graph(bundles);
  CHECK(g.vertices == std::vector<int>{0, 1});
  REQUIRE(g.edges.size() == 1);
  CHECK(g.mst_edges.size() == 1);
  CHECK(g.connected);
}

TEST_CASE("MST keeps the two strongest edges of a triangle") {
  Rng rng(2);
  auto bundles = random_bundles(rng, 3);
  // Constant confidences per pair: AB 0.9, BC 0.8, AC 0.2.
  auto set_conf = [&](ViewBundle& b, double c) {
    std::fill(b.confidence_self.data.begin(), b.confidence_self.data.end(), c);
    std::fill(b.confidence_other.data.begin(), b.confidence_other.data.end(), c);
  };
  for (auto& b : bundles) {
    const std::pair<int, int> key = std::minmax(b.image_id, b.partner_id);
    if (key == std::pair{0, 1}) set_conf(b, 0.9);
    if (key == std::pair{1, 2}) set_conf(b, 0.8);
    if (key == std::pair{0, 2}) set_conf(b, 0.2);
  }
  const ViewGraph g = build_view_graph(bundles);
  REQUIRE(g.mst_edges.size() == 2);
  std::set<std::pair<int, int>> mst;
  for (auto ei : g.mst_edges) mst.insert({g.edges[ei].n, g.edges[ei].m});
  CHECK(mst == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});
}

TEST_CASE("five-view MST weight matches brute force over all 125 trees") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    Rng rng(seed);
    auto bundles = random_bundles(rng, 5, 3, 3);
    Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(5, 5);
    for (auto& b : bundles) {
      const double c = rng.uniform(0.1, 1.0);
      std::fill(b.confidence_self.data.begin(), b.confidence_self.data.end(), c);
      std::fill(b.confidence_other.data.begin(), b.confidence_other.data.end(), c);
    }
    const ViewGraph g = build_view_graph(bundles);
    for (const auto& e : g.edges) {
      weight(e.n, e.m) = weight(e.m, e.n) = e.mean_confidence;
    }
    double mst_total = 0.0;
    for (auto ei : g.mst_edges) mst_total += g.edges[ei].mean_confidence;
    CHECK(std::abs(mst_total - oracles::max_spanning_tree_brute_force(weight)) < 1e-12);
  }
}

TEST_CASE("objective is zero at the ground-truth state") {
  const auto bundles = scene_bundles(quick_spec(4, 3, 11));
  auto [state, report] = align(bundles);
  CHECK(align_objective(state, bundles) < 1e-12);
  CHECK(report.converged);
}

TEST_CASE("objective of a pure translation perturbation is in closed form") {
  const auto bundles_all = scene_bundles(quick_spec(4, 2, 13));
  // One bundle only: a single edge whose pose is view 0's.
  const std::vector<ViewBundle> bundles = {bundles_all[0]};
  auto [state, report] = align(bundles, {0, 1e-3, 1e-7});
  REQUIRE(align_objective(state, bundles) < 1e-12);

  const Vec3 delta(0.01, -0.02, 0.015);
  AlignmentState shifted = state;
  shifted.poses[0].translation += delta;
  double conf_sum = 0.0;
  for (std::size_t i = 0; i < bundles[0].confidence_self.data.size(); ++i) {
    if (bundles[0].pointmap_self.valid[i]) conf_sum += bundles[0].confidence_self.data[i];
  }
  for (std::size_t i = 0; i < bundles[0].confidence_other.data.size(); ++i) {
    if (bundles[0].pointmap_other.valid[i]) conf_sum += bundles[0].confidence_other.data[i];
  }
  const double expect = conf_sum * delta.squaredNorm();
  const double got = align_objective(shifted, bundles);
  CHECK(std::abs(got - expect) < 1e-9 * expect);
}

TEST_CASE("objective equals the brute-force per-pixel loop") {
  Rng rng(17);
  const auto bundles = random_bundles(rng, 3);
  const AlignmentState state = random_state(rng, bundles);
  const double got = align_objective(state, bundles);

  double expect = 0.0;
  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const auto& b = bundles[e];
    const PoseSE3& T = state.poses[state.view_index(b.image_id)];
    const double sigma = state.scales[e];
    auto add = [&](const Pointmap& pm, const ConfidenceMap& conf, int chi_view) {
      const Pointmap& chi = state.global_pointmaps[chi_view];
      for (std::size_t i = 0; i < pm.points.size(); ++i) {
        if (!pm.valid[i]) continue;
        const Vec3 y = T.rotation * pm.points[i] + T.translation;
        expect += conf.data[i] * (chi.points[i] - sigma * y).squaredNorm();
      }
    };
    add(b.pointmap_self, b.confidence_self, state.view_index(b.image_id));
    add(b.pointmap_other, b.confidence_other, state.view_index(b.partner_id));
  }
  CHECK(std::abs(got - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
}

TEST_CASE("objective rejects non-positive scales") {
  Rng rng(19);
  const auto bundles = random_bundles(rng, 2);
  AlignmentState state = random_state(rng, bundles);
  state.scales[0] = 0.0;
  CHECK_THROWS_AS(align_objective(state, bundles), DomainError);
  state.scales[0] = -1.0;
  CHECK_THROWS_AS(align_objective(state, bundles), DomainError);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(23);
  int checked_states = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto bundles = random_bundles(rng, 3, 5, 4);
    AlignmentState state = random_state(rng, bundles);
    const AlignGradient grad = align_gradient(state, bundles);
    const double h = 1e-6;

    // Pose tangents, via the same left-multiplicative retraction.
    for (std::size_t v = 0; v < state.poses.size(); ++v) {
      for (int c = 0; c < 6; ++c) {
        auto perturbed = [&](double eps) {
          AlignmentState s = state;
          Eigen::Matrix<double, 6, 1> xi = Eigen::Matrix<double, 6, 1>::Zero();
          xi[c] = eps;
          const Mat3 Rinc = rotation_exp(xi.head<3>());
          s.poses[v].rotation = Rinc * state.poses[v].rotation;
          s.poses[v].translation = Rinc * state.poses[v].translation + xi.tail<3>();
          return align_objective(s, bundles);
        };
        const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
        const double an = grad.pose[v][c];
        CHECK(std::abs(fd - an) <= 1e-5 * std::max({1.0, std::abs(fd), std::abs(an)}));
      }
    }
    // Log-scales.
    for (std::size_t e = 0; e < state.scales.size(); ++e) {
      auto perturbed = [&](double eps) {
        AlignmentState s = state;
        s.scales[e] = std::exp(std::log(state.scales[e]) + eps);
        return align_objective(s, bundles);
      };
      const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
      CHECK(std::abs(fd - grad.log_scale[e]) <=
            1e-5 * std::max({1.0, std::abs(fd), std::abs(grad.log_scale[e])}));
    }
    // A sample of chi coordinates.
    const auto chi_grad = align_chi_gradient(state, bundles, 0);
    const Pointmap& chi = state.global_pointmaps[0];
    int sampled = 0;
    for (std::size_t k = 0; k < chi.points.size() && sampled < 5; ++k) {
      if (!chi.valid[k]) continue;
      ++sampled;
      for (int axis = 0; axis < 3; ++axis) {
        auto perturbed = [&](double eps) {
          AlignmentState s = state;
          s.global_pointmaps[0].points[k][axis] += eps;
          return align_objective(s, bundles);
        };
        const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
        CHECK(std::abs(fd - chi_grad[k][axis]) <=
              1e-5 * std::max({1.0, std::abs(fd), std::abs(chi_grad[k][axis])}));
      }
    }
    ++checked_states;
  }
  CHECK(checked_states == 20);
}

TEST_CASE("noiseless single pair recovers the relative pose exactly") {
  const SceneSpec spec = quick_spec(4, 2, 29);
  const Scene scene = generate_room(spec);
  const auto bundles = emit_view_bundles(scene, all_ordered_pairs(2), 0.0);
  auto [state, report] = align(bundles);
  CHECK(report.converged);

  const PoseSE3 rel_pred = state.poses[0].inverse() * state.poses[1];
  const PoseSE3 rel_gt = scene.cameras[0].pose.inverse() * scene.cameras[1].pose;
  CHECK(rotation_angle(rel_pred.rotation, rel_gt.rotation) < 1e-6);
  CHECK((rel_pred.translation - rel_gt.translation).norm() < 1e-6);
  CHECK(std::abs(product_of_scales(state) - 1.0) < 1e-9);
}

TEST_CASE("duplicated identical views align to the identity") {
  const Scene scene = generate_room(quick_spec(4, 1, 31));
  const auto bundles = emit_view_bundles(scene, {{0, 1}, {1, 0}}, 0.0);
  auto [state, report] = align(bundles);
  const PoseSE3 rel = state.poses[0].inverse() * state.poses[1];
  CHECK(rotation_angle(rel.rotation, Mat3::Identity()) < 1e-9);
  CHECK(rel.translation.norm() < 1e-9);
}

TEST_CASE("four-view ring recovers every relative pose") {
  const SceneSpec spec = quick_spec(6, 4, 37);
  const Scene scene = generate_room(spec);
  const auto bundles = emit_view_bundles(scene, all_ordered_pairs(4), 0.0);
  auto [state, report] = align(bundles);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      const PoseSE3 rel_pred = state.poses[i].inverse() * state.poses[j];
      const PoseSE3 rel_gt = scene.cameras[i].pose.inverse() * scene.cameras[j].pose;
      CHECK(rotation_angle(rel_pred.rotation, rel_gt.rotation) < 1e-5);
      CHECK((rel_pred.translation - rel_gt.translation).norm() < 1e-5);
    }
  }
  CHECK(state.poses[0].rotation.isApprox(Mat3::Identity(), 1e-12));
  CHECK(state.poses[0].translation.norm() < 1e-12);
}

TEST_CASE("objective is non-increasing across iteration budgets") {
  const auto bundles = scene_bundles(quick_spec(4, 3, 41, 0.05, 32));
  double previous = std::numeric_limits<double>::infinity();
  for (int budget : {0, 1, 2, 4, 8, 16}) {
    auto [state, report] = align(bundles, {budget, 1e-3, 1e-12});
    CHECK(report.final_objective <= previous + 1e-9 * std::abs(previous));
    previous = report.final_objective;
    CHECK(std::abs(product_of_scales(state) - 1.0) < 1e-9);
  }
}

TEST_CASE("alignment is invariant to a rigid repositioning of the scene") {
  const SceneSpec spec = quick_spec(4, 3, 43);
  Scene scene = generate_room(spec);
  const auto bundles_a = emit_view_bundles(scene, all_ordered_pairs(3), 0.0);

  PoseSE3 g;
  g.rotation = rotation_exp(Vec3(0.3, -0.8, 0.5));
  g.translation = Vec3(4.0, -1.0, 2.5);
  for (auto& cam : scene.cameras) cam.pose = g * cam.pose;
  for (auto& plane : scene.planes) plane = transform_plane(plane, g);
  const auto bundles_b = emit_view_bundles(scene, all_ordered_pairs(3), 0.0);

  // Camera-frame bundles depend only on relative geometry.
  for (std::size_t k = 0; k < bundles_a.size(); ++k) {
    for (std::size_t i = 0; i < bundles_a[k].pointmap_other.points.size(); ++i) {
      REQUIRE((bundles_a[k].pointmap_other.points[i] - bundles_b[k].pointmap_other.points[i])
                  .norm() < 1e-9);
    }
  }
  auto [state_a, ra] = align(bundles_a);
  auto [state_b, rb] = align(bundles_b);
  for (std::size_t v = 0; v < state_a.poses.size(); ++v) {
    const PoseSE3 rel_a = state_a.poses[0].inverse() * state_a.poses[v];
    const PoseSE3 rel_b = state_b.poses[0].inverse() * state_b.poses[v];
    CHECK(rotation_angle(rel_a.rotation, rel_b.rotation) < 1e-9);
    CHECK((rel_a.translation - rel_b.translation).norm() < 1e-9);
  }
}

TEST_CASE("alignment requires a connected view graph") {
  Rng rng(47);
  auto bundles = random_bundles(rng, 2);
  for (auto& b : random_bundles(rng, 2)) {
    b.image_id += 10;  // a second component on views 10, 11
    b.partner_id += 10;
    bundles.push_back(b);
  }
  const ViewGraph g = build_view_graph(bundles);
  CHECK_FALSE(g.connected);
  CHECK(g.mst_edges.size() == 2);  // spanning forest
  CHECK_THROWS_AS(align(bundles), InputError);
}
