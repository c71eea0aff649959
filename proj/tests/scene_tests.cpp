#include <catch2/catch_amalgamated.hpp>

#include "layoutfuse/scene.hpp"
#include "layoutfuse/faces.hpp"

using namespace layoutfuse;

namespace {

SceneSpec quick_spec(int walls, int cams, std::uint64_t seed, double noise = 0.0, int size = 64) {
  SceneSpec spec;
  spec.wall_count = walls;
  spec.camera_count = cams;
  spec.seed = seed;
  spec.noise_sigma = noise;
  spec.image_size = size;
  return spec;
}

/// Hand-built axis-aligned box scene with one camera, full control for
/// render assertions.
Scene box_scene(const Vec2& cam_pos, double cam_height, double yaw, double pitch, int size) {
  Scene scene;
  scene.spec = quick_spec(4, 1, 0);
  scene.ceiling_height = 2.8;
  scene.footprint = {{-2, -3}, {2, -3}, {2, 3}, {-2, 3}};
  scene.planes = {
      {Vec3(0, 1, 0), 0.0, SemanticClass::Floor},
      {Vec3(0, -1, 0), 2.8, SemanticClass::Ceiling},
      {Vec3(0, 0, 1), 3.0, SemanticClass::Wall},   // z = -3
      {Vec3(-1, 0, 0), 2.0, SemanticClass::Wall},  // x = 2
      {Vec3(0, 0, -1), 3.0, SemanticClass::Wall},  // z = 3
      {Vec3(1, 0, 0), 2.0, SemanticClass::Wall},   // x = -2
  };
  scene.adjacency = AdjacencyMatrix(6);
  for (int w = 2; w < 6; ++w) {
    scene.adjacency.set(w, 0);
    scene.adjacency.set(w, 1);
    scene.adjacency.set(w, w == 5 ? 2 : w + 1);
  }
  scene.cameras.push_back(detail::make_camera(cam_pos, cam_height, yaw, pitch, size));
  return scene;
}

/// Brute-force pairwise adjacency: two planes are adjacent iff their bounded
/// faces share a boundary segment inside the room closure, probed by dense
/// sampling along the plane intersection line.
bool faces_share_segment(const Scene& scene, int i, int j) {
  Line3D line;
  try {
    line = plane_intersection(scene.planes[i], scene.planes[j]);
  } catch (const ParallelPlanesError&) {
    return false;
  }
  const RoomFaces room = faces_from_layout(scene_to_layout(scene));
  auto on_face = [&](int plane_id, const Vec3& x) {
    for (const auto& f : room.faces) {
      if (f.plane_id != plane_id) continue;
      if (std::abs(f.plane.signed_distance(x)) > 1e-6) return false;
      if (f.kind == RoomFace::Kind::Wall) {
        const double h = room.frame.height(x);
        if (h < room.height_floor - 1e-9 || h > room.height_ceiling + 1e-9) return false;
        const Vec2 p = room.frame.plan(x);
        const Vec2 ab = f.edge_b - f.edge_a;
        const double s = (p - f.edge_a).dot(ab) / ab.squaredNorm();
        const Vec2 closest = f.edge_a + s * ab;
        return s >= -1e-9 && s <= 1.0 + 1e-9 && (p - closest).norm() < 1e-6;
      }
      const Vec2 p = room.frame.plan(x);
      return point_in_polygon(p, room.footprint) ||
             detail::distance_to_boundary(p, room.footprint) < 1e-6;
    }
    return false;
  };
  int hits = 0;
  for (double t = -20.0; t <= 20.0; t += 0.01) {
    const Vec3 x = line.point + t * line.direction;
    if (on_face(i, x) && on_face(j, x)) ++hits;
  }
  return hits >= 3;  // a shared segment, not a lone corner touch
}

}  // namespace

TEST_CASE("cuboid room has six planes with the box adjacency") {
  const Scene scene = generate_room(quick_spec(4, 2, 11));
  REQUIRE(scene.planes.size() == 6);
  CHECK(scene.planes[0].semantic_class == SemanticClass::Floor);
  CHECK(scene.planes[1].semantic_class == SemanticClass::Ceiling);
  CHECK_FALSE(scene.adjacency.at(0, 1));
  for (int w = 2; w < 6; ++w) {
    CHECK(scene.adjacency.at(w, 0));
    CHECK(scene.adjacency.at(w, 1));
    int wall_neighbors = 0;
    for (int o = 2; o < 6; ++o) {
      if (o != w && scene.adjacency.at(w, o)) ++wall_neighbors;
    }
    CHECK(wall_neighbors == 2);
  }
  // All wall normals orthogonal to the floor normal.
  for (int w = 2; w < 6; ++w) {
    CHECK(std::abs(scene.planes[w].normal.dot(scene.planes[0].normal)) < 1e-12);
  }
}

TEST_CASE("generate_room rejects invalid wall counts") {
  CHECK_THROWS_AS(generate_room(quick_spec(5, 2, 1)), InputError);
  CHECK_THROWS_AS(generate_room(quick_spec(2, 2, 1)), InputError);
  CHECK_THROWS_AS(generate_room(quick_spec(14, 2, 1)), InputError);
}

TEST_CASE("same seed reproduces the scene and its artifacts bit-exactly") {
  const SceneSpec spec = quick_spec(6, 3, 1234, 0.02, 48);
  const Scene a = generate_room(spec);
  const Scene b = generate_room(spec);
  REQUIRE(a.planes.size() == b.planes.size());
  for (std::size_t i = 0; i < a.planes.size(); ++i) {
    CHECK(a.planes[i].normal == b.planes[i].normal);
    CHECK(a.planes[i].offset == b.planes[i].offset);
  }
  REQUIRE(a.cameras.size() == b.cameras.size());
  for (std::size_t c = 0; c < a.cameras.size(); ++c) {
    CHECK(a.cameras[c].pose.rotation == b.cameras[c].pose.rotation);
    CHECK(a.cameras[c].pose.translation == b.cameras[c].pose.translation);
  }
  const auto bundles_a = emit_view_bundles(a, all_ordered_pairs(3), spec.noise_sigma);
  const auto bundles_b = emit_view_bundles(b, all_ordered_pairs(3), spec.noise_sigma);
  REQUIRE(bundles_a.size() == bundles_b.size());
  for (std::size_t k = 0; k < bundles_a.size(); ++k) {
    CHECK(bundles_a[k].pointmap_self.points == bundles_b[k].pointmap_self.points);
    CHECK(bundles_a[k].pointmap_other.points == bundles_b[k].pointmap_other.points);
    CHECK(bundles_a[k].confidence_self.data == bundles_b[k].confidence_self.data);
    CHECK(bundles_a[k].plane_masks.data == bundles_b[k].plane_masks.data);
  }
}

TEST_CASE("six-wall adjacency matches the geometric brute force") {
  const Scene scene = generate_room(quick_spec(6, 3, 21));
  REQUIRE(scene.planes.size() == 8);
  const int n = static_cast<int>(scene.planes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      INFO("pair (" << i << ", " << j << ")");
      CHECK(scene.adjacency.at(i, j) == faces_share_segment(scene, i, j));
    }
  }
}

TEST_CASE("render hits a perpendicular wall at its actual distance") {
  // Camera two meters from the z=3 wall, looking straight at it.
  const Scene scene = box_scene({0.0, 1.0}, 1.4, M_PI / 2.0, 0.0, 33);
  auto [depth, mask] = render_structural_depth(scene, 0);
  CHECK(std::abs(depth.at(16, 16) - 2.0) < 1e-12);
  CHECK(mask.at(16, 16) == 4);
}

TEST_CASE("closed rooms render with no invalid pixels") {
  const Scene scene = generate_room(quick_spec(8, 3, 31, 0.0, 48));
  for (int c = 0; c < static_cast<int>(scene.cameras.size()); ++c) {
    auto [depth, mask] = render_structural_depth(scene, c);
    for (std::size_t i = 0; i < depth.data.size(); ++i) {
      REQUIRE(depth.data[i] > 0.0);
      REQUIRE(mask.data[i] >= 0);
    }
  }
}

TEST_CASE("render then backproject lands on the mask plane") {
  const Scene scene = generate_room(quick_spec(6, 2, 41, 0.0, 48));
  auto [depth, mask] = render_structural_depth(scene, 0);
  const Camera& cam = scene.cameras[0];
  const Pointmap pm = backproject(depth, cam.intrinsics);
  for (int v = 0; v < pm.height; ++v) {
    for (int u = 0; u < pm.width; ++u) {
      const Plane world_plane = scene.planes[mask.at(v, u)];
      const Plane cam_plane = transform_plane(world_plane, cam.pose.inverse());
      REQUIRE(std::abs(cam_plane.signed_distance(pm.at(v, u))) < 1e-6);
    }
  }
}

TEST_CASE("render rejects a camera outside the room") {
  Scene scene = box_scene({0.0, 0.0}, 1.4, 0.0, 0.0, 16);
  scene.cameras[0].pose.translation = Vec3(10.0, 1.4, 0.0);
  CHECK_THROWS_AS(render_structural_depth(scene, 0), RenderError);
  scene.cameras[0].pose.translation = Vec3(0.0, 5.0, 0.0);
  CHECK_THROWS_AS(render_structural_depth(scene, 0), RenderError);
  CHECK_THROWS_AS(render_structural_depth(scene, 3), InputError);
}

TEST_CASE("noiseless cross-view pointmaps coincide through the relative pose") {
  const Scene scene = generate_room(quick_spec(4, 2, 51, 0.0, 48));
  const auto bundles = emit_view_bundles(scene, {{0, 1}, {1, 0}}, 0.0);
  const ViewBundle& b01 = bundles[0];
  const ViewBundle& b10 = bundles[1];
  const PoseSE3 rel = scene.cameras[0].pose.inverse() * scene.cameras[1].pose;
  for (std::size_t i = 0; i < b01.pointmap_other.points.size(); ++i) {
    REQUIRE(b01.pointmap_other.valid[i]);
    const Vec3 back = rel.inverse().apply(b01.pointmap_other.points[i]);
    REQUIRE((back - b10.pointmap_self.points[i]).norm() < 1e-9);
  }
}

TEST_CASE("emit_view_bundles rejects self-pairs and bad indices") {
  const Scene scene = generate_room(quick_spec(4, 2, 61, 0.0, 32));
  CHECK_THROWS_AS(emit_view_bundles(scene, {{0, 0}}, 0.0), InputError);
  CHECK_THROWS_AS(emit_view_bundles(scene, {{0, 5}}, 0.0), InputError);
}

TEST_CASE("noise statistics match the requested sigma") {
  const double sigma = 0.01;
  const SceneSpec spec = quick_spec(4, 2, 71, sigma, 160);
  const Scene scene = generate_room(spec);
  const auto clean = emit_view_bundles(scene, all_ordered_pairs(2), 0.0);
  const auto noisy = emit_view_bundles(scene, all_ordered_pairs(2), sigma);
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    for (std::size_t i = 0; i < clean[k].pointmap_self.points.size(); ++i) {
      sq += (noisy[k].pointmap_self.points[i] - clean[k].pointmap_self.points[i]).squaredNorm();
      ++count;
    }
    for (std::size_t i = 0; i < clean[k].pointmap_other.points.size(); ++i) {
      sq += (noisy[k].pointmap_other.points[i] - clean[k].pointmap_other.points[i]).squaredNorm();
      ++count;
    }
  }
  REQUIRE(count >= 100000);
  const double rms = std::sqrt(sq / static_cast<double>(count));
  CHECK(rms > 0.009 * std::sqrt(3.0));
  CHECK(rms < 0.011 * std::sqrt(3.0));
  // Confidence correlates with the draw and stays in range; sigma 0 gives 1.
  for (double c : noisy[0].confidence_self.data) {
    CHECK(c >= 0.1);
    CHECK(c <= 1.0);
  }
  for (double c : clean[0].confidence_self.data) CHECK(c == 1.0);
}

TEST_CASE("mask pixels refit the ground-truth plane") {
  const Scene scene = generate_room(quick_spec(6, 2, 81, 0.0, 48));
  const auto bundles = emit_view_bundles(scene, {{0, 1}}, 0.0);
  const ViewBundle& b = bundles[0];
  std::map<int, std::vector<Vec3>> by_id;
  for (int v = 0; v < b.plane_masks.height; ++v) {
    for (int u = 0; u < b.plane_masks.width; ++u) {
      by_id[b.plane_masks.at(v, u)].push_back(b.pointmap_self.at(v, u));
    }
  }
  const PoseSE3 cam_from_world = scene.cameras[0].pose.inverse();
  for (const auto& [id, points] : by_id) {
    if (points.size() < 100) continue;
    const PlaneFit fit = fit_plane(points);
    const Plane gt = transform_plane(scene.planes[id], cam_from_world);
    CHECK(std::abs(std::abs(fit.plane.normal.dot(gt.normal)) - 1.0) < 1e-6);
    CHECK(std::abs(std::abs(fit.plane.offset) - std::abs(gt.offset)) < 1e-6);
  }
}

TEST_CASE("single-camera scenes are duplicated for pairing") {
  const Scene scene = generate_room(quick_spec(4, 1, 91, 0.0, 32));
  REQUIRE(scene.cameras.size() == 2);
  CHECK(scene.cameras[0].pose.rotation == scene.cameras[1].pose.rotation);
  CHECK(scene.cameras[0].pose.translation == scene.cameras[1].pose.translation);
}
