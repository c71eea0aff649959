#include <catch2/catch_amalgamated.hpp>

#include "layoutfuse/geometry.hpp"
#include "layoutfuse/rng.hpp"
#include "test_oracles.hpp"

using namespace layoutfuse;

namespace {

Plane make_plane(const Vec3& n, double d) {
  Plane p;
  p.normal = n.normalized();
  p.offset = d;
  return p;
}

PoseSE3 random_pose(Rng& rng, double trans_scale = 2.0) {
  PoseSE3 pose;
  pose.rotation = rotation_exp(rng.normal3(1.0));
  pose.translation = rng.normal3(trans_scale);
  return pose;
}

}  // namespace

TEST_CASE("backproject principal point and zero-depth convention") {
  DepthMap depth(3, 3, 0.0);
  Intrinsics K{17.0, 9.0, 1.0, 1.0};
  depth.at(1, 1) = 1.0;
  const Pointmap pm = backproject(depth, K);
  CHECK(pm.is_valid(1, 1));
  CHECK(pm.at(1, 1).isApprox(Vec3(0, 0, 1), 1e-15));
  CHECK_FALSE(pm.is_valid(0, 0));
  CHECK(pm.valid_count() == 1);
}

TEST_CASE("backproject matches the pinhole formula on a 4x4 map") {
  DepthMap depth(4, 4, 2.0);
  Intrinsics K{2.0, 2.0, 2.0, 2.0};
  const Pointmap pm = backproject(depth, K);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 4; ++u) {
      const Vec3 expect((u - 2.0) * 2.0 / 2.0, (v - 2.0) * 2.0 / 2.0, 2.0);
      CHECK((pm.at(v, u) - expect).norm() < 1e-15);
    }
  }
}

TEST_CASE("backproject rejects non-finite and negative depth") {
  Intrinsics K{1, 1, 0, 0};
  DepthMap bad(2, 1, 1.0);
  bad.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(backproject(bad, K), InputError);
  bad.at(0, 1) = -0.5;
  CHECK_THROWS_AS(backproject(bad, K), InputError);
}

TEST_CASE("backproject then project recovers pixel coordinates") {
  Rng rng(7);
  Intrinsics K{48.0, 52.0, 31.5, 23.5};
  DepthMap depth(64, 48, 0.0);
  for (auto& d : depth.data) d = rng.uniform(0.5, 8.0);
  const Pointmap pm = backproject(depth, K);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const Vec2 px = project(pm.at(v, u), K);
      CHECK(std::abs(px.x() - u) < 1e-6);
      CHECK(std::abs(px.y() - v) < 1e-6);
    }
  }
}

TEST_CASE("fit_plane recovers a coordinate plane exactly") {
  const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const PlaneFit fit = fit_plane(pts);
  CHECK(std::abs(std::abs(fit.plane.normal.z()) - 1.0) < 1e-12);
  CHECK(std::abs(fit.plane.offset) < 1e-12);
  CHECK(fit.residual_rms < 1e-12);
  // Plane through origin: deterministic sign via first nonzero component.
  CHECK(fit.plane.normal.z() > 0);
}

TEST_CASE("fit_plane rejects degenerate inputs with the achieved rank") {
  const std::vector<Vec3> collinear = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  try {
    fit_plane(collinear);
    FAIL("expected DegenerateInputError");
  } catch (const DegenerateInputError& e) {
    CHECK(e.rank == 1);
  }
  const std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(fit_plane(two), DegenerateInputError);
  const std::vector<Vec3> coincident = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  try {
    fit_plane(coincident);
    FAIL("expected DegenerateInputError");
  } catch (const DegenerateInputError& e) {
    CHECK(e.rank == 0);
  }
}

TEST_CASE("fit_plane recovers a noisy plane against the SVD oracle") {
  Rng rng(99);
  const Vec3 n_true = Vec3(1, 2, 2) / 3.0;
  const double d_true = -0.5;
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) {
    Vec3 t = rng.normal3(1.0);
    t -= t.dot(n_true) * n_true;
    Vec3 p = -d_true * n_true + t + rng.normal(0.0, 0.01) * n_true;
    pts.push_back(p);
  }
  PlaneFit fit = fit_plane(pts);
  CHECK(fit.plane.offset > 0);  // sign convention: origin side positive
  if (fit.plane.normal.dot(n_true) < 0) fit.plane = fit.plane.flipped();
  CHECK(deg(std::acos(std::min(1.0, std::abs(fit.plane.normal.dot(n_true))))) < 0.5);
  CHECK(std::abs(fit.plane.offset - d_true) < 0.01);

  const auto [n_oracle, d_oracle] = oracles::tls_plane_svd(pts);
  CHECK(std::abs(std::abs(fit.plane.normal.dot(n_oracle)) - 1.0) < 1e-9);
  CHECK(std::abs(std::abs(fit.plane.offset) - std::abs(d_oracle)) < 1e-9);
}

TEST_CASE("fit_plane is invariant under point permutation") {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(rng.normal3(1.0) + Vec3(0.3, -0.2, 1.0));
  const PlaneFit a = fit_plane(pts);
  std::reverse(pts.begin(), pts.end());
  std::swap(pts[3], pts[17]);
  const PlaneFit b = fit_plane(pts);
  CHECK((a.plane.normal - b.plane.normal).norm() < 1e-9);
  CHECK(std::abs(a.plane.offset - b.plane.offset) < 1e-9);
}

TEST_CASE("fit_plane honors weights") {
  // Two parallel point clouds; weights pull the fit to the heavy one.
  std::vector<Vec3> pts;
  std::vector<double> weights;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      pts.push_back({double(i), double(j), 0.0});
      weights.push_back(1000.0);
      pts.push_back({double(i), double(j), 1.0});
      weights.push_back(1e-6);
    }
  }
  const PlaneFit fit = fit_plane(pts, weights);
  CHECK(std::abs(fit.plane.signed_distance(Vec3(0, 0, 0))) < 1e-3);
}

TEST_CASE("plane_intersection of axis planes") {
  const Plane z0 = make_plane(Vec3(0, 0, 1), 0.0);
  const Plane x0 = make_plane(Vec3(1, 0, 0), 0.0);
  const Line3D line = plane_intersection(z0, x0);
  CHECK(std::abs(std::abs(line.direction.y()) - 1.0) < 1e-12);
  CHECK(line.point.norm() < 1e-12);
}

TEST_CASE("plane_intersection rejects near-parallel planes") {
  const Plane a = make_plane(Vec3(0, 0, 1), 0.0);
  CHECK_THROWS_AS(plane_intersection(a, a), ParallelPlanesError);
  const Plane b = make_plane(Vec3(0, 0, -1), 3.0);
  CHECK_THROWS_AS(plane_intersection(a, b), ParallelPlanesError);
}

TEST_CASE("plane_intersection solves the two-plane example") {
  const Plane a = make_plane(Vec3(1, 0, 0), -1.0);
  const Plane b = make_plane(Vec3(0, 1, 0), -2.0);
  const Line3D line = plane_intersection(a, b);
  CHECK(std::abs(line.point.x() - 1.0) < 1e-12);
  CHECK(std::abs(line.point.y() - 2.0) < 1e-12);
  CHECK(std::abs(std::abs(line.direction.z()) - 1.0) < 1e-12);
  // Both plane equations hold along the line.
  for (double t : {-3.0, 0.0, 5.0}) {
    const Vec3 x = line.point + t * line.direction;
    CHECK(std::abs(a.signed_distance(x)) < 1e-12);
    CHECK(std::abs(b.signed_distance(x)) < 1e-12);
  }
}

TEST_CASE("plane_intersection direction is orthogonal to both normals") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Plane a = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    const Plane b = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    if (std::abs(a.normal.dot(b.normal)) >= 1.0 - 1e-6) continue;
    const Line3D line = plane_intersection(a, b);
    CHECK(std::abs(line.direction.dot(a.normal)) < 1e-12);
    CHECK(std::abs(line.direction.dot(b.normal)) < 1e-12);
  }
}

TEST_CASE("junction of axis planes") {
  const Plane x = make_plane(Vec3(1, 0, 0), 0.0);
  const Plane y = make_plane(Vec3(0, 1, 0), 0.0);
  const Plane z = make_plane(Vec3(0, 0, 1), 0.0);
  CHECK(junction(x, y, z).position.norm() < 1e-12);

  const Plane x1 = make_plane(Vec3(1, 0, 0), -1.0);
  const Plane y2 = make_plane(Vec3(0, 1, 0), -2.0);
  const Plane z3 = make_plane(Vec3(0, 0, 1), -3.0);
  CHECK((junction(x1, y2, z3).position - Vec3(1, 2, 3)).norm() < 1e-12);
}

TEST_CASE("junction residuals vanish for random non-degenerate triples") {
  Rng rng(13);
  int tested = 0;
  while (tested < 30) {
    const Plane a = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    const Plane b = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    const Plane c = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    Mat3 N;
    N.row(0) = a.normal.transpose();
    N.row(1) = b.normal.transpose();
    N.row(2) = c.normal.transpose();
    if (std::abs(N.determinant()) < 1e-2) continue;
    const Junction3D j = junction(a, b, c);
    CHECK(std::abs(a.signed_distance(j.position)) < 1e-9);
    CHECK(std::abs(b.signed_distance(j.position)) < 1e-9);
    CHECK(std::abs(c.signed_distance(j.position)) < 1e-9);
    ++tested;
  }
}

TEST_CASE("junction rejects singular configurations") {
  const Plane a = make_plane(Vec3(1, 0, 0), 0.0);
  const Plane b = make_plane(Vec3(0, 1, 0), 0.0);
  const Plane c = make_plane(Vec3(1, 1, 0).normalized(), -1.0);
  CHECK_THROWS_AS(junction(a, b, c), DegenerateConfigurationError);
}

TEST_CASE("transform_plane identity and pure translation") {
  const Plane z0 = make_plane(Vec3(0, 0, 1), 0.0);
  const Plane same = transform_plane(z0, PoseSE3::identity());
  CHECK((same.normal - z0.normal).norm() < 1e-15);
  CHECK(std::abs(same.offset) < 1e-15);

  PoseSE3 lift;
  lift.translation = Vec3(0, 0, 5);
  const Plane z5 = transform_plane(z0, lift);
  CHECK((z5.normal - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK(std::abs(z5.offset - (-5.0)) < 1e-15);
}

TEST_CASE("transform_plane maps on-plane points onto the output plane") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Plane p = make_plane(rng.normal3(1.0), rng.uniform(-2, 2));
    const PoseSE3 T = random_pose(rng);
    const Plane q = transform_plane(p, T);
    for (int k = 0; k < 10; ++k) {
      Vec3 t = rng.normal3(1.0);
      t -= t.dot(p.normal) * p.normal;
      const Vec3 x = -p.offset * p.normal + t;
      REQUIRE(std::abs(p.signed_distance(x)) < 1e-12);
      CHECK(std::abs(q.signed_distance(T.apply(x))) < 1e-9);
    }
    // Round trip through the inverse pose.
    const Plane back = transform_plane(q, T.inverse());
    CHECK((back.normal - p.normal).norm() < 1e-9);
    CHECK(std::abs(back.offset - p.offset) < 1e-9);
  }
}

TEST_CASE("rotation exp/log round trip") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec3 w = rng.normal3(1.2);
    const Mat3 R = rotation_exp(w);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-12);
    const Vec3 back = rotation_log(R);
    if (w.norm() < M_PI - 1e-3) {
      CHECK((back - w).norm() < 1e-9);
    } else {
      CHECK((rotation_exp(back) - R).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("rotation_angle agrees with the quaternion oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Mat3 A = rotation_exp(rng.normal3(1.0));
    const Mat3 B = rotation_exp(rng.normal3(1.0));
    CHECK(std::abs(rotation_angle(A, B) - oracles::quaternion_angle(A, B)) < 1e-9);
  }
}
