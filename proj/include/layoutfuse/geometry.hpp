#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "layoutfuse/error.hpp"

namespace layoutfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kParallelEps = 1e-6;   // |n1.n2| >= 1 - eps means parallel
inline constexpr double kUnitTol = 1e-9;

enum class SemanticClass { Floor, Ceiling, Wall };

inline const char* to_string(SemanticClass c) {
  switch (c) {
    case SemanticClass::Floor: return "floor";
    case SemanticClass::Ceiling: return "ceiling";
    case SemanticClass::Wall: return "wall";
  }
  return "wall";
}

/// Infinite plane {x : n.x + d = 0} with unit normal n and offset d in meters.
/// Planes fitted from a camera-frame view are oriented so the camera origin
/// lies on the positive side (n.0 + d > 0), which for room surfaces means the
/// normal points toward the room interior.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  SemanticClass semantic_class = SemanticClass::Wall;

  double signed_distance(const Vec3& x) const { return normal.dot(x) + offset; }

  Plane flipped() const { return {-normal, -offset, semantic_class}; }

  /// Orient the normal so the given interior reference point is on the
  /// positive side. Leaves planes through the reference point untouched.
  Plane oriented_toward(const Vec3& interior) const {
    return signed_distance(interior) < 0.0 ? flipped() : *this;
  }
};

/// Angle between plane normals in radians, insensitive to sign convention
/// when `ignore_sign` is set.
inline double plane_angle(const Plane& a, const Plane& b, bool ignore_sign = false) {
  double c = a.normal.dot(b.normal);
  if (ignore_sign) c = std::abs(c);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Camera-to-world rigid transform.
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PoseSE3 identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  PoseSE3 inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  PoseSE3 operator*(const PoseSE3& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  bool is_valid(double tol = kUnitTol) const {
    const Mat3 rtr = rotation.transpose() * rotation;
    return (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol &&
           translation.allFinite();
  }
};

/// Dense H x W grid, row-major; at(v, u) addresses row v, column u.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int v, int u) { return data[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int v, int u) const { return data[static_cast<std::size_t>(v) * width + u]; }
  std::size_t size() const { return data.size(); }
  bool in_bounds(int v, int u) const { return v >= 0 && v < height && u >= 0 && u < width; }
};

using DepthMap = Grid<double>;
using ConfidenceMap = Grid<double>;
using IdMap = Grid<std::int32_t>;  // plane ids, -1 = none

/// Per-pixel grid of 3D points with a validity mask.
struct Pointmap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> points;
  std::vector<std::uint8_t> valid;

  Pointmap() = default;
  Pointmap(int w, int h)
      : width(w),
        height(h),
        points(static_cast<std::size_t>(w) * h, Vec3::Zero()),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int v, int u) const { return static_cast<std::size_t>(v) * width + u; }
  Vec3& at(int v, int u) { return points[index(v, u)]; }
  const Vec3& at(int v, int u) const { return points[index(v, u)]; }
  bool is_valid(int v, int u) const { return valid[index(v, u)] != 0; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto f : valid) n += f;
    return n;
  }
};

/// Pinhole intrinsics; fx, fy, cx, cy in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Line3D {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();

  double distance_to(const Vec3& x) const {
    const Vec3 w = x - point;
    return (w - w.dot(direction) * direction).norm();
  }
};

struct Junction3D {
  Vec3 position = Vec3::Zero();
};

// ---------------------------------------------------------------------------
// Back-projection and projection
// ---------------------------------------------------------------------------

/// Lift a depth map to a camera-frame pointmap:
///   point(u, v) = ((u - cx) D / fx, (v - cy) D / fy, D).
/// Zero depth marks a pixel invalid; negative or non-finite depth is rejected.
inline Pointmap backproject(const DepthMap& depth, const Intrinsics& K) {
  Pointmap pm(depth.width, depth.height);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double d = depth.at(v, u);
      if (!std::isfinite(d) || d < 0.0) {
        throw InputError("backproject: depth at (" + std::to_string(u) + "," +
                         std::to_string(v) + ") is " + std::to_string(d));
      }
      if (d == 0.0) continue;
      const std::size_t i = pm.index(v, u);
      pm.points[i] = Vec3((u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d);
      pm.valid[i] = 1;
    }
  }
  return pm;
}

/// Perspective projection of a camera-frame point to pixel coordinates.
inline Vec2 project(const Vec3& x, const Intrinsics& K) {
  return {K.fx * x.x() / x.z() + K.cx, K.fy * x.y() / x.z() + K.cy};
}

// ---------------------------------------------------------------------------
// Plane fitting
// ---------------------------------------------------------------------------

struct PlaneFit {
  Plane plane;
  double residual_rms = 0.0;
};

/// Weighted total-least-squares plane through a point set: minimizes
/// sum_i w_i (n.x_i + d)^2 subject to |n| = 1. The normal is the smallest
/// eigenvector of the weighted scatter matrix.
///
/// Sign convention: the origin side is made positive (d > 0); for planes
/// through the origin the first component of n with |c| > 1e-12 is made
/// positive instead.
inline PlaneFit fit_plane(std::span<const Vec3> points,
                          std::span<const double> weights = {}) {
  if (points.size() < 3) {
    throw DegenerateInputError("fit_plane: need at least 3 points, got " +
                                   std::to_string(points.size()),
                               points.empty() ? 0 : 1);
  }
  if (!weights.empty() && weights.size() != points.size()) {
    throw InputError("fit_plane: weight count does not match point count");
  }

  double wsum = 0.0;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw InputError("fit_plane: negative or NaN weight");
    wsum += w;
    centroid += w * points[i];
  }
  if (wsum <= 0.0) throw InputError("fit_plane: all weights are zero");
  centroid /= wsum;

  Mat3 scatter = Mat3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const Vec3 q = points[i] - centroid;
    scatter += w * q * q.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 evals = eig.eigenvalues();  // ascending
  const double lmax = std::max(evals[2], 0.0);
  // Rank of the centered scatter: a plane needs two spread directions.
  const double rank_tol = std::max(lmax, 1.0) * 1e-12;
  int rank = 0;
  for (int k = 0; k < 3; ++k) rank += evals[k] > rank_tol ? 1 : 0;
  if (rank < 2) {
    throw DegenerateInputError("fit_plane: points are collinear or coincident", rank);
  }

  Plane p;
  p.normal = eig.eigenvectors().col(0).normalized();
  p.offset = -p.normal.dot(centroid);

  if (std::abs(p.offset) > 1e-12) {
    if (p.offset < 0.0) p = p.flipped();
  } else {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(p.normal[k]) > 1e-12) {
        if (p.normal[k] < 0.0) p = p.flipped();
        break;
      }
    }
  }

  double ss = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double r = p.signed_distance(points[i]);
    ss += w * r * r;
  }
  return {p, std::sqrt(ss / wsum)};
}

// ---------------------------------------------------------------------------
// Plane intersections
// ---------------------------------------------------------------------------

/// Line of intersection of two planes. The returned point is the point of the
/// line closest to the origin; the direction is normalize(n1 x n2).
inline Line3D plane_intersection(const Plane& p1, const Plane& p2,
                                 double parallel_eps = kParallelEps) {
  const double c = p1.normal.dot(p2.normal);
  if (std::abs(c) >= 1.0 - parallel_eps) {
    throw ParallelPlanesError("plane_intersection: planes are near-parallel (|n1.n2| = " +
                              std::to_string(std::abs(c)) + ")");
  }
  Line3D line;
  line.direction = p1.normal.cross(p2.normal).normalized();

  Mat3 A;
  A.row(0) = p1.normal.transpose();
  A.row(1) = p2.normal.transpose();
  A.row(2) = line.direction.transpose();
  line.point = A.partialPivLu().solve(Vec3(-p1.offset, -p2.offset, 0.0));
  return line;
}

/// Common point of three planes: solves n_i . x = -d_i.
inline Junction3D junction(const Plane& p1, const Plane& p2, const Plane& p3,
                           double det_tol = 1e-9) {
  Mat3 A;
  A.row(0) = p1.normal.transpose();
  A.row(1) = p2.normal.transpose();
  A.row(2) = p3.normal.transpose();
  if (std::abs(A.determinant()) <= det_tol) {
    throw DegenerateConfigurationError("junction: plane normals are near-coplanar");
  }
  Junction3D j;
  j.position = A.partialPivLu().solve(Vec3(-p1.offset, -p2.offset, -p3.offset));
  if (!j.position.allFinite()) {
    throw DegenerateConfigurationError("junction: non-finite solution");
  }
  return j;
}

/// Map a plane through a rigid transform: points x on p map onto the result.
inline Plane transform_plane(const Plane& p, const PoseSE3& T) {
  Plane out = p;
  out.normal = T.rotation * p.normal;
  out.offset = p.offset - out.normal.dot(T.translation);
  return out;
}

// ---------------------------------------------------------------------------
// SO(3) exponential / logarithm (axis-angle)
// ---------------------------------------------------------------------------

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

inline Mat3 rotation_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    return Mat3::Identity() + skew(w);  // first order is exact to tolerance
  }
  const Vec3 axis = w / theta;
  const Mat3 K = skew(axis);
  return Mat3::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * K * K;
}

inline Vec3 rotation_log(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta < 1e-12) {
    return {0.5 * (R(2, 1) - R(1, 2)), 0.5 * (R(0, 2) - R(2, 0)), 0.5 * (R(1, 0) - R(0, 1))};
  }
  if (theta > M_PI - 1e-6) {
    // Near pi: extract the axis from the symmetric part.
    const Mat3 S = 0.5 * (R + Mat3::Identity());
    Vec3 axis(std::sqrt(std::max(S(0, 0), 0.0)), std::sqrt(std::max(S(1, 1), 0.0)),
              std::sqrt(std::max(S(2, 2), 0.0)));
    int k = 0;
    axis.cwiseAbs().maxCoeff(&k);
    if (R(2, 1) - R(1, 2) < 0 && k == 0) axis.x() = -axis.x();
    for (int i = 0; i < 3; ++i) {
      if (i != k && S(k, i) < 0.0) axis[i] = -axis[i];
    }
    axis.normalize();
    if (k == 1 && axis.y() < 0) axis = -axis;
    return theta * axis;
  }
  Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return w * (theta / (2.0 * std::sin(theta)));
}

/// Geodesic distance between two rotations, radians. The atan2 form stays
/// accurate near 0 and pi where acos of the trace loses half the digits.
inline double rotation_angle(const Mat3& Ra, const Mat3& Rb) {
  const Mat3 R = Ra.transpose() * Rb;
  const Vec3 v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * v.norm(), 0.5 * (R.trace() - 1.0));
}

/// Angle between two direction vectors, radians.
inline double vector_angle(const Vec3& a, const Vec3& b) {
  if (a.norm() == 0.0 || b.norm() == 0.0) throw DomainError("vector_angle: zero-length input");
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline double deg(double radians) { return radians * 180.0 / M_PI; }
inline double rad(double degrees) { return degrees * M_PI / 180.0; }

}  // namespace layoutfuse
