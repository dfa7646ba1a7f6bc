#pragma once

#include <Eigen/Dense>

#include "dprost/errors.hpp"

namespace dprost {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Camera convention used throughout: +x right, +y down, the camera looks along
// -z, so visible points have z < 0 and poses carry t_z < 0. Object space is
// normalized so the object diameter is 2 (it fits the unit ball).

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double px = 0.0, py = 0.0;

  double mean_focal() const { return 0.5 * (fx + fy); }
};

// Axis-aligned detection box in continuous pixel coordinates. Pixel centers
// sit on the integer lattice, so a w x h image spans [-0.5, w-0.5].
struct BoundingBox {
  double x = 0.0, y = 0.0;  // top-left corner
  double w = 0.0, h = 0.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
};

struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

// Relative pose update. v_x, v_y are pixel-scale image translations, v_z > 0
// a depth ratio, and (e1, e2) a 6D rotation parameterization. The identity
// delta is v = (0, 0, 1) with the canonical basis pair.
struct PoseDelta {
  double vx = 0.0, vy = 0.0, vz = 1.0;
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();

  static PoseDelta identity() { return {}; }
};

bool is_rotation(const Mat3& R, double tol = 1e-6);

// Gram-Schmidt map from two non-parallel vectors to a rotation: r1 = e1/|e1|,
// r3 = normalize(r1 x e2 / |e2|), r2 = r3 x r1, assembled as columns.
Mat3 rotation_from_6d(const Vec3& e1, const Vec3& e2);

// next.t_z = v_z * t_z, image-plane offsets v_x, v_y applied as focal-scaled
// shifts of t_x/t_z, and the delta rotation composed on the left.
Pose apply_delta(const Pose& prev, const PoseDelta& delta, const CameraIntrinsics& K);

// Inverse of apply_delta: recovers v from the translation ratios and the
// relative rotation next.R * prev.R^T as (e1, e2) = (r1, r2).
PoseDelta extract_delta(const Pose& prev, const Pose& next, const CameraIntrinsics& K);

// Distance-from-box-size initialization: |t_z| = fx/w + fy/h for a diameter-2
// object, with t_x, t_y chosen so the object center projects to the box center.
Pose initial_pose(const BoundingBox& box, const CameraIntrinsics& K);

double geodesic_distance(const Mat3& Ra, const Mat3& Rb);

// Re-expresses a pose under a camera-axis basis change D (signed permutation):
// R' = D R D, t' = D t. Object-space points convert as x' = D^T x.
Pose convert_convention(const Pose& pose, const Mat3& D);

// Pinhole projection under the internal convention; requires X_z < 0.
inline Vec2 project_point(const CameraIntrinsics& K, const Vec3& X) {
  return {K.px - K.fx * X.x() / X.z(), K.py - K.fy * X.y() / X.z()};
}

// Unit direction of the ray through continuous pixel (l, m), pointing from the
// camera center toward the image plane (negative z).
Vec3 ray_direction(const CameraIntrinsics& K, double l, double m);

}  // namespace dprost
