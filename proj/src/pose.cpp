#include "dprost/pose.hpp"

#include <cmath>

namespace dprost {

namespace {
constexpr double kDegenerateEps = 1e-8;
}

bool is_rotation(const Mat3& R, double tol) {
  const Mat3 gram = R.transpose() * R;
  return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 rotation_from_6d(const Vec3& e1, const Vec3& e2) {
  const double n1 = e1.norm();
  const double n2 = e2.norm();
  if (n1 <= kDegenerateEps || n2 <= kDegenerateEps)
    throw DegenerateRotationInput("rotation_from_6d: near-zero input vector");
  const Vec3 r1 = e1 / n1;
  Vec3 r3 = r1.cross(e2) / n2;
  const double n3 = r3.norm();  // sin of the angle between e1 and e2
  if (n3 <= kDegenerateEps)
    throw DegenerateRotationInput("rotation_from_6d: input vectors are parallel");
  r3 /= n3;
  const Vec3 r2 = r3.cross(r1);
  Mat3 R;
  R.col(0) = r1;
  R.col(1) = r2;
  R.col(2) = r3;
  return R;
}

Pose apply_delta(const Pose& prev, const PoseDelta& delta, const CameraIntrinsics& K) {
  if (prev.t.z() == 0.0) throw Error("apply_delta: previous pose has t_z = 0");
  if (!(delta.vz > 0.0)) throw Error("apply_delta: v_z must be positive");
  const double tz = delta.vz * prev.t.z();
  const double tx = (delta.vx / K.fx + prev.t.x() / prev.t.z()) * tz;
  const double ty = (delta.vy / K.fy + prev.t.y() / prev.t.z()) * tz;
  return {rotation_from_6d(delta.e1, delta.e2) * prev.R, Vec3(tx, ty, tz)};
}

PoseDelta extract_delta(const Pose& prev, const Pose& next, const CameraIntrinsics& K) {
  if (prev.t.z() == 0.0 || next.t.z() == 0.0)
    throw Error("extract_delta: poses must have nonzero t_z");
  PoseDelta d;
  d.vz = next.t.z() / prev.t.z();
  d.vx = K.fx * (next.t.x() / next.t.z() - prev.t.x() / prev.t.z());
  d.vy = K.fy * (next.t.y() / next.t.z() - prev.t.y() / prev.t.z());
  const Mat3 rel = next.R * prev.R.transpose();
  d.e1 = rel.col(0);
  d.e2 = rel.col(1);
  return d;
}

Pose initial_pose(const BoundingBox& box, const CameraIntrinsics& K) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw DegenerateBox("initial_pose: empty box");
  // Normalized diameter 2: distance = (d/2) (fx/w + fy/h) with d = 2.
  const double dist = K.fx / box.w + K.fy / box.h;
  const double tx = (box.cx() - K.px) * dist / K.fx;
  const double ty = (box.cy() - K.py) * dist / K.fy;
  return {Mat3::Identity(), Vec3(tx, ty, -dist)};
}

double geodesic_distance(const Mat3& Ra, const Mat3& Rb) {
  const double c = ((Ra.transpose() * Rb).trace() - 1.0) * 0.5;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

namespace {

bool is_signed_permutation(const Mat3& D) {
  for (int i = 0; i < 3; ++i) {
    int row_nz = 0, col_nz = 0;
    for (int j = 0; j < 3; ++j) {
      const double r = D(i, j), c = D(j, i);
      if (r != 0.0) {
        if (std::abs(r) != 1.0) return false;
        ++row_nz;
      }
      if (c != 0.0) ++col_nz;
    }
    if (row_nz != 1 || col_nz != 1) return false;
  }
  return true;
}

}  // namespace

Pose convert_convention(const Pose& pose, const Mat3& D) {
  if (!is_signed_permutation(D))
    throw InvalidBasisChange("convert_convention: basis change must be a signed permutation");
  return {D * pose.R * D, D * pose.t};
}

Vec3 ray_direction(const CameraIntrinsics& K, double l, double m) {
  const Vec3 v((l - K.px) / K.fx, (m - K.py) / K.fy, -1.0);
  return v / v.norm();
}

}  // namespace dprost
