#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dprost/pose.hpp"
#include "dprost/rng.hpp"
#include "test_util.hpp"

using namespace dprost;
using testutil::max_abs_diff;
using testutil::random_6d;
using testutil::random_intrinsics;
using testutil::random_pose;

namespace {

// Independent rotation-angle reference via the quaternion representation.
double quaternion_angle(const Mat3& Ra, const Mat3& Rb) {
  const Eigen::Quaterniond qa(Ra), qb(Rb);
  return qa.angularDistance(qb);
}

}  // namespace

TEST_CASE("rotation_from_6d maps the canonical basis to the identity") {
  const Mat3 R = rotation_from_6d(Vec3::UnitX(), Vec3::UnitY());
  CHECK(max_abs_diff(R, Mat3::Identity()) == 0.0);
}

TEST_CASE("rotation_from_6d hand case: quarter turn about z") {
  const Mat3 R = rotation_from_6d(Vec3(0, 1, 0), Vec3(-1, 0, 0));
  Mat3 expected;
  expected.col(0) = Vec3(0, 1, 0);
  expected.col(1) = Vec3(-1, 0, 0);
  expected.col(2) = Vec3(0, 0, 1);
  CHECK(max_abs_diff(R, expected) < 1e-15);
  CHECK(std::abs(geodesic_distance(Mat3::Identity(), R) - M_PI / 2) < 1e-12);
}

TEST_CASE("rotation_from_6d is invariant to positive scaling of its inputs") {
  CHECK(max_abs_diff(rotation_from_6d(Vec3(2, 0, 0), Vec3(0, 3, 0)), Mat3::Identity()) == 0.0);

  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto [e1, e2] = random_6d(rng);
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(0.1, 10.0);
    CHECK(max_abs_diff(rotation_from_6d(e1, e2), rotation_from_6d(a * e1, b * e2)) < 1e-12);
  }
}

TEST_CASE("rotation_from_6d output is orthonormal with det 1 on random inputs") {
  Rng rng(12);
  for (int i = 0; i < 100000; ++i) {
    const auto [e1, e2] = random_6d(rng);
    const Mat3 R = rotation_from_6d(e1, e2);
    CHECK(is_rotation(R, 1e-6));
  }
}

TEST_CASE("rotation_from_6d reconstructs a rotation from its first two columns") {
  // With orthogonal inputs the Gram-Schmidt map must return the generating
  // rotation; quaternions provide the independently constructed reference.
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1));
    if (q.norm() < 1e-3) continue;
    const Mat3 R = q.normalized().toRotationMatrix();
    const Mat3 rec = rotation_from_6d(R.col(0) * rng.uniform(0.5, 2.0),
                                      R.col(1) * rng.uniform(0.5, 2.0));
    CHECK(max_abs_diff(rec, R) < 1e-12);
  }
}

TEST_CASE("rotation_from_6d pins each column by its geometric construction") {
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const auto [e1, e2] = random_6d(rng);
    const Mat3 R = rotation_from_6d(e1, e2);
    // First column is the normalized first input.
    CHECK((R.col(0) - e1.normalized()).norm() < 1e-12);
    // Third column is orthogonal to both inputs and aligned with e1 x e2.
    CHECK(std::abs(R.col(2).dot(e1)) < 1e-12);
    CHECK(std::abs(R.col(2).dot(e2)) < 1e-12);
    CHECK(R.col(2).dot(e1.cross(e2)) > 0.0);
    // Second input lies in the (r1, r2) plane on the positive r2 side.
    CHECK(e2.dot(R.col(1)) > 0.0);
  }
}

TEST_CASE("rotation_from_6d rejects degenerate inputs") {
  CHECK_THROWS_AS(rotation_from_6d(Vec3::Zero(), Vec3::UnitY()), DegenerateRotationInput);
  CHECK_THROWS_AS(rotation_from_6d(Vec3::UnitX(), Vec3::Zero()), DegenerateRotationInput);
  CHECK_THROWS_AS(rotation_from_6d(Vec3(1, 2, 3), Vec3(2, 4, 6)), DegenerateRotationInput);
  CHECK_THROWS_AS(rotation_from_6d(Vec3(1, 0, 0), Vec3(-1e-12, 0, 0)), DegenerateRotationInput);
}

TEST_CASE("is_rotation rejects scalings and reflections") {
  CHECK(is_rotation(Mat3::Identity()));
  CHECK_FALSE(is_rotation(2.0 * Mat3::Identity()));
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  CHECK_FALSE(is_rotation(reflect));
}

TEST_CASE("apply_delta with the identity delta returns the pose unchanged") {
  Rng rng(21);
  const CameraIntrinsics K = random_intrinsics(rng);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    const Pose q = apply_delta(p, PoseDelta::identity(), K);
    CHECK(max_abs_diff(p.R, q.R) == 0.0);
    CHECK((p.t - q.t).norm() == 0.0);
  }
}

TEST_CASE("apply_delta hand case: pixel shift and depth doubling") {
  const CameraIntrinsics K{500.0, 400.0, 320.0, 240.0};
  const Pose prev{Mat3::Identity(), Vec3(0, 0, -4)};
  PoseDelta d;
  d.vx = 0.01 * K.fx;
  d.vz = 2.0;
  const Pose next = apply_delta(prev, d, K);
  CHECK(next.t.x() == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(next.t.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(next.t.z() == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(max_abs_diff(next.R, Mat3::Identity()) == 0.0);
}

TEST_CASE("apply_delta validates its preconditions") {
  const CameraIntrinsics K{500, 500, 320, 240};
  CHECK_THROWS_AS(apply_delta({Mat3::Identity(), Vec3(0, 0, 0)}, PoseDelta::identity(), K),
                  Error);
  PoseDelta bad;
  bad.vz = -1.0;
  CHECK_THROWS_AS(apply_delta({Mat3::Identity(), Vec3(0, 0, -4)}, bad, K), Error);
}

TEST_CASE("extract_delta of a pose against itself is the identity delta") {
  Rng rng(22);
  const CameraIntrinsics K = random_intrinsics(rng);
  const Pose p = random_pose(rng);
  const PoseDelta d = extract_delta(p, p, K);
  CHECK(d.vx == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.vy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.vz == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs_diff(rotation_from_6d(d.e1, d.e2), Mat3::Identity()) < 1e-12);
}

TEST_CASE("extract_delta inverts the hand case") {
  const CameraIntrinsics K{500.0, 400.0, 320.0, 240.0};
  const Pose prev{Mat3::Identity(), Vec3(0, 0, -4)};
  const Pose next{Mat3::Identity(), Vec3(-0.08, 0, -8)};
  const PoseDelta d = extract_delta(prev, next, K);
  CHECK(d.vx == doctest::Approx(0.01 * K.fx).epsilon(1e-12));
  CHECK(d.vy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.vz == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("apply_delta and extract_delta round trip on random pose pairs") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const CameraIntrinsics K = random_intrinsics(rng);
    const Pose prev = random_pose(rng);
    const Pose next = random_pose(rng);

    const PoseDelta d = extract_delta(prev, next, K);
    const Pose back = apply_delta(prev, d, K);
    CHECK(max_abs_diff(back.R, next.R) < 1e-9);
    CHECK((back.t - next.t).norm() < 1e-9);
  }
}

TEST_CASE("extract_delta recovers the parameters of an applied delta") {
  Rng rng(24);
  for (int i = 0; i < 200; ++i) {
    const CameraIntrinsics K = random_intrinsics(rng);
    const Pose prev = random_pose(rng);
    PoseDelta d;
    d.vx = rng.uniform(-20.0, 20.0);
    d.vy = rng.uniform(-20.0, 20.0);
    d.vz = rng.uniform(0.5, 2.0);
    std::tie(d.e1, d.e2) = random_6d(rng);

    const Pose next = apply_delta(prev, d, K);
    const PoseDelta rec = extract_delta(prev, next, K);
    CHECK(std::abs(rec.vx - d.vx) < 1e-9 * std::max(1.0, std::abs(d.vx)));
    CHECK(std::abs(rec.vy - d.vy) < 1e-9 * std::max(1.0, std::abs(d.vy)));
    CHECK(std::abs(rec.vz - d.vz) < 1e-9);
    // The 6d parameters are recovered only up to the rotation they encode.
    CHECK(max_abs_diff(rotation_from_6d(rec.e1, rec.e2), rotation_from_6d(d.e1, d.e2)) < 1e-9);
  }
}

TEST_CASE("initial_pose hand case: centered box gives a straight-ahead pose") {
  const CameraIntrinsics K{500, 500, 320, 240};
  const BoundingBox box{320 - 50, 240 - 50, 100, 100};
  const Pose p = initial_pose(box, K);
  CHECK(max_abs_diff(p.R, Mat3::Identity()) == 0.0);
  CHECK(p.t.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.t.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.t.z() == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("initial_pose projects the object center to the box center") {
  Rng rng(25);
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics K = random_intrinsics(rng);
    const BoundingBox box = testutil::random_box(rng);
    const Pose p = initial_pose(box, K);
    CHECK(p.t.z() < 0.0);
    const Vec2 u = project_point(K, p.R * Vec3::Zero() + p.t);
    CHECK(u.x() == doctest::Approx(box.cx()).epsilon(1e-9));
    CHECK(u.y() == doctest::Approx(box.cy()).epsilon(1e-9));
  }
  CHECK_THROWS_AS(initial_pose({0, 0, 0, 10}, {500, 500, 320, 240}), DegenerateBox);
}

TEST_CASE("geodesic_distance basics and quaternion oracle") {
  Rng rng(26);
  const Mat3 R90 = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
  CHECK(geodesic_distance(R90, R90) == 0.0);
  CHECK(std::abs(geodesic_distance(Mat3::Identity(), R90) - M_PI / 2) < 1e-12);

  for (int i = 0; i < 500; ++i) {
    const Mat3 Ra = rng.rotation(), Rb = rng.rotation();
    const double d = geodesic_distance(Ra, Rb);
    CHECK(d >= 0.0);
    CHECK(d <= M_PI + 1e-12);
    CHECK(std::abs(d - quaternion_angle(Ra, Rb)) < 1e-9);
    CHECK(std::abs(d - geodesic_distance(Rb, Ra)) < 1e-12);
  }
}

TEST_CASE("geodesic_distance satisfies the triangle inequality") {
  Rng rng(27);
  for (int i = 0; i < 500; ++i) {
    const Mat3 Ra = rng.rotation(), Rb = rng.rotation(), Rc = rng.rotation();
    CHECK(geodesic_distance(Ra, Rc) <=
          geodesic_distance(Ra, Rb) + geodesic_distance(Rb, Rc) + 1e-9);
  }
}

TEST_CASE("convert_convention with the identity leaves the pose unchanged") {
  Rng rng(28);
  const Pose p = random_pose(rng);
  const Pose q = convert_convention(p, Mat3::Identity());
  CHECK(max_abs_diff(p.R, q.R) == 0.0);
  CHECK((p.t - q.t).norm() == 0.0);
}

TEST_CASE("convert_convention keeps projections consistent across conventions") {
  // A camera that looks along +z projects with u = p + f * X/Z. Re-expressing
  // the same physical setup under the internal (-z forward) convention must
  // land every point on the same pixel.
  Mat3 D = Mat3::Identity();
  D(2, 2) = -1.0;
  Rng rng(29);
  const CameraIntrinsics K = random_intrinsics(rng);
  for (int i = 0; i < 100; ++i) {
    Pose src;
    src.R = rng.rotation();
    src.t = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(3, 8));  // +z forward
    const Vec3 x = 0.5 * rng.unit_vector();

    const Vec3 X = src.R * x + src.t;
    REQUIRE(X.z() > 0.0);
    const Vec2 u_src(K.px + K.fx * X.x() / X.z(), K.py + K.fy * X.y() / X.z());

    const Pose conv = convert_convention(src, D);
    CHECK(is_rotation(conv.R, 1e-9));
    const Vec3 x_conv = D * x;  // object-space points re-express with the same basis change
    const Vec3 Xc = conv.R * x_conv + conv.t;
    REQUIRE(Xc.z() < 0.0);
    const Vec2 u_conv = project_point(K, Xc);
    CHECK((u_src - u_conv).norm() < 1e-9);
  }
}

TEST_CASE("convert_convention rejects non-signed-permutation inputs") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(convert_convention(Pose{}, bad), InvalidBasisChange);
  Mat3 bad2 = Mat3::Zero();
  bad2(0, 0) = 1.0;
  bad2(0, 1) = 1.0;
  bad2(1, 2) = 1.0;
  CHECK_THROWS_AS(convert_convention(Pose{}, bad2), InvalidBasisChange);
}

TEST_CASE("ray_direction and project_point invert each other") {
  const CameraIntrinsics K{300, 280, 160, 120};
  const Vec3 center = ray_direction(K, K.px, K.py);
  CHECK((center - Vec3(0, 0, -1)).norm() < 1e-15);

  // 45-degree ray for a pixel one focal length off axis.
  const CameraIntrinsics Kiso{100, 100, 64, 64};
  const Vec3 diag = ray_direction(Kiso, 164, 64);
  CHECK((diag - Vec3(1, 0, -1).normalized()).norm() < 1e-12);

  Rng rng(30);
  for (int i = 0; i < 200; ++i) {
    const double l = rng.uniform(0.0, 320.0), m = rng.uniform(0.0, 240.0);
    const Vec3 d = ray_direction(K, l, m);
    CHECK(std::abs(d.norm() - 1.0) < 1e-12);
    CHECK(d.z() < 0.0);
    const Vec2 u = project_point(K, d * rng.uniform(0.5, 20.0));
    CHECK(u.x() == doctest::Approx(l).epsilon(1e-9));
    CHECK(u.y() == doctest::Approx(m).epsilon(1e-9));
  }
}
