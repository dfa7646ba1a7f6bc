#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dprost/carve.hpp"
#include "dprost/rng.hpp"
#include "dprost/synth.hpp"
#include "test_util.hpp"

using namespace dprost;

namespace {

// Six orthogonal views around the object, all looking at it from distance 4.
std::vector<Observation> orthogonal_views(const SyntheticShape& shape) {
  const CameraIntrinsics K{160, 160, 63.5, 63.5};
  std::vector<Mat3> rotations;
  rotations.push_back(Mat3::Identity());
  rotations.push_back(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitX()).toRotationMatrix());
  rotations.push_back(Eigen::AngleAxisd(-M_PI / 2, Vec3::UnitX()).toRotationMatrix());
  rotations.push_back(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()).toRotationMatrix());
  rotations.push_back(Eigen::AngleAxisd(-M_PI / 2, Vec3::UnitY()).toRotationMatrix());
  rotations.push_back(Eigen::AngleAxisd(M_PI, Vec3::UnitY()).toRotationMatrix());

  std::vector<Observation> views;
  for (const Mat3& R : rotations) {
    Pose pose{R, Vec3(0, 0, -4)};
    views.push_back(render_observation(shape, pose, K, 128, 128));
  }
  return views;
}

// Independent restatement of the carving rule: a voxel stays occupied iff its
// center is inside the unit ball and every reference sees it at an on-mask
// pixel (nearest lookup, round half away from zero; behind the camera or
// outside the image counts as off).
std::vector<std::uint8_t> hull_oracle(const ReferenceSet& refs, int S) {
  std::vector<std::uint8_t> occ(std::size_t(S) * S * S, 1);
  std::size_t i = 0;
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix, ++i) {
        const Vec3 c(VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                     VoxelFeature::center_coord(iz, S));
        if (c.norm() > 1.0) {
          occ[i] = 0;
          continue;
        }
        for (const Observation& obs : refs.observations) {
          const Vec3 X = obs.pose.R * c + obs.pose.t;
          if (X.z() >= 0.0) {
            occ[i] = 0;
            break;
          }
          const Vec2 uv = project_point(obs.K, X);
          const int px = int(std::round(uv.x())), py = int(std::round(uv.y()));
          if (px < 0 || px >= obs.mask.width || py < 0 || py >= obs.mask.height ||
              obs.mask.at(px, py) <= 127) {
            occ[i] = 0;
            break;
          }
        }
      }
  return occ;
}

Observation uniform_view(float gray_value, const Pose& pose) {
  Observation obs;
  obs.K = {100, 100, 127.5, 127.5};
  obs.rgb = Image::rgb(256, 256);
  for (auto& v : obs.rgb.data) v = std::uint8_t(std::lround(gray_value * 255.0));
  obs.mask = Image::gray(256, 256);
  for (auto& v : obs.mask.data) v = 255;
  obs.box = {0, 0, 256, 256};
  obs.pose = pose;
  return obs;
}

}  // namespace

TEST_CASE("carve_mask matches the brute-force visual hull for sphere and cube") {
  for (const ShapeKind kind : {ShapeKind::sphere, ShapeKind::cube}) {
    SyntheticShape shape;
    shape.kind = kind;
    ReferenceSet refs{orthogonal_views(shape)};
    const int S = 32;
    const VoxelFeature occ = carve_mask(refs, S);
    const auto oracle = hull_oracle(refs, S);
    REQUIRE(occ.values.size() == oracle.size());
    int mismatches = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i)
      mismatches += (occ.values[i] != 0.0f) != (oracle[i] != 0);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("carving a sphere keeps interior voxels and stays near the true ball") {
  SyntheticShape shape;  // unit sphere
  ReferenceSet refs{orthogonal_views(shape)};
  const int S = 32;
  const VoxelFeature occ = carve_mask(refs, S);
  const double pitch = occ.voxel_pitch();
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix) {
        const double r = occ.voxel_center(ix, iy, iz).norm();
        // Strict interior of the true surface must survive carving.
        if (r <= 1.0 - 2 * pitch) CHECK(occ.at(ix, iy, iz) == 1.0f);
        // The hull of a sphere cannot exceed the ball clip.
        if (r > 1.0) CHECK(occ.at(ix, iy, iz) == 0.0f);
      }
}

TEST_CASE("carve with an unobstructed all-on mask reduces to the unit-ball clip") {
  ReferenceSet refs{{uniform_view(0.5f, Pose{Mat3::Identity(), Vec3(0, 0, -4)})}};
  const int S = 16;
  const VoxelFeature occ = carve_mask(refs, S);
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix) {
        const bool in_ball = occ.voxel_center(ix, iy, iz).norm() <= 1.0;
        CHECK(occ.at(ix, iy, iz) == (in_ball ? 1.0f : 0.0f));
      }
}

TEST_CASE("carved colors average the per-view lookups") {
  // Two full-frame views with uniform colors 0.2 and 0.6 average to 0.4 in
  // every occupied voxel (51/255 and 153/255 are exact in binary floats'
  // denominators, so the mean is 0.4 to float precision).
  ReferenceSet refs{{uniform_view(0.2f, Pose{Mat3::Identity(), Vec3(0, 0, -4)}),
                     uniform_view(0.6f, Pose{Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()).toRotationMatrix(),
                                             Vec3(0, 0, -4)})}};
  const int S = 12;
  const VoxelFeature colored = carve(refs, S);
  CHECK(colored.channels == 3);
  int occupied = 0;
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix) {
        const bool in_ball = colored.voxel_center(ix, iy, iz).norm() <= 1.0;
        for (int c = 0; c < 3; ++c) {
          const float v = colored.at(ix, iy, iz, c);
          if (in_ball) {
            CHECK(v == doctest::Approx(0.4).epsilon(1e-6));
          } else {
            CHECK(v == 0.0f);
          }
        }
        occupied += in_ball;
      }
  CHECK(occupied > 0);
}

TEST_CASE("adding a reference never grows the carved hull") {
  SyntheticShape shape;
  shape.kind = ShapeKind::box;
  const auto views = orthogonal_views(shape);
  const int S = 24;
  VoxelFeature prev;
  for (std::size_t n = 1; n <= views.size(); ++n) {
    ReferenceSet refs{{views.begin(), views.begin() + n}};
    const VoxelFeature occ = carve_mask(refs, S);
    if (n > 1) {
      for (std::size_t i = 0; i < occ.values.size(); ++i) CHECK(occ.values[i] <= prev.values[i]);
    }
    prev = occ;
  }
}

TEST_CASE("project_canvas agrees with per-voxel projection") {
  Rng rng(71);
  const CameraIntrinsics K = testutil::random_intrinsics(rng);
  // Close pose: part of the lattice ends up behind the camera.
  Pose pose;
  pose.R = rng.rotation();
  pose.t = Vec3(0.1, -0.2, -0.5);
  const int S = 8;
  const CanvasProjection cp = project_canvas(pose, K, S);
  REQUIRE(cp.size == S);

  int behind = 0, in_front = 0;
  std::size_t i = 0;
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix, ++i) {
        const Vec3 c(VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                     VoxelFeature::center_coord(iz, S));
        const Vec3 X = pose.R * c + pose.t;
        if (X.z() >= 0.0) {
          CHECK(cp.valid[i] == 0);
          ++behind;
        } else {
          CHECK(cp.valid[i] == 1);
          const Vec2 uv = project_point(K, X);
          CHECK(std::abs(cp.xy[i * 2] - uv.x()) < 1e-9);
          CHECK(std::abs(cp.xy[i * 2 + 1] - uv.y()) < 1e-9);
          ++in_front;
        }
      }
  CHECK(behind > 0);
  CHECK(in_front > 0);
}

TEST_CASE("select_references starts from the largest mask") {
  Rng rng(72);
  std::vector<Observation> views;
  for (int i = 0; i < 6; ++i) {
    Observation o;
    o.mask = Image::gray(32, 32);
    const int area = (i == 3) ? 400 : 100 + i;
    for (int k = 0; k < area; ++k) o.mask.data[k] = 255;
    o.pose.R = rng.rotation();
    o.pose.t = Vec3(0, 0, -4);
    views.push_back(std::move(o));
  }
  CHECK(select_reference_indices(views, 1) == std::vector<int>{3});
  const ReferenceSet refs = select_references(views, 1);
  REQUIRE(refs.observations.size() == 1u);
  CHECK(refs.observations[0].mask.data == views[3].mask.data);
}

TEST_CASE("select_references spreads over rotations: opposite views win") {
  // Four views rotated 0/90/180/270 degrees about y with identical masks:
  // the seed is index 0 (ties break low) and the farthest rotation from it is
  // the 180-degree view.
  std::vector<Observation> views;
  for (const double deg : {0.0, 90.0, 180.0, 270.0}) {
    Observation o;
    o.mask = Image::gray(8, 8);
    for (auto& v : o.mask.data) v = 255;
    o.pose.R = Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3::UnitY()).toRotationMatrix();
    o.pose.t = Vec3(0, 0, -4);
    views.push_back(std::move(o));
  }
  CHECK(select_reference_indices(views, 2) == std::vector<int>({0, 2}));
}

TEST_CASE("select_references matches a greedy farthest-point oracle") {
  Rng rng(73);
  std::vector<Observation> views;
  for (int i = 0; i < 20; ++i) {
    Observation o;
    o.mask = Image::gray(16, 16);
    const int area = rng.uniform_int(1, 200);
    for (int k = 0; k < area; ++k) o.mask.data[k] = 255;
    o.pose.R = rng.rotation();
    o.pose.t = Vec3(0, 0, -5);
    views.push_back(std::move(o));
  }

  // Straightforward restatement: seed with the largest area (strictly greater
  // wins, ties to the lower index), then repeatedly take the view maximizing
  // the minimum geodesic distance to everything selected so far.
  std::vector<int> oracle;
  {
    int best = 0;
    std::size_t best_area = 0;
    for (int i = 0; i < 20; ++i) {
      std::size_t a = 0;
      for (const auto v : views[i].mask.data) a += v > 127;
      if (a > best_area) {
        best_area = a;
        best = i;
      }
    }
    oracle.push_back(best);
    while (oracle.size() < 5) {
      int far = -1;
      double far_dist = -1.0;
      for (int i = 0; i < 20; ++i) {
        if (std::find(oracle.begin(), oracle.end(), i) != oracle.end()) continue;
        double d = std::numeric_limits<double>::infinity();
        for (const int s : oracle) d = std::min(d, geodesic_distance(views[i].pose.R, views[s].pose.R));
        if (d > far_dist) {
          far_dist = d;
          far = i;
        }
      }
      oracle.push_back(far);
    }
  }
  CHECK(select_reference_indices(views, 5) == oracle);
}

TEST_CASE("rgba carving is consistent with the split volumes") {
  SyntheticShape shape;
  shape.texture = TextureKind::axis_gradient;
  ReferenceSet refs{orthogonal_views(shape)};
  const int S = 16;
  const VoxelFeature rgba = carve_rgba(refs, S);
  CHECK(rgba.channels == 4);
  const VoxelFeature color = rgba_color(rgba);
  const VoxelFeature occ = rgba_occupancy(rgba);
  const VoxelFeature direct_color = carve(refs, S);
  const VoxelFeature direct_occ = carve_mask(refs, S);
  CHECK(color.values == direct_color.values);
  CHECK(occ.values == direct_occ.values);

  CHECK_THROWS_AS(rgba_color(direct_color), ShapeMismatch);
  CHECK_THROWS_AS(rgba_occupancy(direct_occ), ShapeMismatch);
}

TEST_CASE("carving is bitwise identical across thread counts") {
  SyntheticShape shape;
  shape.kind = ShapeKind::cube;
  shape.texture = TextureKind::two_tone;
  ReferenceSet refs{orthogonal_views(shape)};
  const VoxelFeature a = carve_rgba(refs, 20, 1);
  const VoxelFeature b = carve_rgba(refs, 20, 4);
  CHECK(a.values == b.values);
}

TEST_CASE("carve rejects invalid inputs") {
  CHECK_THROWS_AS(carve(ReferenceSet{}, 8), EmptyReferenceSet);
  std::vector<Observation> one(1);
  one[0].mask = Image::gray(4, 4);
  CHECK_THROWS_AS(select_reference_indices(one, 2), Error);
  CHECK_THROWS_AS(select_reference_indices({}, 1), EmptyTrainingSet);
}
