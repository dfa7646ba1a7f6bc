#pragma once

#include <functional>
#include <optional>

#include "dprost/grid.hpp"
#include "dprost/project.hpp"

namespace dprost {

struct GridConfig {
  int out_res = 128;
  int n_z = 64;
  double lambda_gd = 1.0;
  double fd_step = 1e-3;
};

struct LossReport {
  double gm = 0.0;
  double gd = 0.0;
  double total = 0.0;
  double lambda_gd = 1.0;
  std::optional<double> pm;
  std::optional<double> im;
};

// Grid matching: mean pointwise Euclidean distance between two object grids.
double gm_loss(const RayGrid& pred, const RayGrid& gt);

// Grid distance: | |t_gt| - |t_pred| |.
double gd_loss(const Vec3& pred_t, const Vec3& gt_t);

// Builds both object grids over the same crop and combines gm + lambda * gd.
LossReport total_loss(const Pose& pred, const Pose& gt, const CameraIntrinsics& K,
                      const BoundingBox& box, const GridConfig& cfg);

// Point matching baseline: mean distance between camera-space transforms of
// the model points.
double pm_loss(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points);

// Image matching baseline: mean squared difference over all pixels and
// channels of two equal-size appearances.
double im_loss(const Appearance& pred, const Appearance& gt);

using PoseObjective = std::function<double(const Pose&)>;
using Grad9 = Eigen::Matrix<double, 9, 1>;

// Central finite differences of loss_fn(apply_delta(base, .)) with respect to
// the 9 delta parameters [vx, vy, vz, e1, e2], evaluated at delta_point. The
// pixel-scale parameters vx, vy use step h * mean_focal. Throws NonFiniteLoss
// if any probe is non-finite.
Grad9 loss_gradient(const PoseObjective& loss_fn, const Pose& base, const PoseDelta& delta_point,
                    const CameraIntrinsics& K, double h = 1e-3, int threads = 0);

// Closed-form gradient of gd_loss w.r.t. the delta parameters (rotation
// entries are zero); used to cross-check the finite-difference path.
Grad9 gd_loss_gradient(const Pose& base, const PoseDelta& delta_point, const CameraIntrinsics& K,
                       const Vec3& gt_t);

}  // namespace dprost
