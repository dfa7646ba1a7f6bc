#include "dprost/losses.hpp"

#include <cmath>

#include "dprost/parallel.hpp"

namespace dprost {

double gm_loss(const RayGrid& pred, const RayGrid& gt) {
  if (pred.stage != GridStage::object || gt.stage != GridStage::object)
    throw StageMismatch("gm_loss: expected object-stage grids");
  if (pred.height != gt.height || pred.width != gt.width || pred.n_z != gt.n_z)
    throw ShapeMismatch("gm_loss: grid shapes differ");
  const std::size_t n = pred.point_count();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pred.pts[i * 3] - gt.pts[i * 3];
    const double dy = pred.pts[i * 3 + 1] - gt.pts[i * 3 + 1];
    const double dz = pred.pts[i * 3 + 2] - gt.pts[i * 3 + 2];
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum / static_cast<double>(n);
}

double gd_loss(const Vec3& pred_t, const Vec3& gt_t) {
  return std::abs(gt_t.norm() - pred_t.norm());
}

LossReport total_loss(const Pose& pred, const Pose& gt, const CameraIntrinsics& K,
                      const BoundingBox& box, const GridConfig& cfg) {
  const RayGrid cropped = crop_grid(K, box, cfg.out_res, cfg.n_z);
  LossReport r;
  r.lambda_gd = cfg.lambda_gd;
  r.gm = gm_loss(build_object_grid(cropped, pred), build_object_grid(cropped, gt));
  r.gd = gd_loss(pred.t, gt.t);
  r.total = r.gm + cfg.lambda_gd * r.gd;
  return r;
}

double pm_loss(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points) {
  if (points.empty()) throw EmptyPointSet("pm_loss: no model points");
  double sum = 0.0;
  for (const Vec3& x : points)
    sum += ((pred.R * x + pred.t) - (gt.R * x + gt.t)).norm();
  return sum / static_cast<double>(points.size());
}

double im_loss(const Appearance& pred, const Appearance& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw ShapeMismatch("im_loss: appearance sizes differ");
  const std::size_t n = pred.rgb.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(pred.rgb[i]) - double(gt.rgb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(n);
}

namespace {

double delta_param(const PoseDelta& d, int p) {
  switch (p) {
    case 0: return d.vx;
    case 1: return d.vy;
    case 2: return d.vz;
    case 3: return d.e1.x();
    case 4: return d.e1.y();
    case 5: return d.e1.z();
    case 6: return d.e2.x();
    case 7: return d.e2.y();
    default: return d.e2.z();
  }
}

PoseDelta with_param(PoseDelta d, int p, double v) {
  switch (p) {
    case 0: d.vx = v; break;
    case 1: d.vy = v; break;
    case 2: d.vz = v; break;
    case 3: d.e1.x() = v; break;
    case 4: d.e1.y() = v; break;
    case 5: d.e1.z() = v; break;
    case 6: d.e2.x() = v; break;
    case 7: d.e2.y() = v; break;
    default: d.e2.z() = v; break;
  }
  return d;
}

}  // namespace

Grad9 loss_gradient(const PoseObjective& loss_fn, const Pose& base, const PoseDelta& delta_point,
                    const CameraIntrinsics& K, double h, int threads) {
  const double fbar = K.mean_focal();
  double probes[18];
  parallel_for(
      18,
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) {
          const int p = static_cast<int>(i / 2);
          const double hp = p < 2 ? h * fbar : h;  // vx, vy are pixel-scaled
          const double sign = (i % 2 == 0) ? 1.0 : -1.0;
          const PoseDelta d =
              with_param(delta_point, p, delta_param(delta_point, p) + sign * hp);
          probes[i] = loss_fn(apply_delta(base, d, K));
        }
      },
      threads);
  Grad9 g;
  for (int p = 0; p < 9; ++p) {
    const double hp = p < 2 ? h * fbar : h;
    if (!std::isfinite(probes[2 * p]) || !std::isfinite(probes[2 * p + 1]))
      throw NonFiniteLoss("loss_gradient: non-finite probe");
    g[p] = (probes[2 * p] - probes[2 * p + 1]) / (2.0 * hp);
  }
  return g;
}

Grad9 gd_loss_gradient(const Pose& base, const PoseDelta& delta_point, const CameraIntrinsics& K,
                       const Vec3& gt_t) {
  // |t'| as a function of (vx, vy, vz): t' = ((vx/fx + ax) vz tz,
  // (vy/fy + ay) vz tz, vz tz) with ax = tx/tz, ay = ty/tz.
  const double tz = base.t.z();
  const double ax = base.t.x() / tz;
  const double ay = base.t.y() / tz;
  const double ux = delta_point.vx / K.fx + ax;
  const double uy = delta_point.vy / K.fy + ay;
  const Vec3 tp(ux * delta_point.vz * tz, uy * delta_point.vz * tz, delta_point.vz * tz);
  const double norm = tp.norm();
  if (norm == 0.0) throw NonFiniteLoss("gd_loss_gradient: zero translation");
  const double outer = norm > gt_t.norm() ? 1.0 : -1.0;  // d|gt - x|/dx
  const double vz_tz = delta_point.vz * tz;
  Grad9 g = Grad9::Zero();
  g[0] = outer * tp.x() * vz_tz / (K.fx * norm);
  g[1] = outer * tp.y() * vz_tz / (K.fy * norm);
  g[2] = outer * (tp.x() * ux * tz + tp.y() * uy * tz + tp.z() * tz) / norm;
  return g;
}

}  // namespace dprost
