#include "dprost/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "dprost/parallel.hpp"

namespace dprost {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec9 = Eigen::Matrix<double, 9, 1>;

// Optimizer coordinates: [vx/fbar, vy/fbar, vz, e1, e2]. Scaling the image
// translations by the mean focal length makes one optimizer unit comparable
// across all nine parameters.
Vec9 identity_coords() {
  Vec9 x;
  x << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  return x;
}

PoseDelta to_delta(const Vec9& x, double fbar) {
  PoseDelta d;
  d.vx = x[0] * fbar;
  d.vy = x[1] * fbar;
  d.vz = x[2];
  d.e1 = Vec3(x[3], x[4], x[5]);
  d.e2 = Vec3(x[6], x[7], x[8]);
  return d;
}

struct AdamState {
  Vec9 m = Vec9::Zero();
  Vec9 v = Vec9::Zero();
  int t = 0;
};

}  // namespace

std::pair<Pose, RefinementTrace> optimize_pose(const Pose& initial, const PoseObjective& objective,
                                               const CameraIntrinsics& K,
                                               const RefinerConfig& cfg) {
  const double fbar = K.mean_focal();
  Pose pose = initial;
  RefinementTrace trace;
  trace.mode = cfg.mode;
  trace.seed = cfg.seed;

  // Invalid probes (degenerate deltas, pushed distance <= 1, non-finite
  // values) read as +inf so monotone acceptance rejects them.
  const auto guarded = [&](const Pose& base, const Vec9& x) -> double {
    try {
      const double v = objective(apply_delta(base, to_delta(x, fbar), K));
      return std::isfinite(v) ? v : kInf;
    } catch (const Error&) {
      return kInf;
    }
  };

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    OuterIterTrace it;
    Vec9 x = identity_coords();
    AdamState adam;
    bool moved = false;
    double lr = cfg.step_size;
    double f_cur = objective(pose);  // identity delta
    if (!std::isfinite(f_cur)) throw NonFiniteLoss("optimize_pose: non-finite objective");
    if (outer == 0) trace.initial_objective = f_cur;
    it.loss_curve.push_back(f_cur);

    // Probe steps per optimizer coordinate. In pixel-matched mode the image
    // translations move probe_px pixels directly, while depth and rotation
    // coordinates are scaled by |t_z|/f so a unit-object surface point moves
    // about probe_px pixels on screen.
    Vec9 h = Vec9::Constant(cfg.fd_step);
    if (cfg.probe_px > 0.0) {
      const double h_xy = cfg.probe_px / fbar;
      const double h_zrot = cfg.probe_px * std::abs(pose.t.z()) / fbar;
      h[0] = h[1] = std::max(h_xy, cfg.fd_step);
      for (int p = 2; p < 9; ++p) h[p] = std::max(h_zrot, cfg.fd_step);
    }

    if (f_cur > 0.0) {
      int stall = 0;  // consecutive accepted steps with improvement below tol
      // Rasterized objectives are piecewise constant, so a run of flat steps
      // may just be the optimizer coasting across a plateau while the step
      // size recovers; give it a budget-scaled stretch before declaring
      // convergence.
      const int stall_limit = std::max(12, cfg.inner_steps / 4);
      // When repeated halvings drive the step size to the floor, the moment
      // estimates are stale for the local geometry; restart them (and the
      // step size) a couple of times before giving up on this iteration.
      int restarts_left = 2;
      for (int step = 0; step < cfg.inner_steps; ++step) {
        // Re-seed the rotation parameterization if it collapsed.
        try {
          rotation_from_6d(to_delta(x, fbar).e1, to_delta(x, fbar).e2);
        } catch (const DegenerateRotationInput&) {
          x.segment<3>(3) = Vec3::UnitX();
          x.segment<3>(6) = Vec3::UnitY();
          it.basis_reset = true;
        }

        // Central differences of the objective in optimizer coordinates.
        double probes[18];
        parallel_for(
            18,
            [&](std::int64_t b, std::int64_t e) {
              for (std::int64_t i = b; i < e; ++i) {
                Vec9 xp = x;
                xp[i / 2] += (i % 2 == 0) ? h[i / 2] : -h[i / 2];
                probes[i] = guarded(pose, xp);
              }
            },
            cfg.threads);
        Vec9 grad;
        bool grad_ok = true;
        for (int p = 0; p < 9; ++p) {
          grad[p] = (probes[2 * p] - probes[2 * p + 1]) / (2.0 * h[p]);
          grad_ok = grad_ok && std::isfinite(grad[p]);
        }

        bool accepted = false;
        if (grad_ok) {
          const AdamState saved = adam;
          adam.t += 1;
          adam.m = 0.9 * adam.m + 0.1 * grad;
          adam.v = 0.999 * adam.v + 0.001 * grad.cwiseProduct(grad);
          const double mc = 1.0 - std::pow(0.9, adam.t);
          const double vc = 1.0 - std::pow(0.999, adam.t);
          const Eigen::Array<double, 9, 1> denom = (adam.v / vc).cwiseSqrt().array();
          // Relative damping: coordinates whose gradient is tiny against the
          // dominant one step proportionally less instead of taking the full
          // sign step, which would mostly add noise and force rejections.
          const double eps = 1e-2 * denom.maxCoeff() + 1e-12;
          const Vec9 step_vec = (adam.m / mc).cwiseQuotient((denom + eps).matrix());
          const Vec9 x_prop = x - lr * step_vec;
          const double f_prop = guarded(pose, x_prop);
          if (f_prop <= f_cur) {
            const double improvement = f_cur - f_prop;
            x = x_prop;
            f_cur = f_prop;
            accepted = true;
            moved = true;
            it.steps = step + 1;
            it.loss_curve.push_back(f_cur);
            lr = std::min(lr * 1.25, cfg.step_size);  // recover after halvings
            // Flat accepted steps happen on rasterization plateaus; declare
            // convergence only after several in a row.
            stall = improvement < cfg.convergence_tol ? stall + 1 : 0;
            if (stall >= stall_limit) break;
            continue;
          }
          adam = saved;  // rejected: roll the moments back
        }
        (void)accepted;
        lr *= 0.5;
        it.steps = step + 1;
        it.loss_curve.push_back(f_cur);
        if (lr < cfg.step_size * 1e-6) {
          if (restarts_left-- <= 0) break;
          adam = AdamState{};
          lr = cfg.step_size;
          stall = 0;
        }
      }
    }

    if (moved) pose = apply_delta(pose, to_delta(x, fbar), K);
    it.pose = pose;
    it.objective = f_cur;
    trace.outer.push_back(std::move(it));
  }
  return {pose, trace};
}

std::pair<Pose, RefinementTrace> refine(const Pose& initial, const RefineTarget& target,
                                        const VoxelFeature& feature,
                                        const VoxelFeature* occupancy, const CameraIntrinsics& K,
                                        const BoundingBox& box, const RefinerConfig& cfg) {
  const RayGrid cropped = crop_grid(K, box, cfg.grid.out_res, cfg.grid.n_z);

  PoseObjective objective;
  if (cfg.mode == RefineMode::supervised_gm) {
    const Pose* gt = std::get_if<Pose>(&target);
    if (!gt) throw Error("refine: supervised_gm needs a ground-truth pose target");
    const Pose gt_pose = *gt;
    const auto gt_grid = std::make_shared<RayGrid>(build_object_grid(cropped, gt_pose));
    objective = [cropped, gt_grid, gt_pose, lambda = cfg.grid.lambda_gd](const Pose& p) {
      return gm_loss(build_object_grid(cropped, p), *gt_grid) + lambda * gd_loss(p.t, gt_pose.t);
    };
  } else {
    const Appearance* obs = std::get_if<Appearance>(&target);
    if (!obs) throw Error("refine: render_compare_im needs an observed crop target");
    if (obs->width != cfg.grid.out_res || obs->height != cfg.grid.out_res)
      throw ShapeMismatch("refine: observed crop does not match out_res");
    const Appearance observed = *obs;
    const VoxelFeature* occ = occupancy;
    const auto mask =
        std::make_shared<SamplingMask>(build_sampling_mask(occ ? *occ : feature));
    objective = [cropped, observed, &feature, occ, mask](const Pose& p) {
      return im_loss(render_over_crop(feature, occ, cropped, p, 1, mask.get()), observed);
    };
    // Probe across one render bin so central differences see through the
    // rasterization staircase of the crop.
    RefinerConfig render_cfg = cfg;
    if (render_cfg.probe_px <= 0.0)
      render_cfg.probe_px = square_box(box).w / cfg.grid.out_res;
    return optimize_pose(initial, objective, K, render_cfg);
  }
  return optimize_pose(initial, objective, K, cfg);
}

Pose initialize_from_box(const BoundingBox& box, const CameraIntrinsics& K) {
  return initial_pose(box, K);
}

}  // namespace dprost
