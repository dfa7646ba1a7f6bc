#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "dprost/losses.hpp"

namespace dprost {

enum class RefineMode { supervised_gm, render_compare_im };

struct RefinerConfig {
  RefineMode mode = RefineMode::render_compare_im;
  int outer_iters = 2;
  int inner_steps = 100;
  double step_size = 0.01;
  double fd_step = 1e-3;
  // When > 0, gradient probes use per-parameter steps chosen so each probe
  // displaces the rendered object by about this many pixels; rendered-crop
  // objectives are piecewise constant below the bin size, so probes must
  // reach across bins. 0 keeps the uniform fd_step.
  double probe_px = 0.0;
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;
  GridConfig grid;
  int threads = 0;
};

struct OuterIterTrace {
  Pose pose;
  double objective = 0.0;
  int steps = 0;
  bool basis_reset = false;           // e-vectors went degenerate and were re-seeded
  std::vector<double> loss_curve;     // objective after each step (monotone)
};

struct RefinementTrace {
  RefineMode mode = RefineMode::render_compare_im;
  std::uint64_t seed = 0;
  double initial_objective = 0.0;
  std::vector<OuterIterTrace> outer;
};

// Target of refinement: the ground-truth pose (supervised_gm) or the observed
// crop (render_compare_im).
using RefineTarget = std::variant<Pose, Appearance>;

// Iterative pose refinement: per outer iteration, adaptive-moment descent over
// the 9 delta parameters with monotone acceptance (a step that increases the
// objective is rejected and the step size halved), then the accepted delta is
// applied and the next iteration restarts from identity with fresh optimizer
// state. The objective trace never increases.
std::pair<Pose, RefinementTrace> refine(const Pose& initial, const RefineTarget& target,
                                        const VoxelFeature& feature,
                                        const VoxelFeature* occupancy,
                                        const CameraIntrinsics& K, const BoundingBox& box,
                                        const RefinerConfig& cfg);

// The optimizer core behind refine, usable with any pose objective.
std::pair<Pose, RefinementTrace> optimize_pose(const Pose& initial, const PoseObjective& objective,
                                               const CameraIntrinsics& K, const RefinerConfig& cfg);

// Detection-box initialization (distance from box size, identity rotation).
Pose initialize_from_box(const BoundingBox& box, const CameraIntrinsics& K);

}  // namespace dprost
