#pragma once

#include <vector>

#include "dprost/pose.hpp"

namespace dprost {

// Average distance between corresponding model points under the two poses.
double add_metric(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points);

// Symmetric variant: mean over ground-truth-transformed points of the distance
// to the nearest predicted-transformed point. Never exceeds add_metric.
double add_s_metric(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points,
                    int threads = 0);

// Fraction of values below threshold_ratio * diameter.
double threshold_accuracy(const std::vector<double>& values, double diameter,
                          double threshold_ratio);

// Area under the accuracy-vs-threshold curve over [0, max_threshold],
// trapezoidal with 1000 intervals, values clamped to the range.
double auc_add_s(const std::vector<double>& values, double max_threshold);

// Mean reprojection distance in pixels; throws PointBehindCamera if any
// transformed point has z >= 0.
double proj2d(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points,
              const CameraIntrinsics& K);

struct PoseErrors {
  double rotation = 0.0;  // geodesic, radians
  Vec3 translation = Vec3::Zero();
};
PoseErrors pose_errors(const Pose& pred, const Pose& gt);

struct FrameMetrics {
  int frame = -1;
  double add = 0.0;
  double add_s = 0.0;
  double proj2d_px = 0.0;
  double rotation_err = 0.0;
  Vec3 translation_err = Vec3::Zero();
  bool add_correct = false;  // add < 0.1 * diameter
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double d_real = 2.0;          // real diameter; normalized units scale by d_real/2
  double add_accuracy = 0.0;    // fraction with add < 0.1 d
  double add_s_accuracy = 0.0;
  double auc = 0.0;             // over add_s values
  double mean_proj2d = 0.0;
  double mean_rotation_err = 0.0;
};

// Aggregates per-frame metrics; add/add_s values are in normalized units where
// the object diameter is 2, auc uses max_threshold in the same units.
MetricReport aggregate_metrics(const std::vector<FrameMetrics>& frames, double d_real,
                               double auc_max_threshold);

// Deterministic uniform-stride subsample down to at most max_points.
std::vector<Vec3> subsample_points(const std::vector<Vec3>& points, std::size_t max_points);

}  // namespace dprost
