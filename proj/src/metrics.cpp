#include "dprost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dprost/errors.hpp"
#include "dprost/parallel.hpp"

namespace dprost {

namespace {

std::vector<Vec3> transform_points(const Pose& p, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& x : pts) out.push_back(p.R * x + p.t);
  return out;
}

}  // namespace

double add_metric(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points) {
  if (points.empty()) throw EmptyPointSet("add_metric: no model points");
  double sum = 0.0;
  for (const Vec3& x : points) sum += ((pred.R * x + pred.t) - (gt.R * x + gt.t)).norm();
  return sum / static_cast<double>(points.size());
}

double add_s_metric(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points,
                    int threads) {
  if (points.empty()) throw EmptyPointSet("add_s_metric: no model points");
  const std::vector<Vec3> p = transform_points(pred, points);
  const std::vector<Vec3> g = transform_points(gt, points);
  std::vector<double> nearest(points.size());
  parallel_for(
      static_cast<std::int64_t>(points.size()),
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) {
          double best = std::numeric_limits<double>::infinity();
          for (const Vec3& q : p) best = std::min(best, (g[i] - q).squaredNorm());
          nearest[i] = std::sqrt(best);
        }
      },
      threads);
  double sum = 0.0;
  for (const double d : nearest) sum += d;
  return sum / static_cast<double>(points.size());
}

double threshold_accuracy(const std::vector<double>& values, double diameter,
                          double threshold_ratio) {
  if (values.empty()) throw EmptyPointSet("threshold_accuracy: no values");
  const double thr = threshold_ratio * diameter;
  std::size_t n = 0;
  for (const double v : values) n += v < thr;
  return static_cast<double>(n) / static_cast<double>(values.size());
}

double auc_add_s(const std::vector<double>& values, double max_threshold) {
  if (values.empty()) throw EmptyPointSet("auc_add_s: no values");
  if (!(max_threshold > 0.0)) throw Error("auc_add_s: max threshold must be positive");
  std::vector<double> v = values;
  for (double& x : v) x = std::clamp(x, 0.0, max_threshold);
  constexpr int kSteps = 1000;
  const auto accuracy = [&](double thr) {
    std::size_t n = 0;
    for (const double x : v) n += x < thr;
    return static_cast<double>(n) / static_cast<double>(v.size());
  };
  // Trapezoidal integral of accuracy(thr)/max over [0, max].
  double auc = 0.0;
  double prev = accuracy(0.0);
  for (int k = 1; k <= kSteps; ++k) {
    const double cur = accuracy(max_threshold * k / kSteps);
    auc += 0.5 * (prev + cur) / kSteps;
    prev = cur;
  }
  return auc;
}

double proj2d(const Pose& pred, const Pose& gt, const std::vector<Vec3>& points,
              const CameraIntrinsics& K) {
  if (points.empty()) throw EmptyPointSet("proj2d: no model points");
  double sum = 0.0;
  for (const Vec3& x : points) {
    const Vec3 a = pred.R * x + pred.t;
    const Vec3 b = gt.R * x + gt.t;
    if (a.z() >= 0.0 || b.z() >= 0.0)
      throw PointBehindCamera("proj2d: transformed point has z >= 0");
    sum += (project_point(K, a) - project_point(K, b)).norm();
  }
  return sum / static_cast<double>(points.size());
}

PoseErrors pose_errors(const Pose& pred, const Pose& gt) {
  return {geodesic_distance(pred.R, gt.R), pred.t - gt.t};
}

MetricReport aggregate_metrics(const std::vector<FrameMetrics>& frames, double d_real,
                               double auc_max_threshold) {
  MetricReport r;
  r.frames = frames;
  r.d_real = d_real;
  if (frames.empty()) return r;
  std::vector<double> add_vals, add_s_vals;
  double proj_sum = 0.0, rot_sum = 0.0;
  for (const FrameMetrics& f : frames) {
    add_vals.push_back(f.add);
    add_s_vals.push_back(f.add_s);
    proj_sum += f.proj2d_px;
    rot_sum += f.rotation_err;
  }
  r.add_accuracy = threshold_accuracy(add_vals, 2.0, 0.1);  // normalized diameter is 2
  r.add_s_accuracy = threshold_accuracy(add_s_vals, 2.0, 0.1);
  r.auc = auc_add_s(add_s_vals, auc_max_threshold);
  r.mean_proj2d = proj_sum / frames.size();
  r.mean_rotation_err = rot_sum / frames.size();
  return r;
}

std::vector<Vec3> subsample_points(const std::vector<Vec3>& points, std::size_t max_points) {
  if (points.size() <= max_points || max_points == 0) return points;
  std::vector<Vec3> out;
  out.reserve(max_points);
  const double stride = static_cast<double>(points.size()) / static_cast<double>(max_points);
  for (std::size_t i = 0; i < max_points; ++i)
    out.push_back(points[static_cast<std::size_t>(i * stride)]);
  return out;
}

}  // namespace dprost
