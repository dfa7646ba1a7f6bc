#include "dprost/carve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dprost/parallel.hpp"

namespace dprost {

std::vector<int> select_reference_indices(const std::vector<Observation>& training, int n_refs) {
  if (training.empty()) throw EmptyTrainingSet("select_references: no training views");
  if (n_refs < 1 || static_cast<std::size_t>(n_refs) > training.size())
    throw Error("select_references: n_refs must be in [1, |training|]");

  const auto mask_area = [](const Observation& o) {
    std::size_t n = 0;
    for (const auto v : o.mask.data) n += v > 127;
    return n;
  };

  std::vector<int> selected;
  selected.reserve(n_refs);
  std::size_t best_area = 0;
  int best = 0;
  for (int i = 0; i < static_cast<int>(training.size()); ++i) {
    const std::size_t a = mask_area(training[i]);
    if (a > best_area) {
      best_area = a;
      best = i;
    }
  }
  selected.push_back(best);

  std::vector<double> min_dist(training.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(selected.size()) < n_refs) {
    const Mat3& last = training[selected.back()].pose.R;
    int far = -1;
    double far_dist = -1.0;
    for (int i = 0; i < static_cast<int>(training.size()); ++i) {
      min_dist[i] = std::min(min_dist[i], geodesic_distance(training[i].pose.R, last));
      const bool taken =
          std::find(selected.begin(), selected.end(), i) != selected.end();
      if (!taken && min_dist[i] > far_dist) {
        far_dist = min_dist[i];
        far = i;
      }
    }
    selected.push_back(far);
  }
  return selected;
}

ReferenceSet select_references(const std::vector<Observation>& training, int n_refs) {
  ReferenceSet out;
  const std::vector<int> selected = select_reference_indices(training, n_refs);
  out.observations.reserve(selected.size());
  for (const int i : selected) out.observations.push_back(training[i]);
  return out;
}

CanvasProjection project_canvas(const Pose& pose, const CameraIntrinsics& K, int S) {
  if (S < 1) throw Error("project_canvas: voxel resolution must be positive");
  CanvasProjection cp;
  cp.size = S;
  const std::size_t n = std::size_t(S) * S * S;
  cp.xy.assign(n * 2, 0.0);
  cp.valid.assign(n, 0);
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix) {
        const Vec3 v(VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                     VoxelFeature::center_coord(iz, S));
        const Vec3 X = pose.R * v + pose.t;
        const std::size_t idx = (std::size_t(iz) * S + iy) * S + ix;
        if (X.z() >= 0.0) continue;  // behind the camera
        const Vec2 uv = project_point(K, X);
        cp.xy[idx * 2] = uv.x();
        cp.xy[idx * 2 + 1] = uv.y();
        cp.valid[idx] = 1;
      }
  return cp;
}

namespace {

struct CarveAccum {
  std::vector<std::uint8_t> occupied;  // product of per-view mask lookups, ball-clipped
  std::vector<double> rgb;             // plain 1/N average of per-view color lookups
};

CarveAccum carve_accumulate(const ReferenceSet& refs, int S, int threads) {
  if (refs.observations.empty()) throw EmptyReferenceSet("carve: empty reference set");
  const std::size_t n_vox = std::size_t(S) * S * S;
  CarveAccum acc;
  acc.occupied.assign(n_vox, 0);
  acc.rgb.assign(n_vox * 3, 0.0);

  // Unit-ball clip: the feature lives in the object-space unit sphere.
  parallel_for(
      n_vox,
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) {
          const int ix = static_cast<int>(i % S);
          const int iy = static_cast<int>((i / S) % S);
          const int iz = static_cast<int>(i / (std::size_t(S) * S));
          const Vec3 c(VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                       VoxelFeature::center_coord(iz, S));
          acc.occupied[i] = c.norm() <= 1.0 ? 1 : 0;
        }
      },
      threads);

  const double inv_n = 1.0 / static_cast<double>(refs.observations.size());
  for (const Observation& obs : refs.observations) {
    const Mat3 R = obs.pose.R;
    const Vec3 t = obs.pose.t;
    parallel_for(
        n_vox,
        [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t i = b; i < e; ++i) {
            const int ix = static_cast<int>(i % S);
            const int iy = static_cast<int>((i / S) % S);
            const int iz = static_cast<int>(i / (std::size_t(S) * S));
            const Vec3 v(VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                         VoxelFeature::center_coord(iz, S));
            const Vec3 X = R * v + t;
            bool inside = false;
            int px = 0, py = 0;
            if (X.z() < 0.0) {
              const Vec2 uv = project_point(obs.K, X);
              px = static_cast<int>(std::round(uv.x()));  // round half away from zero
              py = static_cast<int>(std::round(uv.y()));
              inside = px >= 0 && px < obs.mask.width && py >= 0 && py < obs.mask.height;
            }
            if (!inside || obs.mask.at(px, py) <= 127) acc.occupied[i] = 0;
            if (inside) {
              for (int c = 0; c < 3; ++c)
                acc.rgb[i * 3 + c] += inv_n * (obs.rgb.at(px, py, c) / 255.0);
            }
          }
        },
        threads);
  }
  return acc;
}

}  // namespace

VoxelFeature carve(const ReferenceSet& refs, int S, int threads) {
  const CarveAccum acc = carve_accumulate(refs, S, threads);
  VoxelFeature f{S, 3, std::vector<float>(std::size_t(S) * S * S * 3, 0.0f)};
  for (std::size_t i = 0; i < acc.occupied.size(); ++i)
    if (acc.occupied[i])
      for (int c = 0; c < 3; ++c) f.values[i * 3 + c] = static_cast<float>(acc.rgb[i * 3 + c]);
  return f;
}

VoxelFeature carve_mask(const ReferenceSet& refs, int S, int threads) {
  const CarveAccum acc = carve_accumulate(refs, S, threads);
  VoxelFeature f{S, 1, std::vector<float>(acc.occupied.size(), 0.0f)};
  for (std::size_t i = 0; i < acc.occupied.size(); ++i) f.values[i] = acc.occupied[i] ? 1.0f : 0.0f;
  return f;
}

VoxelFeature carve_rgba(const ReferenceSet& refs, int S, int threads) {
  const CarveAccum acc = carve_accumulate(refs, S, threads);
  VoxelFeature f{S, 4, std::vector<float>(acc.occupied.size() * 4, 0.0f)};
  for (std::size_t i = 0; i < acc.occupied.size(); ++i)
    if (acc.occupied[i]) {
      for (int c = 0; c < 3; ++c) f.values[i * 4 + c] = static_cast<float>(acc.rgb[i * 3 + c]);
      f.values[i * 4 + 3] = 1.0f;
    }
  return f;
}

namespace {

VoxelFeature slice_channels(const VoxelFeature& src, int first, int count) {
  VoxelFeature out{src.size, count,
                   std::vector<float>(std::size_t(src.size) * src.size * src.size * count)};
  const std::size_t n_vox = std::size_t(src.size) * src.size * src.size;
  for (std::size_t i = 0; i < n_vox; ++i)
    for (int c = 0; c < count; ++c)
      out.values[i * count + c] = src.values[i * src.channels + first + c];
  return out;
}

}  // namespace

VoxelFeature rgba_color(const VoxelFeature& rgba) {
  if (rgba.channels != 4) throw ShapeMismatch("rgba_color: expected a 4-channel feature");
  return slice_channels(rgba, 0, 3);
}

VoxelFeature rgba_occupancy(const VoxelFeature& rgba) {
  if (rgba.channels != 4) throw ShapeMismatch("rgba_occupancy: expected a 4-channel feature");
  return slice_channels(rgba, 3, 1);
}

}  // namespace dprost
