#include "dprost/project.hpp"

#include <cmath>

#include "dprost/parallel.hpp"

namespace dprost {

namespace {

constexpr int kMaxChannels = 8;

// Continuous lattice position of a point p: voxel centers sit at
// 2(i + 0.5)/S - 1, so the lattice coordinate is (p + 1) S / 2 - 0.5.
// `inside` is false when every trilinear corner would fall outside [0, S-1].
struct LatticePoint {
  double qx, qy, qz;
  int x0, y0, z0;
  bool inside;
};

inline LatticePoint lattice_point(int S, const Vec3& p) {
  LatticePoint lp;
  lp.qx = (p.x() + 1.0) * S * 0.5 - 0.5;
  lp.qy = (p.y() + 1.0) * S * 0.5 - 0.5;
  lp.qz = (p.z() + 1.0) * S * 0.5 - 0.5;
  lp.inside = !(lp.qx <= -1.0 || lp.qy <= -1.0 || lp.qz <= -1.0 || lp.qx >= S || lp.qy >= S ||
                lp.qz >= S);
  if (lp.inside) {
    lp.x0 = static_cast<int>(std::floor(lp.qx));
    lp.y0 = static_cast<int>(std::floor(lp.qy));
    lp.z0 = static_cast<int>(std::floor(lp.qz));
  } else {
    lp.x0 = lp.y0 = lp.z0 = 0;
  }
  return lp;
}

// Corner accumulation for a precomputed in-bounds lattice position; out must
// already be zeroed. Corners outside [0, S-1] contribute zero.
inline void trilinear_at(const VoxelFeature& f, const LatticePoint& lp, double* out) {
  const int S = f.size;
  const int C = f.channels;
  const double dx = lp.qx - lp.x0, dy = lp.qy - lp.y0, dz = lp.qz - lp.z0;
  for (int k = 0; k < 8; ++k) {
    const int xi = lp.x0 + (k & 1), yi = lp.y0 + ((k >> 1) & 1), zi = lp.z0 + (k >> 2);
    if (xi < 0 || xi >= S || yi < 0 || yi >= S || zi < 0 || zi >= S) continue;
    const double w = (k & 1 ? dx : 1.0 - dx) * ((k >> 1) & 1 ? dy : 1.0 - dy) *
                     (k >> 2 ? dz : 1.0 - dz);
    if (w == 0.0) continue;
    const float* v = &f.values[((std::size_t(zi) * S + yi) * S + xi) * C];
    for (int c = 0; c < C; ++c) out[c] += w * v[c];
  }
}

// Trilinear interpolation with zero padding outside the lattice.
inline void trilinear(const VoxelFeature& f, const Vec3& p, double* out) {
  for (int c = 0; c < f.channels; ++c) out[c] = 0.0;
  const LatticePoint lp = lattice_point(f.size, p);
  if (!lp.inside) return;
  trilinear_at(f, lp, out);
}

}  // namespace

SampledFeature sample_feature(const VoxelFeature& feature, const RayGrid& grid, int threads) {
  if (grid.stage != GridStage::object)
    throw StageMismatch("sample_feature: expected an object-stage grid");
  if (feature.size < 1 || feature.channels < 1 || feature.channels > kMaxChannels)
    throw ShapeMismatch("sample_feature: unsupported feature shape");
  SampledFeature s;
  s.height = grid.height;
  s.width = grid.width;
  s.n_z = grid.n_z;
  s.channels = feature.channels;
  s.values.resize(grid.point_count() * feature.channels);
  const int C = feature.channels;
  parallel_for(
      static_cast<std::int64_t>(grid.point_count()),
      [&](std::int64_t b, std::int64_t e) {
        double acc[kMaxChannels];
        for (std::int64_t i = b; i < e; ++i) {
          const double* p = &grid.pts[std::size_t(i) * 3];
          trilinear(feature, Vec3(p[0], p[1], p[2]), acc);
          for (int c = 0; c < C; ++c)
            s.values[std::size_t(i) * C + c] = static_cast<float>(acc[c]);
        }
      },
      threads);
  return s;
}

Appearance composite(const SampledFeature& sampled) {
  Appearance app;
  app.height = sampled.height;
  app.width = sampled.width;
  app.rgb.assign(std::size_t(app.height) * app.width * 3, 0.0f);
  app.valid.assign(std::size_t(app.height) * app.width, 0);
  const int C = sampled.channels;
  for (int m = 0; m < app.height; ++m)
    for (int l = 0; l < app.width; ++l) {
      const std::size_t px = std::size_t(m) * app.width + l;
      for (int n = 0; n < sampled.n_z; ++n) {
        const float* v = &sampled.values[(px * sampled.n_z + n) * C];
        double mag = 0.0;
        for (int c = 0; c < C; ++c) mag = std::max(mag, std::abs(double(v[c])));
        if (mag > kOccupancyTau) {
          if (C == 1) {
            for (int c = 0; c < 3; ++c) app.rgb[px * 3 + c] = v[0];
          } else {
            for (int c = 0; c < 3 && c < C; ++c) app.rgb[px * 3 + c] = v[c];
          }
          app.valid[px] = 1;
          break;
        }
      }
    }
  return app;
}

namespace {

// Fused render: per ray, walk near-to-far and stop at the first occupied
// sample. Identical output to composite(sample_feature(...)) because samples
// past the first hit never influence the result.
Appearance render_fused(const VoxelFeature& color, const VoxelFeature* occupancy,
                        const RayGrid& object_grid, int threads) {
  if (object_grid.stage != GridStage::object)
    throw StageMismatch("render: expected an object-stage grid");
  if (color.channels != 3) throw ShapeMismatch("render: color feature must have 3 channels");
  if (occupancy && (occupancy->channels != 1 || occupancy->size != color.size))
    throw ShapeMismatch("render: occupancy must be a matching 1-channel feature");
  Appearance app;
  app.height = object_grid.height;
  app.width = object_grid.width;
  app.rgb.assign(std::size_t(app.height) * app.width * 3, 0.0f);
  app.valid.assign(std::size_t(app.height) * app.width, 0);
  parallel_for(
      static_cast<std::int64_t>(object_grid.ray_count()),
      [&](std::int64_t b, std::int64_t e) {
        double rgb[kMaxChannels], alpha[kMaxChannels];
        for (std::int64_t ray = b; ray < e; ++ray) {
          const std::size_t base = std::size_t(ray) * object_grid.n_z * 3;
          for (int n = 0; n < object_grid.n_z; ++n) {
            const double* pp = &object_grid.pts[base + std::size_t(n) * 3];
            const Vec3 p(pp[0], pp[1], pp[2]);
            if (occupancy) {
              trilinear(*occupancy, p, alpha);
              if (alpha[0] > kSurfaceAlpha) {
                trilinear(color, p, rgb);
                for (int c = 0; c < 3; ++c)
                  app.rgb[std::size_t(ray) * 3 + c] =
                      static_cast<float>(rgb[c] / alpha[0]);
                app.valid[ray] = 1;
                break;
              }
            } else {
              trilinear(color, p, rgb);
              const double mag = std::max({std::abs(rgb[0]), std::abs(rgb[1]), std::abs(rgb[2])});
              if (mag > kOccupancyTau) {
                for (int c = 0; c < 3; ++c)
                  app.rgb[std::size_t(ray) * 3 + c] = static_cast<float>(rgb[c]);
                app.valid[ray] = 1;
                break;
              }
            }
          }
        }
      },
      threads);
  return app;
}

}  // namespace

Appearance render(const VoxelFeature& feature, const Pose& pose, const CameraIntrinsics& K,
                  const BoundingBox& box, int n_z, int out_res, int threads) {
  return render_fused(feature, nullptr, build_object_grid(K, box, pose, out_res, n_z), threads);
}

Appearance render(const VoxelFeature& feature, const VoxelFeature& occupancy, const Pose& pose,
                  const CameraIntrinsics& K, const BoundingBox& box, int n_z, int out_res,
                  int threads) {
  return render_fused(feature, &occupancy, build_object_grid(K, box, pose, out_res, n_z),
                      threads);
}

SamplingMask build_sampling_mask(const VoxelFeature& feature) {
  SamplingMask mask;
  mask.size = feature.size;
  const int S = feature.size;
  const std::size_t s1 = std::size_t(S) + 1;
  mask.cells.assign(s1 * s1 * s1, 0);
  const int C = feature.channels;
  for (int z = 0; z < S; ++z)
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const float* v = &feature.values[((std::size_t(z) * S + y) * S + x) * C];
        bool nonzero = false;
        for (int c = 0; c < C && !nonzero; ++c) nonzero = v[c] != 0.0f;
        if (!nonzero) continue;
        // This voxel is a corner of the 8 cells around it; mark them all.
        for (int k = 0; k < 8; ++k) {
          const std::size_t cz = std::size_t(z + 1 - (k >> 2));
          const std::size_t cy = std::size_t(y + 1 - ((k >> 1) & 1));
          const std::size_t cx = std::size_t(x + 1 - (k & 1));
          mask.cells[(cz * s1 + cy) * s1 + cx] = 1;
        }
      }
  return mask;
}

// Fused equivalent of render_fused(feature, occupancy,
// build_object_grid(cropped, pose)): the push and object-frame transforms are
// applied per sample in registers instead of materializing the intermediate
// grids, and the sampling mask skips interpolation in provably empty cells.
// Every retained arithmetic expression matches the staged pipeline, so the
// output is bit-identical to the staged path.
Appearance render_over_crop(const VoxelFeature& feature, const VoxelFeature* occupancy,
                            const RayGrid& cropped, const Pose& pose, int threads,
                            const SamplingMask* mask) {
  if (cropped.stage != GridStage::cropped)
    throw StageMismatch("render_over_crop: expected a cropped grid");
  if (feature.channels != 3)
    throw ShapeMismatch("render_over_crop: color feature must have 3 channels");
  if (occupancy && (occupancy->channels != 1 || occupancy->size != feature.size))
    throw ShapeMismatch("render_over_crop: occupancy must be a matching 1-channel feature");
  const VoxelFeature& gate = occupancy ? *occupancy : feature;
  if (mask && mask->size != gate.size)
    throw ShapeMismatch("render_over_crop: sampling mask does not match the gating volume");
  const double distance = pose.t.norm();
  const Mat3 Rt = pose.R.transpose();
  Appearance app;
  app.height = cropped.height;
  app.width = cropped.width;
  app.rgb.assign(std::size_t(app.height) * app.width * 3, 0.0f);
  app.valid.assign(std::size_t(app.height) * app.width, 0);
  parallel_for(
      static_cast<std::int64_t>(cropped.ray_count()),
      [&](std::int64_t b, std::int64_t e) {
        double rgb[kMaxChannels], alpha[kMaxChannels];
        for (std::int64_t ray = b; ray < e; ++ray) {
          const int m = static_cast<int>(ray / cropped.width);
          const int l = static_cast<int>(ray % cropped.width);
          // Sample 0 sits at s = -1 exactly, so it recovers the ray direction.
          const Vec3 u = (-cropped.point(m, l, 0)).normalized();
          for (int n = 0; n < cropped.n_z; ++n) {
            const Vec3 p = cropped.point(m, l, n);
            Vec3 pushed;
            if (p.x() == 0.0 && p.y() == 0.0 && p.z() == 0.0) {
              pushed = distance * u;
            } else {
              const double sign_z = p.z() > 0.0 ? 1.0 : -1.0;
              pushed = p - distance * sign_z * (p / p.norm());
            }
            const Vec3 obj = Rt * (pushed - pose.t);
            const LatticePoint lp = lattice_point(gate.size, obj);
            if (!lp.inside) continue;
            if (mask && !mask->maybe_nonzero(lp.x0, lp.y0, lp.z0)) continue;
            if (occupancy) {
              alpha[0] = 0.0;
              trilinear_at(*occupancy, lp, alpha);
              if (alpha[0] > kSurfaceAlpha) {
                for (int c = 0; c < 3; ++c) rgb[c] = 0.0;
                trilinear_at(feature, lp, rgb);
                for (int c = 0; c < 3; ++c)
                  app.rgb[std::size_t(ray) * 3 + c] = static_cast<float>(rgb[c] / alpha[0]);
                app.valid[ray] = 1;
                break;
              }
            } else {
              for (int c = 0; c < 3; ++c) rgb[c] = 0.0;
              trilinear_at(feature, lp, rgb);
              const double mag = std::max({std::abs(rgb[0]), std::abs(rgb[1]), std::abs(rgb[2])});
              if (mag > kOccupancyTau) {
                for (int c = 0; c < 3; ++c)
                  app.rgb[std::size_t(ray) * 3 + c] = static_cast<float>(rgb[c]);
                app.valid[ray] = 1;
                break;
              }
            }
          }
        }
      },
      threads);
  return app;
}

Image appearance_to_image(const Appearance& app) {
  Image img = Image::rgb(app.width, app.height);
  for (std::size_t i = 0; i < app.rgb.size(); ++i) {
    const double v = std::clamp(double(app.rgb[i]), 0.0, 1.0);
    img.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return img;
}

Image appearance_valid_mask(const Appearance& app) {
  Image img = Image::gray(app.width, app.height);
  for (std::size_t i = 0; i < app.valid.size(); ++i) img.data[i] = app.valid[i] ? 255 : 0;
  return img;
}

}  // namespace dprost
