#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dprost/pose.hpp"

namespace dprost {

enum class GridStage : std::uint32_t { formed = 0, cropped = 1, pushed = 2, object = 3 };

// A height x width bundle of camera rays, each sampled at n_z points. Points
// are stored xyz-interleaved with index ((m * width + l) * n_z + n) * 3.
struct RayGrid {
  int height = 0, width = 0, n_z = 0;
  GridStage stage = GridStage::formed;
  std::vector<double> pts;

  std::size_t ray_count() const { return std::size_t(height) * width; }
  std::size_t point_count() const { return ray_count() * n_z; }

  Vec3 point(int m, int l, int n) const {
    const double* p = &pts[(std::size_t(m) * width + l) * n_z * 3 + std::size_t(n) * 3];
    return {p[0], p[1], p[2]};
  }
  void set_point(int m, int l, int n, const Vec3& v) {
    double* p = &pts[(std::size_t(m) * width + l) * n_z * 3 + std::size_t(n) * 3];
    p[0] = v.x();
    p[1] = v.y();
    p[2] = v.z();
  }
};

// Image-plane ray bundle: ray (l, m) has unit direction toward pixel (l, m)
// and samples at signed distances s_n = 2n/n_z - 1, so every point lies in the
// closed unit ball.
RayGrid form_grid(const CameraIntrinsics& K, int width, int height, int n_z);

// Symmetric expansion of the shorter side to produce the square crop region.
BoundingBox square_box(const BoundingBox& box);

// Rays through the square box on an out_res x out_res lattice, evaluated
// analytically at the bin-center pixel coordinates (matches bilinear
// interpolation of the formed grid for interior boxes).
RayGrid crop_grid(const CameraIntrinsics& K, const BoundingBox& box, int out_res, int n_z);

// Translates every sample along its ray so the bundle is centered at camera
// distance `distance` (> 1): g' = g - distance * (g/|g|) * sign(g_z); the s=0
// sample maps to distance * u with u the ray direction.
RayGrid push_grid(const RayGrid& cropped, double distance);

// Maps the pushed bundle into object space via the inverse pose: R^T (g - t).
RayGrid transform_grid(const RayGrid& pushed, const Pose& pose);

// crop + push(|t|) + transform in one call.
RayGrid build_object_grid(const CameraIntrinsics& K, const BoundingBox& box, const Pose& pose,
                          int out_res, int n_z);
// Same, reusing a precomputed cropped grid.
RayGrid build_object_grid(const RayGrid& cropped, const Pose& pose);

// Debug dump: 32-byte header (magic "DPRG", u32 version, H, W, n_z, stage,
// two reserved words), then H*W*n_z*3 little-endian f32 values.
void save_grid(const RayGrid& grid, const std::filesystem::path& path);
RayGrid load_grid(const std::filesystem::path& path);

}  // namespace dprost
