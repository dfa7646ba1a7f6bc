#pragma once

#include <filesystem>

#include "dprost/io.hpp"

namespace dprost {

enum class ShapeKind { sphere, cube, box, two_tone_sphere };
enum class TextureKind { uniform, axis_gradient, two_tone, octants };

// Analytic shapes normalized to the unit ball (diameter 2): sphere of radius
// 1, cube of half-side 1/sqrt(3), box with half-extents (aspect,1,1) scaled so
// the space diagonal is 2. Textures are view independent: a uniform color, the
// axis gradient (p+1)/2, a two-tone split at object-space x = 0, or two-tone
// octant parity (sign(x)*sign(y)*sign(z)), which breaks every small-rotation
// ambiguity.
struct SyntheticShape {
  ShapeKind kind = ShapeKind::sphere;
  TextureKind texture = TextureKind::uniform;
  double aspect = 3.0;                        // box only
  Eigen::Vector3f color{0.8f, 0.3f, 0.2f};    // uniform / two-tone first half
  Eigen::Vector3f color_b{0.2f, 0.4f, 0.9f};  // two-tone second half

  Vec3 half_extents() const;  // cube/box
};

// Exact ray-traced view: per pixel the camera ray either misses (black, mask
// 0) or hits and takes the surface texture color, no shading or anti-aliasing.
// The box is the tight bounds of the mask.
Observation render_observation(const SyntheticShape& shape, const Pose& pose,
                               const CameraIntrinsics& K, int image_width, int image_height);

// First intersection of the object-space ray with the shape; returns false on
// a miss.
bool intersect_shape(const SyntheticShape& shape, const Vec3& origin, const Vec3& dir,
                     Vec3* hit_point);

Eigen::Vector3f shape_color(const SyntheticShape& shape, const Vec3& p);

// Seeded random views: uniform rotations, camera distance in [3, 8] with a
// small lateral offset. Writes frame_XXX.png / mask_XXX.png plus
// manifest.json into out_dir and returns the manifest.
SceneManifest synth_scene(const SyntheticShape& shape, int n_views, const CameraIntrinsics& K,
                          int image_size, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

// Deterministic surface samples (area-uniform per face for boxes).
std::vector<Vec3> sample_surface(const SyntheticShape& shape, int n, std::uint64_t seed);

}  // namespace dprost
