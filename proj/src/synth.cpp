#include "dprost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dprost/errors.hpp"
#include "dprost/image.hpp"
#include "dprost/parallel.hpp"
#include "dprost/rng.hpp"

namespace dprost {

namespace {

bool intersect_sphere(const Vec3& o, const Vec3& d, double* t_out) {
  const double a = d.squaredNorm();
  const double b = o.dot(d);
  const double c = o.squaredNorm() - 1.0;
  const double disc = b * b - a * c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  double t = (-b - s) / a;
  if (t < 0.0) t = (-b + s) / a;
  if (t < 0.0) return false;
  *t_out = t;
  return true;
}

bool intersect_aabb(const Vec3& h, const Vec3& o, const Vec3& d, double* t_out) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < -h[i] || o[i] > h[i]) return false;
    } else {
      double t1 = (-h[i] - o[i]) / d[i];
      double t2 = (h[i] - o[i]) / d[i];
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
    }
  }
  if (tmax < tmin || tmax < 0.0) return false;
  *t_out = tmin >= 0.0 ? tmin : tmax;
  return true;
}

std::string shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::cube: return "cube";
    case ShapeKind::box: return "box";
    case ShapeKind::two_tone_sphere: return "two_tone_sphere";
  }
  return "shape";
}

}  // namespace

Vec3 SyntheticShape::half_extents() const {
  switch (kind) {
    case ShapeKind::cube: {
      const double h = 1.0 / std::sqrt(3.0);
      return {h, h, h};
    }
    case ShapeKind::box: {
      Vec3 h{aspect, 1.0, 1.0};
      return h / h.norm();  // space diagonal 2h.norm() becomes the diameter 2
    }
    default:
      return {1.0, 1.0, 1.0};
  }
}

bool intersect_shape(const SyntheticShape& shape, const Vec3& origin, const Vec3& dir,
                     Vec3* hit_point) {
  double t = 0.0;
  bool hit = false;
  if (shape.kind == ShapeKind::cube || shape.kind == ShapeKind::box)
    hit = intersect_aabb(shape.half_extents(), origin, dir, &t);
  else
    hit = intersect_sphere(origin, dir, &t);
  if (hit && hit_point) *hit_point = origin + t * dir;
  return hit;
}

Eigen::Vector3f shape_color(const SyntheticShape& shape, const Vec3& p) {
  if (shape.kind == ShapeKind::two_tone_sphere || shape.texture == TextureKind::two_tone)
    return p.x() >= 0.0 ? shape.color : shape.color_b;
  if (shape.texture == TextureKind::axis_gradient) {
    Eigen::Vector3f c;
    for (int i = 0; i < 3; ++i)
      c[i] = static_cast<float>(std::clamp((p[i] + 1.0) / 2.0, 0.0, 1.0));
    return c;
  }
  if (shape.texture == TextureKind::octants) {
    const bool flip = (p.x() >= 0.0) != (p.y() >= 0.0);
    return flip == (p.z() >= 0.0) ? shape.color : shape.color_b;
  }
  return shape.color;
}

Observation render_observation(const SyntheticShape& shape, const Pose& pose,
                               const CameraIntrinsics& K, int image_width, int image_height) {
  Observation obs;
  obs.rgb = Image::rgb(image_width, image_height);
  obs.mask = Image::gray(image_width, image_height);
  const Mat3 Rt = pose.R.transpose();
  const Vec3 origin_obj = -(Rt * pose.t);
  parallel_for(image_height, [&](std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t m = row_begin; m < row_end; ++m) {
      for (int l = 0; l < image_width; ++l) {
        const Vec3 dir_obj = Rt * ray_direction(K, static_cast<double>(l), static_cast<double>(m));
        Vec3 hit;
        if (!intersect_shape(shape, origin_obj, dir_obj, &hit)) continue;
        const Eigen::Vector3f c = shape_color(shape, hit);
        for (int ch = 0; ch < 3; ++ch) {
          const float v = std::clamp(c[ch], 0.0f, 1.0f);
          obs.rgb.at(l, static_cast<int>(m), ch) =
              static_cast<unsigned char>(std::lround(255.0f * v));
        }
        obs.mask.at(l, static_cast<int>(m)) = 255;
      }
    }
  });
  obs.box = mask_bbox(obs.mask);
  obs.K = K;
  obs.pose = pose;
  obs.object_id = shape_name(shape.kind);
  obs.d_real = 2.0;
  return obs;
}

SceneManifest synth_scene(const SyntheticShape& shape, int n_views, const CameraIntrinsics& K,
                          int image_size, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
  if (n_views < 1) throw Error("synth_scene: need at least one view");
  std::filesystem::create_directories(out_dir);
  Rng rng(seed);

  SceneManifest m;
  m.convention = "neg_z_forward";
  m.base_dir = out_dir;
  m.objects.push_back({shape_name(shape.kind), 2.0});

  for (int i = 0; i < n_views; ++i) {
    Pose pose;
    pose.R = rng.rotation();
    const double distance = rng.uniform(3.0, 8.0);
    // Small lateral component, renormalized so the camera distance is exact.
    Vec3 dir{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), -1.0};
    pose.t = distance * dir.normalized();

    const Observation obs = render_observation(shape, pose, K, image_size, image_size);
    char image_name[32], mask_name[32];
    std::snprintf(image_name, sizeof(image_name), "frame_%03d.png", i);
    std::snprintf(mask_name, sizeof(mask_name), "mask_%03d.png", i);
    save_image(obs.rgb, out_dir / image_name);
    save_image(obs.mask, out_dir / mask_name);

    ManifestFrame fr;
    fr.id = i;
    fr.object_id = m.objects.front().id;
    fr.image_path = image_name;
    fr.mask_path = mask_name;
    fr.box = obs.box;
    fr.K = K;
    fr.R_raw = pose.R;
    fr.t_raw = pose.t;
    m.frames.push_back(std::move(fr));
  }

  save_manifest(m, out_dir / "manifest.json");
  return m;
}

std::vector<Vec3> sample_surface(const SyntheticShape& shape, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  if (shape.kind == ShapeKind::sphere || shape.kind == ShapeKind::two_tone_sphere) {
    for (int i = 0; i < n; ++i) out.push_back(rng.unit_vector());
    return out;
  }
  const Vec3 h = shape.half_extents();
  // Face order: -x, +x, -y, +y, -z, +z; pick proportionally to face area.
  const double areas[3] = {4.0 * h.y() * h.z(), 4.0 * h.x() * h.z(), 4.0 * h.x() * h.y()};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  for (int i = 0; i < n; ++i) {
    double pick = rng.uniform(0.0, total);
    int face = 5;
    for (int f = 0; f < 6; ++f) {
      const double a = areas[f / 2];
      if (pick < a) {
        face = f;
        break;
      }
      pick -= a;
    }
    const int axis = face / 2;
    const double side = (face % 2 == 0) ? -h[axis] : h[axis];
    Vec3 p;
    p[axis] = side;
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    p[u] = rng.uniform(-h[u], h[u]);
    p[v] = rng.uniform(-h[v], h[v]);
    out.push_back(p);
  }
  return out;
}

}  // namespace dprost
