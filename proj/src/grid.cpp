#include "dprost/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace dprost {

namespace {

void check_resolution(int width, int height, int n_z) {
  if (width < 1 || height < 1) throw Error("ray grid: image size must be positive");
  if (n_z < 2) throw Error("ray grid: n_z must be at least 2");
}

// Fills one ray: unit direction u sampled at s_n = 2n/n_z - 1.
void fill_ray(RayGrid& g, int m, int l, const Vec3& u) {
  for (int n = 0; n < g.n_z; ++n) {
    const double s = 2.0 * n / g.n_z - 1.0;
    g.set_point(m, l, n, u * s);
  }
}

}  // namespace

RayGrid form_grid(const CameraIntrinsics& K, int width, int height, int n_z) {
  check_resolution(width, height, n_z);
  RayGrid g{height, width, n_z, GridStage::formed};
  g.pts.resize(g.point_count() * 3);
  for (int m = 0; m < height; ++m)
    for (int l = 0; l < width; ++l) fill_ray(g, m, l, ray_direction(K, l, m));
  return g;
}

BoundingBox square_box(const BoundingBox& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw DegenerateBox("square_box: empty box");
  const double side = std::max(box.w, box.h);
  return {box.cx() - 0.5 * side, box.cy() - 0.5 * side, side, side};
}

RayGrid crop_grid(const CameraIntrinsics& K, const BoundingBox& box, int out_res, int n_z) {
  check_resolution(out_res, out_res, n_z);
  const BoundingBox sq = square_box(box);
  RayGrid g{out_res, out_res, n_z, GridStage::cropped};
  g.pts.resize(g.point_count() * 3);
  for (int i = 0; i < out_res; ++i) {
    const double m = sq.y + (i + 0.5) * sq.h / out_res;
    for (int j = 0; j < out_res; ++j) {
      const double l = sq.x + (j + 0.5) * sq.w / out_res;
      fill_ray(g, i, j, ray_direction(K, l, m));
    }
  }
  return g;
}

RayGrid push_grid(const RayGrid& cropped, double distance) {
  if (cropped.stage != GridStage::cropped && cropped.stage != GridStage::formed)
    throw StageMismatch("push_grid: expected a cropped (or formed) grid");
  if (!(distance > 1.0)) throw DistanceTooSmall("push_grid: distance must exceed 1");
  RayGrid g = cropped;
  g.stage = GridStage::pushed;
  for (int m = 0; m < g.height; ++m) {
    for (int l = 0; l < g.width; ++l) {
      // Sample 0 sits at s = -1 exactly, so it recovers the ray direction.
      const Vec3 u = (-cropped.point(m, l, 0)).normalized();
      for (int n = 0; n < g.n_z; ++n) {
        const Vec3 p = cropped.point(m, l, n);
        if (p.x() == 0.0 && p.y() == 0.0 && p.z() == 0.0) {
          g.set_point(m, l, n, distance * u);
        } else {
          const double sign_z = p.z() > 0.0 ? 1.0 : -1.0;
          g.set_point(m, l, n, p - distance * sign_z * (p / p.norm()));
        }
      }
    }
  }
  return g;
}

RayGrid transform_grid(const RayGrid& pushed, const Pose& pose) {
  if (pushed.stage != GridStage::pushed)
    throw StageMismatch("transform_grid: expected a pushed grid");
  RayGrid g = pushed;
  g.stage = GridStage::object;
  const Mat3 Rt = pose.R.transpose();
  const std::size_t n = g.point_count();
  for (std::size_t i = 0; i < n; ++i) {
    double* p = &g.pts[i * 3];
    const Vec3 v = Rt * (Vec3(p[0], p[1], p[2]) - pose.t);
    p[0] = v.x();
    p[1] = v.y();
    p[2] = v.z();
  }
  return g;
}

RayGrid build_object_grid(const CameraIntrinsics& K, const BoundingBox& box, const Pose& pose,
                          int out_res, int n_z) {
  return build_object_grid(crop_grid(K, box, out_res, n_z), pose);
}

RayGrid build_object_grid(const RayGrid& cropped, const Pose& pose) {
  return transform_grid(push_grid(cropped, pose.t.norm()), pose);
}

namespace {

constexpr char kGridMagic[4] = {'D', 'P', 'R', 'G'};
constexpr std::uint32_t kGridVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile("grid file: short header");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

}  // namespace

void save_grid(const RayGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_grid: cannot open " + path.string());
  os.write(kGridMagic, 4);
  write_u32(os, kGridVersion);
  write_u32(os, static_cast<std::uint32_t>(grid.height));
  write_u32(os, static_cast<std::uint32_t>(grid.width));
  write_u32(os, static_cast<std::uint32_t>(grid.n_z));
  write_u32(os, static_cast<std::uint32_t>(grid.stage));
  write_u32(os, 0);
  write_u32(os, 0);
  std::vector<float> buf(grid.pts.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(grid.pts[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw Error("save_grid: write failed for " + path.string());
}

RayGrid load_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_grid: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw TruncatedFile("grid file: missing magic");
  if (std::memcmp(magic, kGridMagic, 4) != 0) throw FormatError("grid file: bad magic");
  if (read_u32(is) != kGridVersion) throw FormatError("grid file: unsupported version");
  RayGrid g;
  g.height = static_cast<int>(read_u32(is));
  g.width = static_cast<int>(read_u32(is));
  g.n_z = static_cast<int>(read_u32(is));
  const std::uint32_t stage = read_u32(is);
  if (stage > 3) throw FormatError("grid file: bad stage code");
  g.stage = static_cast<GridStage>(stage);
  read_u32(is);
  read_u32(is);
  if (g.height < 1 || g.width < 1 || g.n_z < 2) throw FormatError("grid file: bad dimensions");
  std::vector<float> buf(g.point_count() * 3);
  if (!is.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float))))
    throw TruncatedFile("grid file: short payload");
  g.pts.assign(buf.begin(), buf.end());
  return g;
}

}  // namespace dprost
