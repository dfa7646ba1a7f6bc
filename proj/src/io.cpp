#include "dprost/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dprost/errors.hpp"
#include "dprost/image.hpp"

namespace dprost {

namespace {

using nlohmann::json;

json parse_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(std::string(what) + ": cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number for the diagnostic.
    std::size_t line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i < upto; ++i) line += text[i] == '\n';
    throw ParseError(std::string(what) + ": " + path.string() + " line " +
                     std::to_string(line) + ": " + e.what());
  }
}

const json& require_field(const json& j, const char* key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(context + ": missing field '" + key + "'");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& context) {
  const json& v = require_field(j, key, context);
  if (!v.is_number()) throw ParseError(context + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& context) {
  const json& v = require_field(j, key, context);
  if (!v.is_string()) throw ParseError(context + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

Mat3 mat3_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != 9)
    throw ParseError(context + ": 'R' must be an array of 9 numbers (row-major)");
  Mat3 R;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R(r, c) = arr[3 * r + c].get<double>();
  return R;
}

Vec3 vec3_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != 3)
    throw ParseError(context + ": 't' must be an array of 3 numbers");
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

json mat3_to_json(const Mat3& R) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(R(r, c));
  return a;
}

json vec3_to_json(const Vec3& t) { return json::array({t.x(), t.y(), t.z()}); }

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile(what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32_le(std::ostream& out, const float* data, std::size_t n) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &data[i], 4);
      write_u32_le(out, bits);
    }
  }
}

void read_f32_le(std::istream& in, float* data, std::size_t n, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 4)))
      throw TruncatedFile(what);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = read_u32_le(in, what);
      std::memcpy(&data[i], &bits, 4);
    }
  }
}

constexpr char kFeatureMagic[4] = {'D', 'P', 'V', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

Pose pose_from_json(const json& j, const std::string& context) {
  Pose p;
  p.R = mat3_from_json(require_field(j, "R", context), context);
  p.t = vec3_from_json(require_field(j, "t", context), context);
  return p;
}

json pose_to_json(const Pose& p) { return json{{"R", mat3_to_json(p.R)}, {"t", vec3_to_json(p.t)}}; }

}  // namespace

Mat3 convention_basis_change(const std::string& convention) {
  if (convention == "neg_z_forward") return Mat3::Identity();
  if (convention == "pos_z_forward") {
    Mat3 D = Mat3::Identity();
    D(2, 2) = -1.0;
    return D;
  }
  throw ConventionUnknown("unknown camera convention '" + convention + "'");
}

double SceneManifest::d_real_for(const std::string& object_id) const {
  for (const ManifestObject& o : objects)
    if (o.id == object_id) return o.d_real;
  throw ParseError("manifest references unknown object '" + object_id + "'");
}

SceneManifest load_manifest(const std::filesystem::path& path) {
  const json j = parse_json_file(path, "manifest");
  SceneManifest m;
  m.base_dir = path.parent_path();
  m.convention = require_string(j, "convention", "manifest");
  convention_basis_change(m.convention);  // validate the tag early

  const json& objs = require_field(j, "objects", "manifest");
  if (!objs.is_array() || objs.empty())
    throw ParseError("manifest: 'objects' must be a non-empty array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string ctx = "manifest object " + std::to_string(i);
    ManifestObject o;
    o.id = require_string(objs[i], "id", ctx);
    o.d_real = require_number(objs[i], "d_real", ctx);
    if (!(o.d_real > 0.0)) throw ParseError(ctx + ": 'd_real' must be positive");
    m.objects.push_back(std::move(o));
  }

  const json& frames = require_field(j, "frames", "manifest");
  if (!frames.is_array()) throw ParseError("manifest: 'frames' must be an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string ctx = "manifest frame " + std::to_string(i);
    const json& f = frames[i];
    ManifestFrame fr;
    fr.id = static_cast<int>(require_number(f, "id", ctx));
    fr.object_id = require_string(f, "object", ctx);
    m.d_real_for(fr.object_id);  // must reference a declared object
    fr.image_path = require_string(f, "image", ctx);
    fr.mask_path = require_string(f, "mask", ctx);

    const json& box = require_field(f, "box", ctx);
    if (!box.is_array() || box.size() != 4)
      throw ParseError(ctx + ": 'box' must be [x, y, w, h]");
    fr.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
              box[3].get<double>()};
    if (!(fr.box.w > 0.0) || !(fr.box.h > 0.0))
      throw ParseError(ctx + ": 'box' must have positive width and height");

    const json& K = require_field(f, "intrinsics", ctx);
    fr.K = {require_number(K, "fx", ctx + " intrinsics"),
            require_number(K, "fy", ctx + " intrinsics"),
            require_number(K, "px", ctx + " intrinsics"),
            require_number(K, "py", ctx + " intrinsics")};
    if (!(fr.K.fx > 0.0) || !(fr.K.fy > 0.0))
      throw ParseError(ctx + ": intrinsics must have positive focal lengths");

    const json& pose = require_field(f, "pose", ctx);
    fr.R_raw = mat3_from_json(require_field(pose, "R", ctx + " pose"), ctx + " pose");
    fr.t_raw = vec3_from_json(require_field(pose, "t", ctx + " pose"), ctx + " pose");

    for (const std::string* rel : {&fr.image_path, &fr.mask_path}) {
      const std::filesystem::path full = m.base_dir / *rel;
      if (!std::filesystem::exists(full))
        throw ParseError(ctx + ": referenced file does not exist: " + full.string());
    }
    m.frames.push_back(std::move(fr));
  }

  // Converted poses must satisfy the internal-pose invariants.
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const Pose p = frame_pose(m, m.frames[i]);
    if (!is_rotation(p.R))
      throw ParseError("manifest frame " + std::to_string(i) + ": 'R' is not a rotation matrix");
    if (!(p.t.z() < 0.0))
      throw ParseError("manifest frame " + std::to_string(i) +
                       ": converted pose must have the object in front of the camera (t_z < 0)");
  }
  return m;
}

void save_manifest(const SceneManifest& manifest, const std::filesystem::path& path) {
  json j;
  j["convention"] = manifest.convention;
  j["objects"] = json::array();
  for (const ManifestObject& o : manifest.objects)
    j["objects"].push_back({{"id", o.id}, {"d_real", o.d_real}});
  j["frames"] = json::array();
  for (const ManifestFrame& f : manifest.frames) {
    j["frames"].push_back(
        {{"id", f.id},
         {"object", f.object_id},
         {"image", f.image_path},
         {"mask", f.mask_path},
         {"box", json::array({f.box.x, f.box.y, f.box.w, f.box.h})},
         {"intrinsics", {{"fx", f.K.fx}, {"fy", f.K.fy}, {"px", f.K.px}, {"py", f.K.py}}},
         {"pose", {{"R", mat3_to_json(f.R_raw)}, {"t", vec3_to_json(f.t_raw)}}}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

Pose frame_pose(const SceneManifest& manifest, const ManifestFrame& frame) {
  const Mat3 D = convention_basis_change(manifest.convention);
  Pose p = convert_convention({frame.R_raw, frame.t_raw}, D);
  p.t /= manifest.d_real_for(frame.object_id) / 2.0;  // object diameter becomes 2
  return p;
}

Observation load_observation(const SceneManifest& manifest, int frame_index) {
  if (frame_index < 0 || frame_index >= static_cast<int>(manifest.frames.size()))
    throw Error("frame index out of range: " + std::to_string(frame_index));
  const ManifestFrame& f = manifest.frames[static_cast<std::size_t>(frame_index)];
  Observation obs;
  obs.rgb = load_image(manifest.base_dir / f.image_path);
  if (obs.rgb.channels != 3) throw FormatError("observation image must be RGB");
  obs.mask = load_image(manifest.base_dir / f.mask_path);
  if (obs.mask.channels != 1) throw FormatError("observation mask must be single-channel");
  if (obs.mask.width != obs.rgb.width || obs.mask.height != obs.rgb.height)
    throw ShapeMismatch("observation mask size differs from image size");
  obs.box = f.box;
  obs.K = f.K;
  obs.pose = frame_pose(manifest, f);
  obs.object_id = f.object_id;
  obs.d_real = manifest.d_real_for(f.object_id);
  return obs;
}

std::vector<Observation> load_observations(const SceneManifest& manifest) {
  std::vector<Observation> out;
  out.reserve(manifest.frames.size());
  for (int i = 0; i < static_cast<int>(manifest.frames.size()); ++i)
    out.push_back(load_observation(manifest, i));
  return out;
}

void save_feature(const VoxelFeature& feature, const std::filesystem::path& path,
                  const FeatureInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  out.write(kFeatureMagic, 4);
  write_u32_le(out, kFeatureVersion);
  write_u32_le(out, static_cast<std::uint32_t>(feature.size));
  write_u32_le(out, static_cast<std::uint32_t>(feature.channels));
  write_f32_le(out, feature.values.data(), feature.values.size());
  if (!out) throw Error("short write on feature file " + path.string());

  json side;
  side["object_id"] = info.object_id;
  side["d_real"] = info.d_real;
  side["reference_frames"] = info.reference_frames;
  if (!info.manifest_path.empty()) side["manifest"] = info.manifest_path;
  std::ofstream sout(path.string() + ".json", std::ios::binary);
  if (!sout) throw Error("cannot write feature sidecar for " + path.string());
  sout << side.dump(2) << '\n';
}

VoxelFeature load_feature(const std::filesystem::path& path, FeatureInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw TruncatedFile("feature file shorter than its magic");
  if (std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw FormatError("feature file has bad magic");
  const std::uint32_t version = read_u32_le(in, "feature header");
  if (version != kFeatureVersion)
    throw FormatError("unsupported feature file version " + std::to_string(version));
  const std::uint32_t size = read_u32_le(in, "feature header");
  const std::uint32_t channels = read_u32_le(in, "feature header");
  if (size == 0 || channels == 0 || size > 4096 || channels > 64)
    throw FormatError("implausible feature dimensions");
  VoxelFeature f;
  f.size = static_cast<int>(size);
  f.channels = static_cast<int>(channels);
  f.values.assign(std::size_t(size) * size * size * channels, 0.0f);
  read_f32_le(in, f.values.data(), f.values.size(), "feature payload");

  if (info) {
    *info = FeatureInfo{};
    const std::filesystem::path side = path.string() + ".json";
    if (std::filesystem::exists(side)) {
      const json j = parse_json_file(side, "feature sidecar");
      info->object_id = j.value("object_id", std::string{});
      info->d_real = j.value("d_real", 2.0);
      info->reference_frames = j.value("reference_frames", std::vector<int>{});
      info->manifest_path = j.value("manifest", std::string{});
    }
  }
  return f;
}

void save_pose_json(const Pose& pose, const std::filesystem::path& path) {
  json j = pose_to_json(pose);
  j["convention"] = "neg_z_forward";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write pose file " + path.string());
  out << j.dump(2) << '\n';
}

Pose load_pose_json(const std::filesystem::path& path) {
  const json j = parse_json_file(path, "pose");
  const Pose raw = pose_from_json(j, "pose");
  const std::string conv = j.value("convention", "neg_z_forward");
  const Pose p = convert_convention(raw, convention_basis_change(conv));
  if (!is_rotation(p.R)) throw ParseError("pose: 'R' is not a rotation matrix");
  return p;
}

void save_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path) {
  json j = json::array();
  for (const Prediction& p : preds) {
    json e = {{"frame", p.frame}, {"pose", pose_to_json(p.pose)}};
    e["pose"]["convention"] = "neg_z_forward";
    j.push_back(std::move(e));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write predictions file " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  const json j = parse_json_file(path, "predictions");
  if (!j.is_array()) throw ParseError("predictions: top level must be an array");
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "predictions entry " + std::to_string(i);
    Prediction p;
    p.frame = static_cast<int>(require_number(j[i], "frame", ctx));
    const json& pj = require_field(j[i], "pose", ctx);
    const Pose raw = pose_from_json(pj, ctx);
    const std::string conv = pj.value("convention", "neg_z_forward");
    p.pose = convert_convention(raw, convention_basis_change(conv));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vec3> occupied_voxel_centers(const VoxelFeature& feature) {
  std::vector<Vec3> out;
  const int S = feature.size;
  for (int iz = 0; iz < S; ++iz)
    for (int iy = 0; iy < S; ++iy)
      for (int ix = 0; ix < S; ++ix) {
        bool occupied = false;
        for (int c = 0; c < feature.channels && !occupied; ++c)
          occupied = feature.at(ix, iy, iz, c) != 0.0f;
        if (occupied)
          out.push_back({VoxelFeature::center_coord(ix, S), VoxelFeature::center_coord(iy, S),
                         VoxelFeature::center_coord(iz, S)});
      }
  return out;
}

}  // namespace dprost
