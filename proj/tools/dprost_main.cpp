// dprost: carve-project-compare pose pipeline, command line front end.
//
// Subcommands: synth, carve, render, refine, losses, eval.
// Exit codes: 0 success, 1 usage error (help printed), 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dprost/carve.hpp"
#include "dprost/errors.hpp"
#include "dprost/grid.hpp"
#include "dprost/image.hpp"
#include "dprost/io.hpp"
#include "dprost/losses.hpp"
#include "dprost/metrics.hpp"
#include "dprost/project.hpp"
#include "dprost/refine.hpp"
#include "dprost/synth.hpp"

namespace {

using nlohmann::json;
using namespace dprost;

struct GlobalOpts {
  std::uint64_t seed = 0;
  int out_res = 128;
  int n_z = 64;
  int voxels = 128;
  int refs = 8;
  double lambda_gd = 1.0;
  int threads = 0;  // 0 = auto (DPROST_THREADS, then hardware)
  bool json_out = false;
};

json pose_to_json(const Pose& p) {
  json R = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R.push_back(p.R(r, c));
  return {{"R", std::move(R)},
          {"t", json::array({p.t.x(), p.t.y(), p.t.z()})},
          {"convention", "neg_z_forward"}};
}

int frame_index_by_id(const SceneManifest& m, int frame_id) {
  for (int i = 0; i < static_cast<int>(m.frames.size()); ++i)
    if (m.frames[i].id == frame_id) return i;
  throw Error("no frame with id " + std::to_string(frame_id) + " in the manifest");
}

Appearance observed_crop(const Observation& obs, int out_res) {
  Appearance a;
  a.height = a.width = out_res;
  a.rgb = crop_image_bilinear(obs.rgb, obs.box, out_res);
  a.valid = crop_mask_nearest(obs.mask, obs.box, out_res);
  return a;
}

// Splits a stored feature into the color volume sampled by the projector and
// the optional occupancy volume used for hit normalization.
struct LoadedFeature {
  VoxelFeature color;
  VoxelFeature occupancy;  // size 0 when absent
  FeatureInfo info;

  const VoxelFeature* occ_ptr() const { return occupancy.size > 0 ? &occupancy : nullptr; }
};

LoadedFeature load_feature_for_render(const std::filesystem::path& path) {
  LoadedFeature lf;
  VoxelFeature f = load_feature(path, &lf.info);
  if (f.channels == 4) {
    lf.color = rgba_color(f);
    lf.occupancy = rgba_occupancy(f);
  } else {
    lf.color = std::move(f);
  }
  return lf;
}

SyntheticShape shape_from_flags(const std::string& shape, const std::string& texture,
                                double aspect) {
  SyntheticShape s;
  if (shape == "sphere") s.kind = ShapeKind::sphere;
  else if (shape == "cube") s.kind = ShapeKind::cube;
  else if (shape == "box") s.kind = ShapeKind::box;
  else s.kind = ShapeKind::two_tone_sphere;
  if (texture == "uniform") s.texture = TextureKind::uniform;
  else if (texture == "gradient") s.texture = TextureKind::axis_gradient;
  else if (texture == "two_tone") s.texture = TextureKind::two_tone;
  else s.texture = TextureKind::octants;
  s.aspect = aspect;
  return s;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel-carved reference features, projective ray grids, and grid-driven "
               "6-DoF pose refinement."};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out-res", g.out_res, "Crop/render resolution P")->capture_default_str();
  app.add_option("--nz", g.n_z, "Samples per ray N_z")->capture_default_str();
  app.add_option("--voxels", g.voxels, "Voxel lattice resolution S")->capture_default_str();
  app.add_option("--refs", g.refs, "Reference views used for carving")->capture_default_str();
  app.add_option("--lambda-gd", g.lambda_gd, "Weight of the ray-distance term")
      ->capture_default_str();
  app.add_option("--threads", g.threads,
                 "Worker threads (0 = auto, DPROST_THREADS overrides)")
      ->capture_default_str();
  app.add_flag("--json", g.json_out, "Emit machine-readable JSON on stdout");

  // synth -----------------------------------------------------------------
  std::string sy_shape = "sphere", sy_texture = "uniform", sy_out;
  double sy_aspect = 3.0, sy_focal = 280.0;
  int sy_views = 8, sy_image_size = 256;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic posed scene");
  synth->fallthrough();
  synth->add_option("--shape", sy_shape, "Object shape")
      ->check(CLI::IsMember({"sphere", "cube", "box", "two_tone_sphere"}))
      ->capture_default_str();
  synth->add_option("--texture", sy_texture, "Surface texture")
      ->check(CLI::IsMember({"uniform", "gradient", "two_tone", "octants"}))
      ->capture_default_str();
  synth->add_option("--aspect", sy_aspect, "Box elongation")->capture_default_str();
  synth->add_option("--views", sy_views, "Number of views")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--image-size", sy_image_size, "Square image side in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--focal", sy_focal, "Focal length in pixels")->capture_default_str();
  synth->add_option("-o,--out", sy_out, "Output directory")->required();

  // carve -----------------------------------------------------------------
  std::string cv_manifest, cv_out, cv_object;
  CLI::App* carve_cmd = app.add_subcommand("carve", "Carve a voxel feature from posed views");
  carve_cmd->fallthrough();
  carve_cmd->add_option("--manifest", cv_manifest, "Scene manifest JSON")->required();
  carve_cmd->add_option("--object", cv_object, "Object id (default: first in manifest)");
  carve_cmd->add_option("-o,--out", cv_out, "Output .dpvf path")->required();

  // render ----------------------------------------------------------------
  std::string rd_feature, rd_manifest, rd_pose, rd_out, rd_mask_out, rd_grid_dump;
  int rd_frame = 0;
  bool rd_use_box = false;
  CLI::App* render_cmd = app.add_subcommand("render", "Render a carved feature at a pose");
  render_cmd->fallthrough();
  render_cmd->add_option("--feature", rd_feature, "Feature .dpvf file")->required();
  render_cmd->add_option("--manifest", rd_manifest,
                         "Scene manifest (default: the one recorded beside the feature)");
  render_cmd->add_option("--frame", rd_frame, "Frame id providing camera and pose")
      ->capture_default_str();
  render_cmd->add_option("--pose", rd_pose, "Pose JSON overriding the frame pose");
  render_cmd->add_option("-o,--out", rd_out, "Output PNG")->required();
  render_cmd->add_option("--mask-out", rd_mask_out, "Optional hit-mask PNG");
  render_cmd->add_flag("--use-box", rd_use_box,
                       "Render the detection-box crop at --out-res instead of the full image");
  render_cmd->add_option("--grid-dump", rd_grid_dump, "Optional object-grid dump (.dprg)");

  // losses ----------------------------------------------------------------
  std::string ls_manifest, ls_pose, ls_feature;
  int ls_frame = 0;
  CLI::App* losses_cmd = app.add_subcommand("losses", "Grid losses of a pose against a frame");
  losses_cmd->fallthrough();
  losses_cmd->add_option("--manifest", ls_manifest, "Scene manifest JSON")->required();
  losses_cmd->add_option("--frame", ls_frame, "Frame id with the reference pose")
      ->capture_default_str();
  losses_cmd->add_option("--pose", ls_pose, "Predicted pose JSON")->required();
  losses_cmd->add_option("--feature", ls_feature,
                         "Feature .dpvf enabling the point- and image-space baselines");

  // refine ----------------------------------------------------------------
  std::string rf_feature, rf_manifest, rf_init_pose, rf_out, rf_trace, rf_iter_dir;
  std::string rf_mode = "render_compare_im";
  int rf_frame = 0, rf_outer = 2, rf_inner = 100;
  double rf_step = 0.01;
  CLI::App* refine_cmd = app.add_subcommand("refine", "Refine a pose against an observation");
  refine_cmd->fallthrough();
  refine_cmd->add_option("--feature", rf_feature, "Feature .dpvf file")->required();
  refine_cmd->add_option("--manifest", rf_manifest, "Scene manifest JSON")->required();
  refine_cmd->add_option("--frame", rf_frame, "Frame id to refine against")
      ->capture_default_str();
  refine_cmd->add_option("--mode", rf_mode, "Objective")
      ->check(CLI::IsMember({"render_compare_im", "supervised_gm"}))
      ->capture_default_str();
  refine_cmd->add_option("--init-pose", rf_init_pose,
                         "Initial pose JSON (default: detection-box initialization)");
  refine_cmd->add_option("--outer", rf_outer, "Outer iterations")->capture_default_str();
  refine_cmd->add_option("--inner", rf_inner, "Descent steps per outer iteration")
      ->capture_default_str();
  refine_cmd->add_option("--step-size", rf_step, "Initial descent step size")
      ->capture_default_str();
  refine_cmd->add_option("-o,--out", rf_out, "Refined pose JSON path")->required();
  refine_cmd->add_option("--trace", rf_trace, "Optional refinement trace JSON");
  refine_cmd->add_option("--iter-renders", rf_iter_dir,
                         "Optional directory for per-iteration crop renders");

  // eval ------------------------------------------------------------------
  std::string ev_manifest, ev_preds, ev_feature, ev_csv, ev_out;
  double ev_auc_max = 0.2;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against a manifest");
  eval_cmd->fallthrough();
  eval_cmd->add_option("--manifest", ev_manifest, "Ground-truth manifest JSON")->required();
  eval_cmd->add_option("--predictions", ev_preds, "Predictions JSON")->required();
  eval_cmd->add_option("--feature", ev_feature, "Feature .dpvf providing the model points")
      ->required();
  eval_cmd->add_option("--auc-max", ev_auc_max, "AUC threshold ceiling (normalized units)")
      ->capture_default_str();
  eval_cmd->add_option("--csv", ev_csv, "Optional per-frame CSV");
  eval_cmd->add_option("-o,--out", ev_out, "Optional report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*synth) {
      const SyntheticShape shape = shape_from_flags(sy_shape, sy_texture, sy_aspect);
      const double c = (sy_image_size - 1) / 2.0;
      const CameraIntrinsics K{sy_focal, sy_focal, c, c};
      const SceneManifest m = synth_scene(shape, sy_views, K, sy_image_size, g.seed, sy_out);
      const std::string manifest_path = (m.base_dir / "manifest.json").string();
      if (g.json_out)
        std::cout << json{{"manifest", manifest_path}, {"frames", m.frames.size()}}.dump(2)
                  << '\n';
      else
        std::cout << "wrote " << m.frames.size() << " views to " << manifest_path << '\n';

    } else if (*carve_cmd) {
      const SceneManifest m = load_manifest(cv_manifest);
      const std::string object = cv_object.empty() ? m.objects.front().id : cv_object;
      std::vector<Observation> views;
      std::vector<int> frame_ids;
      for (int i = 0; i < static_cast<int>(m.frames.size()); ++i) {
        if (m.frames[i].object_id != object) continue;
        views.push_back(load_observation(m, i));
        frame_ids.push_back(m.frames[i].id);
      }
      if (views.empty()) throw Error("manifest has no frames for object '" + object + "'");
      const int n_refs = std::min<int>(g.refs, static_cast<int>(views.size()));
      const std::vector<int> picked = select_reference_indices(views, n_refs);
      ReferenceSet refs;
      std::vector<int> picked_ids;
      for (const int i : picked) {
        refs.observations.push_back(views[static_cast<std::size_t>(i)]);
        picked_ids.push_back(frame_ids[static_cast<std::size_t>(i)]);
      }
      const VoxelFeature f = carve_rgba(refs, g.voxels, g.threads);

      FeatureInfo info;
      info.object_id = object;
      info.d_real = m.d_real_for(object);
      info.reference_frames = picked_ids;
      info.manifest_path = std::filesystem::absolute(cv_manifest).string();
      save_feature(f, cv_out, info);

      std::size_t occupied = 0;
      for (int iz = 0; iz < f.size; ++iz)
        for (int iy = 0; iy < f.size; ++iy)
          for (int ix = 0; ix < f.size; ++ix) occupied += f.at(ix, iy, iz, 3) != 0.0f;
      if (g.json_out)
        std::cout << json{{"feature", cv_out},
                          {"size", f.size},
                          {"channels", f.channels},
                          {"occupied_voxels", occupied},
                          {"reference_frames", picked_ids}}
                         .dump(2)
                  << '\n';
      else
        std::cout << "carved " << occupied << " occupied voxels (S=" << f.size << ") from "
                  << n_refs << " views into " << cv_out << '\n';

    } else if (*render_cmd) {
      const LoadedFeature lf = load_feature_for_render(rd_feature);
      std::string manifest_path = rd_manifest.empty() ? lf.info.manifest_path : rd_manifest;
      if (manifest_path.empty())
        throw Error("no --manifest given and the feature records no source scene");
      const SceneManifest m = load_manifest(manifest_path);
      const Observation obs = load_observation(m, frame_index_by_id(m, rd_frame));
      const Pose pose = rd_pose.empty() ? obs.pose : load_pose_json(rd_pose);

      RayGrid base = rd_use_box
                         ? crop_grid(obs.K, obs.box, g.out_res, g.n_z)
                         : form_grid(obs.K, obs.rgb.width, obs.rgb.height, g.n_z);
      const Appearance app_out = render_over_crop(lf.color, lf.occ_ptr(), base, pose, g.threads);
      save_image(appearance_to_image(app_out), rd_out);
      if (!rd_mask_out.empty()) save_image(appearance_valid_mask(app_out), rd_mask_out);
      if (!rd_grid_dump.empty()) save_grid(build_object_grid(base, pose), rd_grid_dump);

      std::size_t hits = 0;
      for (const auto v : app_out.valid) hits += v != 0;
      if (g.json_out)
        std::cout << json{{"out", rd_out},
                          {"width", app_out.width},
                          {"height", app_out.height},
                          {"hit_pixels", hits}}
                         .dump(2)
                  << '\n';
      else
        std::cout << "rendered " << app_out.width << "x" << app_out.height << " (" << hits
                  << " hit pixels) to " << rd_out << '\n';

    } else if (*losses_cmd) {
      const SceneManifest m = load_manifest(ls_manifest);
      const Observation obs = load_observation(m, frame_index_by_id(m, ls_frame));
      const Pose pred = load_pose_json(ls_pose);
      const GridConfig cfg{g.out_res, g.n_z, g.lambda_gd, 1e-3};
      LossReport rep = total_loss(pred, obs.pose, obs.K, obs.box, cfg);
      if (!ls_feature.empty()) {
        const LoadedFeature lf = load_feature_for_render(ls_feature);
        const std::vector<Vec3> points =
            subsample_points(occupied_voxel_centers(lf.color), 4096);
        rep.pm = pm_loss(pred, obs.pose, points);
        const RayGrid cropped = crop_grid(obs.K, obs.box, g.out_res, g.n_z);
        rep.im = im_loss(render_over_crop(lf.color, lf.occ_ptr(), cropped, pred, g.threads),
                         observed_crop(obs, g.out_res));
      }
      json j{{"gm", rep.gm}, {"gd", rep.gd}, {"total", rep.total}, {"lambda_gd", rep.lambda_gd}};
      if (rep.pm) j["pm"] = *rep.pm;
      if (rep.im) j["im"] = *rep.im;
      if (g.json_out) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "gm " << rep.gm << "\ngd " << rep.gd << "\ntotal " << rep.total << '\n';
        if (rep.pm) std::cout << "pm " << *rep.pm << '\n';
        if (rep.im) std::cout << "im " << *rep.im << '\n';
      }

    } else if (*refine_cmd) {
      const SceneManifest m = load_manifest(rf_manifest);
      const Observation obs = load_observation(m, frame_index_by_id(m, rf_frame));
      const LoadedFeature lf = load_feature_for_render(rf_feature);

      RefinerConfig cfg;
      cfg.mode = rf_mode == "supervised_gm" ? RefineMode::supervised_gm
                                            : RefineMode::render_compare_im;
      cfg.outer_iters = rf_outer;
      cfg.inner_steps = rf_inner;
      cfg.step_size = rf_step;
      cfg.seed = g.seed;
      cfg.grid = GridConfig{g.out_res, g.n_z, g.lambda_gd, 1e-3};
      cfg.threads = g.threads;

      const Pose init =
          rf_init_pose.empty() ? initialize_from_box(obs.box, obs.K) : load_pose_json(rf_init_pose);
      RefineTarget target;
      if (cfg.mode == RefineMode::supervised_gm)
        target = obs.pose;
      else
        target = observed_crop(obs, g.out_res);

      const auto [refined, trace] =
          refine(init, target, lf.color, lf.occ_ptr(), obs.K, obs.box, cfg);
      save_pose_json(refined, rf_out);

      if (!rf_trace.empty()) {
        json outer = json::array();
        for (const OuterIterTrace& it : trace.outer)
          outer.push_back({{"pose", pose_to_json(it.pose)},
                           {"objective", it.objective},
                           {"steps", it.steps},
                           {"basis_reset", it.basis_reset},
                           {"loss_curve", it.loss_curve}});
        write_json_file(
            json{{"mode", rf_mode},
                 {"seed", trace.seed},
                 {"initial_objective", trace.initial_objective},
                 {"outer", std::move(outer)}},
            rf_trace);
      }
      if (!rf_iter_dir.empty()) {
        std::filesystem::create_directories(rf_iter_dir);
        const RayGrid cropped = crop_grid(obs.K, obs.box, g.out_res, g.n_z);
        Pose p = init;
        for (std::size_t i = 0; i <= trace.outer.size(); ++i) {
          if (i > 0) p = trace.outer[i - 1].pose;
          char name[32];
          std::snprintf(name, sizeof(name), "iter_%02zu.png", i);
          save_image(
              appearance_to_image(render_over_crop(lf.color, lf.occ_ptr(), cropped, p, g.threads)),
              std::filesystem::path(rf_iter_dir) / name);
        }
      }

      const double final_obj =
          trace.outer.empty() ? trace.initial_objective : trace.outer.back().objective;
      if (g.json_out)
        std::cout << json{{"pose", rf_out},
                          {"initial_objective", trace.initial_objective},
                          {"final_objective", final_obj},
                          {"outer_iters", trace.outer.size()}}
                         .dump(2)
                  << '\n';
      else
        std::cout << "objective " << trace.initial_objective << " -> " << final_obj
                  << ", pose written to " << rf_out << '\n';

    } else if (*eval_cmd) {
      const SceneManifest m = load_manifest(ev_manifest);
      const std::vector<Prediction> preds = load_predictions(ev_preds);
      if (preds.empty()) throw Error("predictions file is empty");
      FeatureInfo info;
      const VoxelFeature f = load_feature(ev_feature, &info);
      const std::vector<Vec3> points = subsample_points(occupied_voxel_centers(f), 4096);
      if (points.empty()) throw Error("feature has no occupied voxels to evaluate with");

      std::vector<FrameMetrics> frames;
      for (const Prediction& p : preds) {
        const int idx = frame_index_by_id(m, p.frame);
        const ManifestFrame& fr = m.frames[static_cast<std::size_t>(idx)];
        const Pose gt = frame_pose(m, fr);
        FrameMetrics fm;
        fm.frame = p.frame;
        fm.add = add_metric(p.pose, gt, points);
        fm.add_s = add_s_metric(p.pose, gt, points, g.threads);
        fm.proj2d_px = proj2d(p.pose, gt, points, fr.K);
        const PoseErrors pe = pose_errors(p.pose, gt);
        fm.rotation_err = pe.rotation;
        fm.translation_err = pe.translation;
        fm.add_correct = fm.add < 0.1 * 2.0;
        frames.push_back(fm);
      }
      const double d_real = m.d_real_for(m.frames.front().object_id);
      const MetricReport rep = aggregate_metrics(frames, d_real, ev_auc_max);

      json jframes = json::array();
      for (const FrameMetrics& fm : frames)
        jframes.push_back({{"frame", fm.frame},
                           {"add", fm.add},
                           {"add_real", fm.add * d_real / 2.0},
                           {"add_s", fm.add_s},
                           {"proj2d_px", fm.proj2d_px},
                           {"rotation_err", fm.rotation_err},
                           {"translation_err",
                            json::array({fm.translation_err.x(), fm.translation_err.y(),
                                         fm.translation_err.z()})},
                           {"add_correct", fm.add_correct}});
      const json report{{"d_real", rep.d_real},
                        {"add_accuracy", rep.add_accuracy},
                        {"add_s_accuracy", rep.add_s_accuracy},
                        {"auc_add_s", rep.auc},
                        {"mean_proj2d", rep.mean_proj2d},
                        {"mean_rotation_err", rep.mean_rotation_err},
                        {"frames", std::move(jframes)}};

      if (!ev_csv.empty()) {
        std::ofstream csv(ev_csv, std::ios::binary);
        if (!csv) throw Error("cannot write " + ev_csv);
        csv << "frame,add,add_s,proj2d_px,rotation_err,tx_err,ty_err,tz_err,add_correct\n";
        for (const FrameMetrics& fm : frames)
          csv << fm.frame << ',' << fm.add << ',' << fm.add_s << ',' << fm.proj2d_px << ','
              << fm.rotation_err << ',' << fm.translation_err.x() << ','
              << fm.translation_err.y() << ',' << fm.translation_err.z() << ','
              << (fm.add_correct ? 1 : 0) << '\n';
      }
      if (!ev_out.empty()) write_json_file(report, ev_out);
      if (g.json_out || ev_out.empty())
        std::cout << report.dump(2) << '\n';
      else
        std::cout << "add accuracy " << rep.add_accuracy << ", auc " << rep.auc
                  << ", report written to " << ev_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
