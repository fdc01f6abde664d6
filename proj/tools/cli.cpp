#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <tbb/global_control.h>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"
#include "stg/evaluate.hpp"
#include "stg/synth.hpp"
#include "stg/trainer.hpp"

namespace stg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingFileError(p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw DataError("cannot open " + p.string() + " for writing");
  out << text;
}

json vec_json(const auto& v) {
  json a = json::array();
  for (int i = 0; i < int(v.size()); ++i) a.push_back(v[i]);
  return a;
}

json metric_json(const MetricReport& r) {
  json frames = json::array();
  for (const auto& f : r.frames)
    frames.push_back({{"camera", f.camera}, {"frame", f.frame}, {"psnr", f.psnr}, {"dssim1", f.dssim1},
                      {"dssim2", f.dssim2}});
  return {{"psnr", r.psnr}, {"dssim1", r.dssim1}, {"dssim2", r.dssim2}, {"frames", frames}};
}

// Evaluation vectors shared with the web viewer: per-Gaussian time
// evaluation and per-camera projection for a handful of Gaussians.
json make_fixture(const ModelFile& model, const std::string& model_name) {
  const GaussianCloud<float>& c = model.cloud;
  const std::size_t n = std::min<std::size_t>(c.size(), 16);
  const float times[] = {model.time_min, 0.5f * (model.time_min + model.time_max), model.time_max};
  const Camera cams[] = {
      look_at(64, 48, 60, 60, {0, 0, -4}, {0, 0, 0}, {0, 1, 0}),
      look_at(64, 48, 60, 60, {2, 0.5, -3.5}, {0, 0, 0}, {0, 1, 0}),
      look_at(64, 48, 60, 60, {-2, -0.5, -3.5}, {0, 0, 0}, {0, 1, 0}),
  };
  json cases = json::array();
  for (std::size_t i = 0; i < n; ++i)
    for (float t : times) {
      json entry = {{"gaussian", i}, {"t", t}};
      entry["position"] = vec_json(eval_position(c, i, t));
      entry["rotation"] = vec_json(eval_rotation(c, i, t));
      entry["temporal_opacity"] = eval_temporal_opacity(c, i, t);
      const Mat3<float> cov = eval_covariance(c, i, t);
      entry["covariance"] = {cov(0, 0), cov(0, 1), cov(0, 2), cov(1, 1), cov(1, 2), cov(2, 2)};
      json proj = json::array();
      for (int k = 0; k < 3; ++k) {
        ProjectedSplat<float> s;
        if (!project_gaussian(c, i, cams[k], t, RenderOptions{}, s)) {
          proj.push_back(nullptr);
          continue;
        }
        proj.push_back({{"center", vec_json(s.center)},
                        {"conic", {s.conic[0], s.conic[1], s.conic[2]}},
                        {"depth", s.depth},
                        {"color", {s.features[0], s.features[1], s.features[2]}}});
      }
      entry["projections"] = proj;
      cases.push_back(entry);
    }
  json cameras = json::array();
  for (const Camera& cam : cams) {
    std::vector<double> w2c;
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 4; ++k) w2c.push_back(cam.world_to_camera(r, k));
    cameras.push_back({{"width", cam.width}, {"height", cam.height}, {"fx", cam.fx}, {"fy", cam.fy},
                       {"cx", cam.cx}, {"cy", cam.cy}, {"world_to_camera", w2c}});
  }
  return {{"model", model_name}, {"tolerance", 1e-5}, {"cameras", cameras}, {"cases", cases}};
}

struct Options {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spacetime Gaussian feature splatting: synthesize, train, render, evaluate and export"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stg 0.1.0");
  app.fallthrough();

  Options opt;
  app.add_option("--seed", opt.seed, "Random seed (overrides the config seed)")
      ->each([&](const std::string&) { opt.seed_set = true; });
  app.add_option("--threads", opt.threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);

  // synthesize
  SynthSpec spec;
  std::string synth_out, motion = "mixed";
  auto* synth = app.add_subcommand("synthesize", "Generate a synthetic dataset with known ground truth");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--cameras", spec.cameras, "Number of cameras on the arc")->capture_default_str();
  synth->add_option("--width", spec.width, "Image width")->capture_default_str();
  synth->add_option("--height", spec.height, "Image height")->capture_default_str();
  synth->add_option("--frames", spec.frames, "Number of frames")->capture_default_str();
  synth->add_option("--blobs", spec.blobs, "Number of foreground blobs")->capture_default_str();
  synth->add_option("--motion", motion, "static, linear, cubic, transient or mixed")->capture_default_str();
  synth->add_option("--background-points", spec.background_points, "Clutter points in the init cloud")
      ->capture_default_str();
  synth->add_flag("--backdrop", spec.backdrop, "Add a distant textured wall missing from the init cloud");

  // train
  std::string train_data, train_out, train_config, train_log, train_init;
  std::vector<std::string> overrides;
  auto* train_cmd = app.add_subcommand("train", "Optimize a model on a dataset");
  train_cmd->add_option("--data", train_data, "Dataset manifest")->required();
  train_cmd->add_option("--out", train_out, "Output model file (.stgm)")->required();
  train_cmd->add_option("--config", train_config, "Training config JSON");
  train_cmd->add_option("--set", overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--log", train_log, "Write JSON-lines training log here instead of stdout");
  train_cmd->add_option("--init", train_init, "Start from this model instead of the point cloud");

  // render
  std::string render_model, render_out, render_data;
  int render_camera = -1;
  double render_t = 0;
  bool render_lite = false;
  std::vector<double> eye, target;
  int render_w = 128, render_h = 128;
  double render_focal = 137.0;
  auto* render = app.add_subcommand("render", "Render one image");
  render->add_option("--model", render_model, "Model file")->required();
  render->add_option("--out", render_out, "Output PNG")->required();
  render->add_option("--t", render_t, "Normalized time")->required();
  render->add_option("--data", render_data, "Dataset manifest providing --camera");
  render->add_option("--camera", render_camera, "Camera index in the dataset");
  render->add_option("--eye", eye, "Camera position x y z")->expected(3);
  render->add_option("--target", target, "Look-at point x y z")->expected(3);
  render->add_option("--width", render_w, "Image width with --eye")->capture_default_str();
  render->add_option("--height", render_h, "Image height with --eye")->capture_default_str();
  render->add_option("--focal", render_focal, "Focal length in pixels with --eye")->capture_default_str();
  render->add_flag("--lite", render_lite, "Base-color rendering without the MLP");

  // eval
  std::string eval_model, eval_data, eval_json;
  std::vector<int> eval_cameras;
  bool eval_all = false, eval_lite = false;
  auto* eval = app.add_subcommand("eval", "PSNR and DSSIM against a dataset");
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--data", eval_data, "Dataset manifest")->required();
  eval->add_option("--cameras", eval_cameras, "Camera indices (default: held-out cameras)");
  eval->add_flag("--all", eval_all, "Evaluate every camera");
  eval->add_flag("--lite", eval_lite, "Evaluate base-color rendering");
  eval->add_option("--json", eval_json, "Also write the report here");

  // export
  std::string export_model, export_out, export_fixture;
  auto* exp = app.add_subcommand("export", "Write the lite model for the web viewer");
  exp->add_option("--model", export_model, "Model file")->required();
  exp->add_option("--out", export_out, "Output lite model")->required();
  exp->add_option("--fixture", export_fixture, "Also write viewer evaluation vectors (JSON)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const bool info = e.get_exit_code() == 0;
    app.exit(e, out, err);
    return info ? 0 : 2;
  }

  std::unique_ptr<tbb::global_control> threads;
  if (opt.threads > 0)
    threads = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism, opt.threads);

  try {
    if (*synth) {
      spec.motion = parse_motion_family(motion);
      if (opt.seed_set) spec.seed = opt.seed;
      const SynthScene scene = generate_scene(spec);
      write_scene(scene, synth_out);
      out << "wrote " << scene.images.size() << " images, " << scene.points.size() << " points and "
          << scene.ground_truth.cloud.size() << " ground-truth Gaussians to " << synth_out << "\n";
    } else if (*train_cmd) {
      TrainConfig cfg;
      if (!train_config.empty()) cfg = config_from_json(read_text(train_config));
      for (const auto& o : overrides) apply_override(cfg, o);
      if (opt.seed_set) cfg.seed = opt.seed;
      cfg.validate();
      const Dataset data = Dataset::load(train_data);
      std::optional<ModelFile> init;
      if (!train_init.empty()) init = load_model(train_init);
      std::ofstream log_file;
      if (!train_log.empty()) {
        if (fs::path(train_log).has_parent_path()) fs::create_directories(fs::path(train_log).parent_path());
        log_file.open(train_log);
        if (!log_file) throw DataError("cannot open " + train_log + " for writing");
      }
      std::ostream& log = train_log.empty() ? out : log_file;
      TrainResult res = train(
          data, cfg,
          [&](const TrainLogRecord& r) {
            log << json{{"iteration", r.iteration}, {"loss", r.loss}, {"psnr", r.psnr}, {"gaussians", r.gaussians},
                        {"seconds", r.seconds}}
                       .dump()
                << "\n" << std::flush;
          },
          init ? &init->cloud : nullptr);
      ModelFile model;
      model.cloud = std::move(res.cloud);
      model.mlp = std::move(res.mlp);
      if (init && cfg.iterations == 0 && init->mlp) model.mlp = init->mlp;
      save_model(model, train_out);
      err << "saved " << model.cloud.size() << " Gaussians to " << train_out << "\n";
    } else if (*render) {
      const ModelFile model = load_model(render_model);
      Camera cam;
      if (!render_data.empty()) {
        if (render_camera < 0) throw UsageError("--data needs --camera");
        const DatasetManifest m = manifest_from_json(read_text(render_data));
        if (render_camera >= int(m.cameras.size())) throw UsageError("--camera index out of range");
        cam = m.cameras[render_camera].camera;
      } else if (eye.size() == 3 && target.size() == 3) {
        cam = look_at(render_w, render_h, render_focal, render_focal, {eye[0], eye[1], eye[2]},
                      {target[0], target[1], target[2]}, {0, 1, 0});
      } else {
        throw UsageError("render needs --data with --camera, or --eye and --target");
      }
      double t = render_t;
      if (t < model.time_min || t > model.time_max) {
        t = std::clamp(t, double(model.time_min), double(model.time_max));
        err << "warning: t=" << render_t << " is outside [" << model.time_min << ", " << model.time_max
            << "]; clamped to " << t << "\n";
      }
      write_png(render_out, render_rgb(model, cam, float(t), render_lite));
    } else if (*eval) {
      const ModelFile model = load_model(eval_model);
      const Dataset data = Dataset::load(eval_data);
      std::vector<int> cams = eval_cameras;
      if (eval_all) {
        cams.clear();
        for (int c = 0; c < int(data.manifest().cameras.size()); ++c) cams.push_back(c);
      } else if (cams.empty()) {
        cams = data.manifest().held_out_cameras;
      }
      if (cams.empty()) throw UsageError("no cameras to evaluate (dataset has no held-out cameras; use --all)");
      const MetricReport r = evaluate(model, data, cams, eval_lite);
      const json j = metric_json(r);
      if (!eval_json.empty()) write_text(eval_json, j.dump(2) + "\n");
      out << "psnr " << r.psnr << " dssim1 " << r.dssim1 << " dssim2 " << r.dssim2 << "\n";
    } else if (*exp) {
      const ModelFile model = load_model(export_model);
      export_web(model, export_out);
      if (!export_fixture.empty()) {
        const ModelFile lite = load_model(export_out);
        write_text(export_fixture, make_fixture(lite, fs::path(export_out).filename().string()).dump(2) + "\n");
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace stg::cli
