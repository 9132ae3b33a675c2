// camot: synthesize scenes, estimate camera elevation angles, run the
// angle-aware tracker, and evaluate results against ground truth.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "camot/pipeline.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CameraFlags {
  int width = 0;
  int height = 0;
  double f_mm = 0.0;
  double f_px = 0.0;

  void apply(camot::io::RunConfig& cfg) const {
    if (width > 0 || height > 0) {
      const int w = width > 0 ? width : cfg.cam.width;
      const int h = height > 0 ? height : cfg.cam.height;
      const double keep_fpx = cfg.cam.f_px;
      cfg.cam = camot::CameraIntrinsics::from_focal_mm(f_mm > 0.0 ? f_mm : 50.0, w, h);
      if (f_mm <= 0.0 && f_px <= 0.0) cfg.cam.f_px = keep_fpx;
    } else if (f_mm > 0.0) {
      cfg.cam = camot::CameraIntrinsics::from_focal_mm(f_mm, cfg.cam.width, cfg.cam.height);
    }
    if (f_px > 0.0) cfg.cam.f_px = f_px;
    cfg.cam.validate();
  }
};

camot::io::RunConfig load_config(const std::string& config_path, const CameraFlags& cam_flags,
                                 const std::string& mode) {
  camot::io::RunConfig cfg;
  if (!config_path.empty()) cfg = camot::io::RunConfig::from_file(config_path);
  cam_flags.apply(cfg);
  if (!mode.empty()) {
    if (mode == "paper") {
      cfg.est.lift_mode = camot::LiftMode::paper;
    } else if (mode == "exact") {
      cfg.est.lift_mode = camot::LiftMode::exact;
    } else {
      throw camot::invalid_input_error("--mode must be paper or exact");
    }
  }
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAMOT: camera-angle-aware pseudo-3D multi-object tracking"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
  int objects = 25, frames = 60;
  double theta_deg = 30.0, fps = 30.0, noise = 0.0, cam_height = -1.0, obj_height = 1.7;
  std::uint64_t seed = 0;
  std::string motion = "linear", out_dir;
  CameraFlags synth_cam;
  synth_cmd->add_option("--objects", objects, "Number of objects")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--theta", theta_deg, "Camera elevation angle, degrees")->required();
  synth_cmd->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fps", fps, "Frames per second")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", seed, "RNG seed");
  synth_cmd->add_option("--noise", noise, "Box-edge jitter std, pixels")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--motion", motion, "static|linear|crossing")
      ->check(CLI::IsMember({"static", "linear", "crossing"}));
  synth_cmd->add_option("--cam-height", cam_height, "Camera height above ground, meters");
  synth_cmd->add_option("--object-height", obj_height, "Object height, meters")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", synth_cam.width, "Image width, px");
  synth_cmd->add_option("--height", synth_cam.height, "Image height, px");
  synth_cmd->add_option("--f-px", synth_cam.f_px, "Focal length, px");
  synth_cmd->add_option("--f-mm", synth_cam.f_mm, "Focal length, mm (35mm equivalent)");
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();

  // --- angle ---------------------------------------------------------------
  auto* angle_cmd = app.add_subcommand("angle", "Estimate per-frame elevation angles");
  std::string det_path, config_path, mode, angle_out;
  CameraFlags run_cam;
  angle_cmd->add_option("--det", det_path, "MOT detection file")
      ->required()
      ->check(CLI::ExistingFile);
  angle_cmd->add_option("--config", config_path, "Run configuration file")
      ->check(CLI::ExistingFile);
  angle_cmd->add_option("--mode", mode, "Lifting mode: paper|exact")
      ->check(CLI::IsMember({"paper", "exact"}));
  angle_cmd->add_option("--out", angle_out, "Output CSV (default: stdout)");
  angle_cmd->add_option("--width", run_cam.width, "Image width, px");
  angle_cmd->add_option("--height", run_cam.height, "Image height, px");
  angle_cmd->add_option("--f-px", run_cam.f_px, "Focal length, px");
  angle_cmd->add_option("--f-mm", run_cam.f_mm, "Focal length, mm (35mm equivalent)");

  // --- track ---------------------------------------------------------------
  auto* track_cmd = app.add_subcommand("track", "Run the angle-aware tracker");
  std::string cmc_path, track_out, theta_log_path;
  track_cmd->add_option("--det", det_path, "MOT detection file")
      ->required()
      ->check(CLI::ExistingFile);
  track_cmd->add_option("--config", config_path, "Run configuration file")
      ->check(CLI::ExistingFile);
  track_cmd->add_option("--cmc", cmc_path, "CMC transform file")->check(CLI::ExistingFile);
  track_cmd->add_option("--mode", mode, "Lifting mode: paper|exact")
      ->check(CLI::IsMember({"paper", "exact"}));
  track_cmd->add_option("--out", track_out, "MOT result file")->required();
  track_cmd->add_option("--theta-log", theta_log_path, "Per-frame angle CSV");
  track_cmd->add_option("--width", run_cam.width, "Image width, px");
  track_cmd->add_option("--height", run_cam.height, "Image height, px");
  track_cmd->add_option("--f-px", run_cam.f_px, "Focal length, px");
  track_cmd->add_option("--f-mm", run_cam.f_mm, "Focal length, mm (35mm equivalent)");

  // --- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a result file against ground truth");
  std::string gt_path, result_path, report_csv;
  eval_cmd->add_option("--gt", gt_path, "MOT ground-truth file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--result", result_path, "MOT result file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out-csv", report_csv, "Write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      camot::synth::SceneSpec spec;
      if (theta_deg < 0.0 || theta_deg >= 90.0) {
        std::cerr << "error: --theta must lie in [0, 90)\n";
        return kExitUsage;
      }
      spec.n_objects = objects;
      spec.theta_star = camot::deg2rad(theta_deg);
      spec.n_frames = frames;
      spec.fps = fps;
      spec.seed = seed;
      spec.noise = noise;
      spec.cam_height = cam_height;
      spec.H = obj_height;
      if (motion == "static") {
        spec.motion = camot::synth::MotionModel::static_scene;
      } else if (motion == "crossing") {
        spec.motion = camot::synth::MotionModel::crossing;
      } else {
        spec.motion = camot::synth::MotionModel::linear;
      }
      if (synth_cam.width > 0 || synth_cam.height > 0 || synth_cam.f_mm > 0.0) {
        spec.cam = camot::CameraIntrinsics::from_focal_mm(
            synth_cam.f_mm > 0.0 ? synth_cam.f_mm : 18.75,
            synth_cam.width > 0 ? synth_cam.width : 1920,
            synth_cam.height > 0 ? synth_cam.height : 1080);
      }
      if (synth_cam.f_px > 0.0) spec.cam.f_px = synth_cam.f_px;

      const auto sum = camot::pipeline::run_synth(spec, out_dir);
      std::printf("scene: %d objects, %ld frames, theta*=%.1f deg, seed %llu\n", sum.objects,
                  sum.frames, theta_deg, static_cast<unsigned long long>(seed));
      std::printf("wrote %s/det.txt (%ld rows), gt.txt + gt_geom.csv (%ld rows)\n",
                  out_dir.c_str(), sum.det_rows, sum.gt_rows);
      return 0;
    }

    if (angle_cmd->parsed()) {
      const auto cfg = load_config(config_path, run_cam, mode);
      const auto dets = camot::io::read_detections(det_path);
      const auto log = camot::pipeline::run_angle(dets, cfg);
      if (!angle_out.empty()) {
        camot::pipeline::write_theta_log(angle_out, log);
      } else {
        std::printf("frame,theta_raw_deg,theta_smoothed_deg,epsilon,fallback\n");
        for (const auto& r : log) {
          std::printf("%ld,%.6f,%.6f,%.8g,%d\n", r.frame, r.theta_raw_deg, r.theta_deg, r.eps,
                      r.fallback ? 1 : 0);
        }
      }
      return 0;
    }

    if (track_cmd->parsed()) {
      const auto cfg = load_config(config_path, run_cam, mode);
      const auto dets = camot::io::read_detections(det_path);
      std::map<long, camot::CmcTransform> cmc;
      if (!cmc_path.empty()) cmc = camot::io::read_cmc(cmc_path);
      const auto run = camot::pipeline::run_track(dets, cfg, cmc);
      camot::io::write_tracks(track_out, run.results);
      if (!theta_log_path.empty()) camot::pipeline::write_theta_log(theta_log_path, run.theta_log);
      if (run.always_fallback) {
        std::fprintf(stderr,
                     "warning: no frame had 3 usable detections; tracker ran with theta = "
                     "theta0 throughout\n");
      }
      std::printf("tracked %ld frames, %zu result rows -> %s\n", run.frames, run.results.size(),
                  track_out.c_str());
      return 0;
    }

    if (eval_cmd->parsed()) {
      const auto gt = camot::io::read_tracks(gt_path);
      const auto pred = camot::io::read_tracks(result_path);
      long max_gt_frame = 0;
      for (const auto& r : gt) max_gt_frame = std::max(max_gt_frame, r.frame);
      for (const auto& r : pred) {
        if (r.frame > max_gt_frame) {
          std::fprintf(stderr, "error: result frame %ld is outside the ground truth range 1..%ld\n",
                       r.frame, max_gt_frame);
          return kExitRuntime;
        }
      }
      const auto rep = camot::metrics::evaluate(gt, pred);
      std::printf("MOTA    FP      FN      IDSw    IDF1\n");
      std::printf("%.4f  %-6ld  %-6ld  %-6ld  %.4f\n", rep.mota, rep.fp, rep.fn, rep.idsw,
                  rep.idf1);
      if (!report_csv.empty()) {
        std::ofstream out(report_csv);
        if (!out) throw camot::invalid_input_error("cannot write file: " + report_csv);
        out << "mota,fp,fn,idsw,idf1,num_gt,idtp,idfp,idfn\n";
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%.6f,%ld,%ld,%ld,%.6f,%ld,%ld,%ld,%ld\n", rep.mota,
                      rep.fp, rep.fn, rep.idsw, rep.idf1, rep.num_gt, rep.idtp, rep.idfp,
                      rep.idfn);
        out << buf;
      }
      return 0;
    }
  } catch (const camot::invalid_input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
