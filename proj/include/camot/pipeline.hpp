#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "camot/angle_estimator.hpp"
#include "camot/io.hpp"
#include "camot/metrics.hpp"
#include "camot/synth.hpp"
#include "camot/tracker.hpp"

namespace camot::pipeline {

struct AngleLogRow {
  long frame = 0;
  double theta_raw_deg = 0.0;
  double theta_deg = 0.0;
  double eps = 0.0;
  bool fallback = false;
};

struct TrackRunResult {
  std::vector<TrackSnapshot> results;
  std::vector<AngleLogRow> theta_log;
  long frames = 0;
  bool always_fallback = false;
};

/// Angle estimation + tracking over one detection file's frames.
inline TrackRunResult run_track(const std::map<long, std::vector<BBox>>& dets,
                                const io::RunConfig& cfg,
                                const std::map<long, CmcTransform>& cmc = {}) {
  TrackRunResult out;
  if (dets.empty()) return out;
  const long max_frame = dets.rbegin()->first;
  out.frames = max_frame;

  Tracker tracker(cfg.trk, cfg.cam, cfg.est.H);
  AngleHistory history(cfg.est.window());
  std::optional<FrameGeometry> prev;
  bool any_estimate = false;

  static const std::vector<BBox> kEmpty;
  for (long frame = 1; frame <= max_frame; ++frame) {
    const auto it = dets.find(frame);
    const std::vector<BBox>& frame_dets = it != dets.end() ? it->second : kEmpty;

    FrameGeometry geom = estimate_frame(frame, frame_dets, cfg.cam, cfg.est,
                                        prev ? &*prev : nullptr, history);
    if (!geom.used_fallback) any_estimate = true;

    const auto snaps = tracker.step(frame_dets, geom, io::cmc_at(cmc, frame));
    out.results.insert(out.results.end(), snaps.begin(), snaps.end());
    out.theta_log.push_back({frame, rad2deg(geom.theta_raw), rad2deg(geom.theta), geom.error,
                             geom.used_fallback});
    prev = std::move(geom);
  }

  std::sort(out.results.begin(), out.results.end(),
            [](const TrackSnapshot& a, const TrackSnapshot& b) {
              return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
            });
  out.always_fallback = !any_estimate;
  return out;
}

/// Angle estimation only (no tracker); same log rows as run_track.
inline std::vector<AngleLogRow> run_angle(const std::map<long, std::vector<BBox>>& dets,
                                          const io::RunConfig& cfg) {
  std::vector<AngleLogRow> log;
  if (dets.empty()) return log;
  const long max_frame = dets.rbegin()->first;

  AngleHistory history(cfg.est.window());
  std::optional<FrameGeometry> prev;
  static const std::vector<BBox> kEmpty;
  for (long frame = 1; frame <= max_frame; ++frame) {
    const auto it = dets.find(frame);
    const std::vector<BBox>& frame_dets = it != dets.end() ? it->second : kEmpty;
    FrameGeometry geom = estimate_frame(frame, frame_dets, cfg.cam, cfg.est,
                                        prev ? &*prev : nullptr, history);
    log.push_back({frame, rad2deg(geom.theta_raw), rad2deg(geom.theta), geom.error,
                   geom.used_fallback});
    prev = std::move(geom);
  }
  return log;
}

inline void write_theta_log(const std::string& path, const std::vector<AngleLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw invalid_input_error("cannot write file: " + path);
  out << "frame,theta_raw_deg,theta_smoothed_deg,epsilon,fallback\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%ld,%.6f,%.6f,%.8g,%d\n", r.frame, r.theta_raw_deg,
                  r.theta_deg, r.eps, r.fallback ? 1 : 0);
    out << buf;
  }
}

struct SynthSummary {
  long frames = 0;
  int objects = 0;
  long det_rows = 0;
  long gt_rows = 0;
};

/// Renders a scene to det.txt / gt.txt / gt_geom.csv inside out_dir.
inline SynthSummary run_synth(const synth::SceneSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const synth::World world = synth::generate_scene(spec);
  const auto frames = synth::project_scene(world);

  std::ofstream det(fs::path(out_dir) / "det.txt");
  std::ofstream gt(fs::path(out_dir) / "gt.txt");
  std::ofstream geom(fs::path(out_dir) / "gt_geom.csv");
  if (!det || !gt || !geom) throw invalid_input_error("cannot write into " + out_dir);

  geom << "frame,id,X,Y,Z,theta_star\n";
  SynthSummary sum;
  sum.frames = static_cast<long>(frames.size());
  sum.objects = spec.n_objects;

  char buf[256];
  for (const auto& f : frames) {
    for (size_t i = 0; i < f.detections.size(); ++i) {
      const BBox& b = f.detections[i];
      std::snprintf(buf, sizeof(buf), "%ld,-1,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n", f.frame,
                    b.left, b.top, b.w, b.h, b.conf);
      det << buf;
      ++sum.det_rows;
    }
    for (const auto& o : f.gt.objects) {
      if (!o.visible) continue;
      std::snprintf(buf, sizeof(buf), "%ld,%d,%.2f,%.2f,%.2f,%.2f,1.00,-1,-1,-1\n", f.frame, o.id,
                    o.box.left, o.box.top, o.box.w, o.box.h);
      gt << buf;
      std::snprintf(buf, sizeof(buf), "%ld,%d,%.6f,%.6f,%.6f,%.6f\n", f.frame, o.id, o.centroid.x,
                    o.centroid.y, o.centroid.z, world.spec.theta_star);
      geom << buf;
      ++sum.gt_rows;
    }
  }
  return sum;
}

} // namespace camot::pipeline
