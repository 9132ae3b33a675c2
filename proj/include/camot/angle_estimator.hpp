#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "camot/geometry.hpp"
#include "camot/nelder_mead.hpp"

namespace camot {

struct EstimatorConfig {
  double theta0 = 0.0; // radians
  int n_plane = 40;
  double lambda_n = 0.6;
  double lambda_theta = 0.3;
  double lambda_regr = 0.1;
  double tau_eps = 1e-4;
  double H = 1.7; // assumed object height, meters
  double fps = 30.0;
  int max_iters = 100;
  double simplex_tol = 1e-6;
  LiftMode lift_mode = LiftMode::exact;
  double fallback_aspect = 0.41; // used when no unclipped box supplies an aspect ratio
  // A run ending this far from convergence restarts from a coarse ladder of
  // initial angles; Nelder--Mead alone is local and theta0 = 0 can sit on the
  // wrong side of a hump for steep cameras.
  double retry_eps = 0.05;

  /// Smoothing window w = fps / 2, at least one sample.
  int window() const { return std::max(1, static_cast<int>(std::llround(fps / 2.0))); }

  void validate() const {
    if (lambda_n < 0.0 || lambda_theta < 0.0 || lambda_regr < 0.0 ||
        lambda_n + lambda_theta + lambda_regr <= 0.0) {
      throw invalid_input_error("EstimatorConfig: lambda weights must be >= 0 with positive sum");
    }
    if (n_plane < 3) throw invalid_input_error("EstimatorConfig: n_plane must be >= 3");
    if (!(tau_eps > 0.0)) throw invalid_input_error("EstimatorConfig: tau_eps must be > 0");
    if (!(fps > 0.0)) throw invalid_input_error("EstimatorConfig: fps must be > 0");
    if (!(H > 0.0)) throw invalid_input_error("EstimatorConfig: H must be > 0");
    if (theta0 < 0.0 || theta0 >= kPi / 2.0) {
      throw invalid_input_error("EstimatorConfig: theta0 must lie in [0, pi/2)");
    }
  }
};

/// Ring buffer of the last `w` raw angle estimates.
class AngleHistory {
public:
  explicit AngleHistory(int capacity) : capacity_(std::max(1, capacity)) {}

  void push(long frame, double theta) {
    entries_.emplace_back(frame, theta);
    while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
  }

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  double theta_at(int i) const { return entries_[static_cast<size_t>(i)].second; } // oldest first
  long frame_at(int i) const { return entries_[static_cast<size_t>(i)].first; }

private:
  int capacity_;
  std::deque<std::pair<long, double>> entries_;
};

/// Per-frame output of the estimator.
struct FrameGeometry {
  double theta = 0.0;     // smoothed
  double theta_raw = 0.0; // pre-smoothing optimum
  std::optional<Plane> plane;
  std::map<int, Point3> points; // detection index -> 3D centroid
  double error = 0.0;           // final composite error at the smoothed angle
  bool used_fallback = false;
};

struct AngleErrorResult {
  double eps = 0.0;
  double eps_n = 0.0;
  double eps_theta = 0.0;
  double eps_regr = 0.0;
  Plane plane;
  std::vector<Point3> points;        // centroids of the lifted boxes that survived
  std::vector<int> lifted_indices;   // positions in the input box list
};

/// Picks the plane-estimation boxes: frame-clipping boxes are dropped, the
/// image is split into n_plane equal-width regions and each region keeps its
/// highest-confidence box (ties to the lower detection index).
inline std::vector<int> select_boxes(const std::vector<BBox>& dets, const CameraIntrinsics& cam,
                                     int n_plane) {
  std::vector<int> best_in_region(static_cast<size_t>(n_plane), -1);
  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    const BBox& b = dets[static_cast<size_t>(i)];
    if (b.clips_frame(cam)) continue;
    int region = static_cast<int>(b.center_x() * n_plane / cam.width);
    region = std::clamp(region, 0, n_plane - 1);
    const int cur = best_in_region[static_cast<size_t>(region)];
    if (cur < 0 || dets[static_cast<size_t>(cur)].conf < b.conf) {
      best_in_region[static_cast<size_t>(region)] = i;
    }
  }
  std::vector<int> out;
  for (int idx : best_in_region) {
    if (idx >= 0) out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Composite plane-consistency error at a trial angle.
///
/// eps_n   — mean misalignment between each object's top-bottom vector and the
///           fitted normal, both taken in the side-view (Y,Z) plane where the
///           lifting model lives;
/// eps_theta — normalized gap between the trial angle and the fitted plane's;
/// eps_regr  — RMSE of centroid-to-plane distances.
inline AngleErrorResult angle_error(double theta, const std::vector<BBox>& boxes,
                                    const CameraIntrinsics& cam, const EstimatorConfig& cfg) {
  AngleErrorResult res;
  std::vector<Eigen::Vector3d> vs;
  for (int i = 0; i < static_cast<int>(boxes.size()); ++i) {
    try {
      LiftedObject lo = lift_detection(boxes[static_cast<size_t>(i)], theta, cam, cfg.H,
                                       cfg.lift_mode);
      res.points.push_back(lo.centroid);
      res.lifted_indices.push_back(i);
      vs.push_back(lo.v);
    } catch (const degenerate_geometry_error&) {
      // Near-degenerate boxes are excluded from the fit, not fatal.
    }
  }
  if (res.points.size() < 3) {
    throw insufficient_points_error("angle_error: fewer than 3 liftable boxes");
  }

  res.plane = fit_plane(res.points);

  double sum_align = 0.0;
  const Eigen::Vector2d n2(res.plane.n.y(), res.plane.n.z());
  const double n2n = n2.norm();
  for (const auto& v : vs) {
    const Eigen::Vector2d v2(v.y(), v.z());
    const double vn = v2.norm();
    if (vn < 1e-12 || n2n < 1e-12) {
      sum_align += 1.0;
      continue;
    }
    sum_align += 1.0 - std::abs(v2.dot(n2)) / (vn * n2n);
  }
  res.eps_n = sum_align / static_cast<double>(vs.size());

  res.eps_theta = (2.0 / kPi) * std::abs(theta - plane_angle(res.plane));

  double ss = 0.0;
  for (const auto& p : res.points) {
    const double dist = point_plane_distance(p, res.plane);
    ss += dist * dist;
  }
  res.eps_regr = std::sqrt(ss / static_cast<double>(res.points.size()));

  res.eps = cfg.lambda_n * res.eps_n + cfg.lambda_theta * res.eps_theta +
            cfg.lambda_regr * res.eps_regr;
  return res;
}

struct OptimizeResult {
  double theta = 0.0;
  double eps = 0.0;
  AngleErrorResult best; // evaluation at the returned theta
  int evaluations = 0;
};

/// Nelder--Mead search for the elevation angle over [0, pi/2 - 0.01].
/// Trial angles whose lift or plane fit degenerates are treated as high-error
/// rather than aborting the search; if no trial angle at all yields a usable
/// plane the frame is reported as insufficient.
inline OptimizeResult optimize_angle(const std::vector<BBox>& boxes, const CameraIntrinsics& cam,
                                     const EstimatorConfig& cfg, double theta_init) {
  if (boxes.size() < 3) {
    throw insufficient_points_error("optimize_angle: need at least 3 boxes");
  }
  OptimizeResult out;
  std::optional<AngleErrorResult> best;
  double best_theta = theta_init;

  const auto objective = [&](double theta) {
    try {
      AngleErrorResult r = angle_error(theta, boxes, cam, cfg);
      if (!best || r.eps < best->eps) {
        best = r;
        best_theta = theta;
      }
      return r.eps;
    } catch (const insufficient_points_error&) {
      return 1e9;
    } catch (const degenerate_fit_error&) {
      return 1e9;
    }
  };

  NelderMeadOptions nm;
  nm.lo = 0.0;
  nm.hi = kPi / 2.0 - 0.01;
  nm.tau_eps = cfg.tau_eps;
  nm.simplex_tol = cfg.simplex_tol;
  nm.max_iters = cfg.max_iters;

  NelderMeadResult r = nelder_mead_1d(objective, theta_init, nm);
  out.evaluations = r.evaluations;

  if (!best || best->eps > cfg.retry_eps) {
    for (double start_deg : {10.0, 25.0, 40.0, 55.0, 70.0, 85.0}) {
      const double start = std::clamp(deg2rad(start_deg), nm.lo, nm.hi);
      const NelderMeadResult rr = nelder_mead_1d(objective, start, nm);
      out.evaluations += rr.evaluations;
      if (best && best->eps < cfg.tau_eps) break;
    }
  }

  if (!best) {
    throw insufficient_points_error("optimize_angle: no trial angle yields a usable plane");
  }
  out.theta = best_theta;
  out.eps = best->eps;
  out.best = *best;
  return out;
}

/// Weighted moving average over the history window: the newest sample gets
/// weight w, the oldest in the window weight w-m+1; partial windows are
/// renormalized so the weights always sum to 1.
inline double smooth_angle(const AngleHistory& history) {
  if (history.empty()) {
    throw invalid_input_error("smooth_angle: empty history");
  }
  const int w = history.capacity();
  const int m = history.size();
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < m; ++k) {
    const double weight = static_cast<double>(w - m + 1 + k);
    num += weight * history.theta_at(k);
    den += weight;
  }
  return num / den;
}

/// Completes a frame-clipped box: a top/bottom clip extends the clipped side
/// until height = width / mean_aspect, a left/right clip until
/// width = height * mean_aspect. The visible extent is never shrunk.
inline BBox extrapolate_clipped_box(const BBox& box, const CameraIntrinsics& cam,
                                    double mean_aspect) {
  box.validate();
  if (!(mean_aspect > 0.0)) {
    throw invalid_input_error("extrapolate_clipped_box: mean_aspect must be > 0");
  }
  const double W = static_cast<double>(cam.width);
  const double Hh = static_cast<double>(cam.height);
  if (box.right() <= 0.0 || box.left >= W || box.bottom() <= 0.0 || box.top >= Hh) {
    throw invalid_input_error("extrapolate_clipped_box: box fully outside the frame");
  }
  if (!box.clips_frame(cam)) return box;

  BBox out = box;
  const bool clip_top = out.top < 0.0;
  const bool clip_bottom = out.bottom() > Hh;
  if (clip_top || clip_bottom) {
    const double target_h = std::max(out.h, out.w / mean_aspect);
    const double extra = target_h - out.h;
    if (extra > 0.0) {
      if (clip_top && clip_bottom) {
        out.top -= 0.5 * extra;
      } else if (clip_top) {
        out.top -= extra;
      }
      out.h = target_h;
    }
  }
  const bool clip_left = out.left < 0.0;
  const bool clip_right = out.right() > W;
  if (clip_left || clip_right) {
    const double target_w = std::max(out.w, out.h * mean_aspect);
    const double extra = target_w - out.w;
    if (extra > 0.0) {
      if (clip_left && clip_right) {
        out.left -= 0.5 * extra;
      } else if (clip_left) {
        out.left -= extra;
      }
      out.w = target_w;
    }
  }
  return out;
}

/// Full per-frame pass: box selection, angle optimization (seeded from the
/// previous frame), smoothing, and the final lifting of every detection at
/// the smoothed angle. When fewer than three usable boxes exist the previous
/// frame's plane and angle are reused (used_fallback); with no previous plane
/// the frame falls back to theta0 with no points.
inline FrameGeometry estimate_frame(long frame, const std::vector<BBox>& dets,
                                    const CameraIntrinsics& cam, const EstimatorConfig& cfg,
                                    const FrameGeometry* prev, AngleHistory& history) {
  cfg.validate();
  cam.validate();

  FrameGeometry geom;
  const std::vector<int> sel = select_boxes(dets, cam, cfg.n_plane);
  std::vector<BBox> sel_boxes;
  sel_boxes.reserve(sel.size());
  for (int idx : sel) sel_boxes.push_back(dets[static_cast<size_t>(idx)]);

  try {
    if (sel_boxes.size() < 3) {
      throw insufficient_points_error("estimate_frame: fewer than 3 selected boxes");
    }
    const double init = prev ? prev->theta : cfg.theta0;
    OptimizeResult opt = optimize_angle(sel_boxes, cam, cfg, init);
    history.push(frame, opt.theta);
    geom.theta_raw = opt.theta;
    geom.theta = smooth_angle(history);
    try {
      AngleErrorResult fin = angle_error(geom.theta, sel_boxes, cam, cfg);
      geom.plane = fin.plane;
      geom.error = fin.eps;
    } catch (const error&) {
      geom.plane = opt.best.plane;
      geom.error = opt.eps;
    }
  } catch (const insufficient_points_error&) {
    geom.used_fallback = true;
    if (prev && prev->plane) {
      geom.theta = prev->theta;
      geom.theta_raw = prev->theta;
      geom.plane = prev->plane;
      geom.error = prev->error;
    } else {
      geom.theta = cfg.theta0;
      geom.theta_raw = cfg.theta0;
      return geom; // cold start: no plane, no points
    }
  }

  // Final pass over all detections, clipped boxes extrapolated first.
  double aspect_sum = 0.0;
  int aspect_count = 0;
  for (const auto& d : dets) {
    if (!d.clips_frame(cam)) {
      aspect_sum += d.w / d.h;
      ++aspect_count;
    }
  }
  const double mean_aspect = aspect_count > 0 ? aspect_sum / aspect_count : cfg.fallback_aspect;

  for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
    const BBox& d = dets[static_cast<size_t>(i)];
    try {
      const BBox lifted_box =
          d.clips_frame(cam) ? extrapolate_clipped_box(d, cam, mean_aspect) : d;
      const LiftedObject lo = lift_detection(lifted_box, geom.theta, cam, cfg.H, cfg.lift_mode);
      geom.points.emplace(i, lo.centroid);
    } catch (const error&) {
      // Unliftable detection: no 3D point for it this frame.
    }
  }
  return geom;
}

} // namespace camot
