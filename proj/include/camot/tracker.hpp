#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "camot/angle_estimator.hpp"
#include "camot/assignment.hpp"
#include "camot/geometry.hpp"
#include "camot/kalman.hpp"

namespace camot {

inline double iou(const BBox& b1, const BBox& b2) {
  const double ix = std::min(b1.right(), b2.right()) - std::max(b1.left, b2.left);
  const double iy = std::min(b1.bottom(), b2.bottom()) - std::max(b1.top, b2.top);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = b1.area() + b2.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace detail {

inline double center_distance_similarity(const BBox& b1, const BBox& b2, double phi) {
  const double k = iou(b1, b2);
  const double dx = b1.center_x() - b2.center_x();
  const double dy = b1.center_y() - b2.center_y();
  const double cw = std::max(b1.right(), b2.right()) - std::min(b1.left, b2.left);
  const double ch = std::max(b1.bottom(), b2.bottom()) - std::min(b1.top, b2.top);
  const double denom = cw * cw + phi * ch * ch;
  if (denom <= 0.0) return k;
  return k - (dx * dx + phi * dy * dy) / denom;
}

} // namespace detail

/// Distance-IoU: IoU minus the normalized squared center offset. In (-1, 1].
inline double diou(const BBox& b1, const BBox& b2) {
  return detail::center_distance_similarity(b1, b2, 1.0);
}

/// Angle factor phi = 1 + cos²(theta): 2 for a ground-level camera, 1 top-down.
inline double angle_factor(double theta) {
  const double c = std::cos(theta);
  return 1.0 + c * c;
}

/// DIoU with the vertical terms weighted by the angle factor, so vertical
/// association is discouraged when the camera is near ground level. At
/// theta = pi/2 this is exactly diou().
inline double angle_aware_similarity(const BBox& b1, const BBox& b2, double theta) {
  if (!(theta >= 0.0 && theta <= kPi / 2.0 + 1e-12)) {
    throw invalid_input_error("angle_aware_similarity: theta must lie in [0, pi/2]");
  }
  return detail::center_distance_similarity(b1, b2, angle_factor(theta));
}

/// Per-frame global-motion transform, pixel units. Identity when absent.
struct CmcTransform {
  // 2x3 affine [a11 a12 a13; a21 a22 a23].
  double m[2][3] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};

  static CmcTransform identity() { return {}; }

  bool finite() const {
    for (const auto& row : m)
      for (double x : row)
        if (!std::isfinite(x)) return false;
    return true;
  }
};

enum class TrackStatus { tentative, active, lost };

/// Kalman state over (u, v, 1/z, a, h) plus velocities on (u, v, 1/z, h).
struct TrackState {
  Eigen::Matrix<double, 9, 1> mean = Eigen::Matrix<double, 9, 1>::Zero();
  Eigen::Matrix<double, 9, 9> cov = Eigen::Matrix<double, 9, 9>::Identity();
  int id = 0;
  TrackStatus status = TrackStatus::tentative;
  int frames_lost = 0;
  int hits = 0;
  double conf = 0.0;
  Point3 last_point3{};
  bool has_point3 = false;

  double u() const { return mean(0); }
  double v() const { return mean(1); }
  double iz() const { return mean(2); }
  double aspect() const { return mean(3); }
  double height() const { return mean(4); }

  /// Image box reconstructed from the state; extents floored to stay valid
  /// while a lost track drifts.
  BBox to_box() const {
    const double h = std::max(mean(4), 1.0);
    const double a = std::max(mean(3), 1e-3);
    const double w = a * h;
    return {mean(0) - 0.5 * w, mean(1) - 0.5 * h, w, h, conf};
  }
};

struct TrackerConfig {
  double tau_high = 0.6;
  double tau_low = 0.2;
  int lost_buffer = 30;
  double match_thresh_first = 0.2;  // angle-aware similarity gate
  double match_thresh_second = 0.3; // IoU gate for the low-confidence pass
  int min_hits = 2;
  double sigma_p = 0.08; // position process noise scale (multiplies f_px * iz)
  double sigma_v = 0.01; // velocity process noise scale
  bool use_angle_aware = true; // phi per the angle factor; false forces phi = 1
  bool use_depth = true;       // false freezes the inverse-depth channel

  void validate() const {
    if (!(tau_low >= 0.0 && tau_low < tau_high && tau_high <= 1.0)) {
      throw invalid_input_error("TrackerConfig: need 0 <= tau_low < tau_high <= 1");
    }
    if (lost_buffer < 0) throw invalid_input_error("TrackerConfig: lost_buffer must be >= 0");
    if (min_hits < 1) throw invalid_input_error("TrackerConfig: min_hits must be >= 1");
    if (!(sigma_p > 0.0) || !(sigma_v > 0.0)) {
      throw invalid_input_error("TrackerConfig: noise scales must be > 0");
    }
  }
};

struct TrackSnapshot {
  long frame = 0;
  int id = 0;
  BBox box;
  double conf = 0.0;
};

namespace detail {

constexpr double kSigmaIzProc = 0.01;  // relative iz process noise
constexpr double kSigmaIzVel = 1e-3;   // relative iz-velocity process noise
constexpr double kSigmaIzObs = 0.05;   // relative iz observation noise
constexpr double kSigmaAspProc = 1e-2;
constexpr double kSigmaAspObs = 5e-2;

} // namespace detail

/// Constant-velocity prediction with the position noise scaled by f_px * iz,
/// so far-away objects receive proportionally less process noise.
inline void kf_predict(TrackState& t, const CameraIntrinsics& cam, const TrackerConfig& cfg) {
  using M9 = Eigen::Matrix<double, 9, 9>;
  M9 F = M9::Identity();
  F(0, 5) = 1.0; // u += du
  F(1, 6) = 1.0; // v += dv
  F(2, 7) = 1.0; // iz += diz
  F(4, 8) = 1.0; // h += dh

  const double iz = std::max(t.iz(), 1e-9);
  const double h = std::max(t.height(), 1.0);
  const double sp = cfg.sigma_p * cam.f_px * iz;
  const double sv = cfg.sigma_v * cam.f_px * iz;
  const double s_iz = cfg.use_depth ? detail::kSigmaIzProc * iz : 0.0;
  const double s_izv = cfg.use_depth ? detail::kSigmaIzVel * iz : 0.0;

  M9 Q = M9::Zero();
  Q(0, 0) = sp * sp;
  Q(1, 1) = sp * sp;
  Q(2, 2) = s_iz * s_iz;
  Q(3, 3) = detail::kSigmaAspProc * detail::kSigmaAspProc;
  Q(4, 4) = (cfg.sigma_p * h) * (cfg.sigma_p * h);
  Q(5, 5) = sv * sv;
  Q(6, 6) = sv * sv;
  Q(7, 7) = s_izv * s_izv;
  Q(8, 8) = (cfg.sigma_v * h) * (cfg.sigma_v * h);

  kf::predict(t.mean, t.cov, F, Q);
  t.mean(2) = std::max(t.mean(2), 1e-9); // inverse depth stays positive
}

struct Observation {
  double u = 0.0;
  double v = 0.0;
  double a = 0.0;
  double h = 0.0;
  double iz = 0.0;
  bool has_iz = false;
};

/// Kalman correction over (u, v, a, h) and, when available, the inverse depth.
inline void kf_update(TrackState& t, const Observation& obs, const CameraIntrinsics& cam,
                      const TrackerConfig& cfg) {
  const double iz = std::max(t.iz(), 1e-9);
  const double sp = cfg.sigma_p * cam.f_px * iz;
  const double sh = cfg.sigma_p * std::max(t.height(), 1.0);

  if (obs.has_iz) {
    Eigen::Matrix<double, 5, 9> H = Eigen::Matrix<double, 5, 9>::Zero();
    H(0, 0) = H(1, 1) = H(2, 2) = H(3, 3) = H(4, 4) = 1.0;
    Eigen::Matrix<double, 5, 5> R = Eigen::Matrix<double, 5, 5>::Zero();
    R(0, 0) = R(1, 1) = sp * sp;
    R(2, 2) = (detail::kSigmaIzObs * obs.iz) * (detail::kSigmaIzObs * obs.iz);
    R(3, 3) = detail::kSigmaAspObs * detail::kSigmaAspObs;
    R(4, 4) = sh * sh;
    Eigen::Matrix<double, 5, 1> z;
    z << obs.u, obs.v, obs.iz, obs.a, obs.h;
    kf::update(t.mean, t.cov, H, R, z);
  } else {
    Eigen::Matrix<double, 4, 9> H = Eigen::Matrix<double, 4, 9>::Zero();
    H(0, 0) = H(1, 1) = 1.0;
    H(2, 3) = H(3, 4) = 1.0;
    Eigen::Matrix<double, 4, 4> R = Eigen::Matrix<double, 4, 4>::Zero();
    R(0, 0) = R(1, 1) = sp * sp;
    R(2, 2) = detail::kSigmaAspObs * detail::kSigmaAspObs;
    R(3, 3) = sh * sh;
    Eigen::Matrix<double, 4, 1> z;
    z << obs.u, obs.v, obs.a, obs.h;
    kf::update(t.mean, t.cov, H, R, z);
  }
  t.mean(2) = std::max(t.mean(2), 1e-9);
}

/// Warps track means by the per-frame affine; velocities see the linear part.
inline void apply_cmc(std::vector<TrackState>& tracks, const CmcTransform& t) {
  if (!t.finite()) throw invalid_input_error("apply_cmc: non-finite transform");
  for (auto& tr : tracks) {
    const double u = tr.mean(0);
    const double v = tr.mean(1);
    tr.mean(0) = t.m[0][0] * u + t.m[0][1] * v + t.m[0][2];
    tr.mean(1) = t.m[1][0] * u + t.m[1][1] * v + t.m[1][2];
    const double du = tr.mean(5);
    const double dv = tr.mean(6);
    tr.mean(5) = t.m[0][0] * du + t.m[0][1] * dv;
    tr.mean(6) = t.m[1][0] * du + t.m[1][1] * dv;
  }
}

/// Two-stage, angle-aware tracking over detections plus per-frame geometry.
class Tracker {
public:
  Tracker(const TrackerConfig& cfg, const CameraIntrinsics& cam, double object_height = 1.7)
      : cfg_(cfg), cam_(cam), object_height_(object_height) {
    cfg_.validate();
    cam_.validate();
  }

  long frame_count() const { return frame_; }
  const std::vector<TrackState>& tracks() const { return tracks_; }

  /// Advances one frame: CMC warp, prediction, the ByteTrack-style two-stage
  /// association (angle-aware for high-confidence detections, plain IoU for
  /// low-confidence ones), lifecycle upkeep, and reporting of active tracks.
  std::vector<TrackSnapshot> step(const std::vector<BBox>& dets, const FrameGeometry& geom,
                                  const CmcTransform& cmc = CmcTransform::identity()) {
    for (const auto& [idx, p] : geom.points) {
      if (idx < 0 || idx >= static_cast<int>(dets.size())) {
        throw invalid_input_error("Tracker::step: geometry does not match the detections");
      }
      (void)p;
    }
    ++frame_;

    apply_cmc(tracks_, cmc);
    for (auto& t : tracks_) kf_predict(t, cam_, cfg_);

    std::vector<int> high, low;
    for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
      const double c = dets[static_cast<size_t>(i)].conf;
      if (c >= cfg_.tau_high) {
        high.push_back(i);
      } else if (c >= cfg_.tau_low) {
        low.push_back(i);
      }
    }

    std::vector<char> det_matched(dets.size(), 0);
    std::vector<char> trk_matched(tracks_.size(), 0);

    // First pass: high-confidence detections against every live track.
    std::vector<int> pool1(tracks_.size());
    for (size_t j = 0; j < tracks_.size(); ++j) pool1[j] = static_cast<int>(j);
    associate(dets, high, pool1, geom, /*angle_aware=*/true, cfg_.match_thresh_first,
              det_matched, trk_matched);

    // Second pass: low-confidence detections against the remaining confirmed
    // tracks; their geometry is unreliable, so plain IoU does the gating.
    std::vector<int> pool2;
    for (size_t j = 0; j < tracks_.size(); ++j) {
      if (!trk_matched[j] && tracks_[j].status != TrackStatus::tentative) {
        pool2.push_back(static_cast<int>(j));
      }
    }
    associate(dets, low, pool2, geom, /*angle_aware=*/false, cfg_.match_thresh_second,
              det_matched, trk_matched);

    // Lifecycle of unmatched tracks.
    std::vector<TrackState> kept;
    kept.reserve(tracks_.size());
    for (size_t j = 0; j < tracks_.size(); ++j) {
      TrackState& t = tracks_[j];
      if (trk_matched[j]) {
        kept.push_back(t);
        continue;
      }
      if (t.status == TrackStatus::tentative) continue; // unconfirmed and gone
      t.status = TrackStatus::lost;
      ++t.frames_lost;
      if (t.frames_lost <= cfg_.lost_buffer) kept.push_back(t);
    }
    tracks_ = std::move(kept);

    // Fresh tracks from unmatched high-confidence detections.
    for (int i : high) {
      if (det_matched[static_cast<size_t>(i)]) continue;
      tracks_.push_back(spawn(dets[static_cast<size_t>(i)], i, geom));
    }

    std::vector<TrackSnapshot> out;
    for (const auto& t : tracks_) {
      if (t.status == TrackStatus::active) {
        out.push_back({frame_, t.id, t.to_box(), t.conf});
      }
    }
    std::sort(out.begin(), out.end(),
              [](const TrackSnapshot& a, const TrackSnapshot& b) { return a.id < b.id; });
    return out;
  }

private:
  void associate(const std::vector<BBox>& dets, const std::vector<int>& det_idx,
                 const std::vector<int>& trk_idx, const FrameGeometry& geom, bool angle_aware,
                 double gate, std::vector<char>& det_matched, std::vector<char>& trk_matched) {
    if (det_idx.empty() || trk_idx.empty()) return;
    const double phi =
        (angle_aware && cfg_.use_angle_aware) ? angle_factor(geom.theta) : 1.0;

    Eigen::MatrixXd cost(det_idx.size(), trk_idx.size());
    for (size_t r = 0; r < det_idx.size(); ++r) {
      const BBox& db = dets[static_cast<size_t>(det_idx[r])];
      for (size_t c = 0; c < trk_idx.size(); ++c) {
        const BBox tb = tracks_[static_cast<size_t>(trk_idx[c])].to_box();
        const double sim = angle_aware ? detail::center_distance_similarity(db, tb, phi)
                                       : iou(db, tb);
        cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = -sim;
      }
    }

    const AssignmentResult res = linear_assignment(cost, -gate);
    for (const auto& [r, c] : res.pairs) {
      const int di = det_idx[static_cast<size_t>(r)];
      const int tj = trk_idx[static_cast<size_t>(c)];
      confirm_match(tracks_[static_cast<size_t>(tj)], dets[static_cast<size_t>(di)], di, geom);
      det_matched[static_cast<size_t>(di)] = 1;
      trk_matched[static_cast<size_t>(tj)] = 1;
    }
  }

  void confirm_match(TrackState& t, const BBox& det, int det_index, const FrameGeometry& geom) {
    Observation obs;
    obs.u = det.center_x();
    obs.v = det.center_y();
    obs.a = det.w / det.h;
    obs.h = det.h;
    const auto it = geom.points.find(det_index);
    if (cfg_.use_depth && it != geom.points.end() && it->second.z > 1e-6) {
      obs.iz = 1.0 / it->second.z;
      obs.has_iz = true;
      t.last_point3 = it->second;
      t.has_point3 = true;
    }
    kf_update(t, obs, cam_, cfg_);
    ++t.hits;
    t.frames_lost = 0;
    t.conf = det.conf;
    if (t.status == TrackStatus::lost) {
      t.status = TrackStatus::active;
    } else if (t.status == TrackStatus::tentative && t.hits >= cfg_.min_hits) {
      t.status = TrackStatus::active;
    }
  }

  TrackState spawn(const BBox& det, int det_index, const FrameGeometry& geom) {
    TrackState t;
    t.id = next_id_++;
    t.status = cfg_.min_hits <= 1 ? TrackStatus::active : TrackStatus::tentative;
    t.hits = 1;
    t.conf = det.conf;

    double iz = det.h / (cam_.f_px * object_height_); // pinhole pseudo-depth from box height
    const auto it = geom.points.find(det_index);
    if (cfg_.use_depth && it != geom.points.end() && it->second.z > 1e-6) {
      iz = 1.0 / it->second.z;
      t.last_point3 = it->second;
      t.has_point3 = true;
    }
    t.mean(0) = det.center_x();
    t.mean(1) = det.center_y();
    t.mean(2) = std::max(iz, 1e-9);
    t.mean(3) = det.w / det.h;
    t.mean(4) = det.h;

    const double sp = cfg_.sigma_p * cam_.f_px * t.mean(2);
    const double sh = cfg_.sigma_p * det.h;
    Eigen::Matrix<double, 9, 1> stds;
    stds << 2.0 * sp, 2.0 * sp, 0.2 * t.mean(2), 0.05, 2.0 * sh,
        10.0 * cfg_.sigma_v * cam_.f_px * t.mean(2), 10.0 * cfg_.sigma_v * cam_.f_px * t.mean(2),
        0.05 * t.mean(2), 10.0 * cfg_.sigma_v * det.h;
    t.cov = stds.array().square().matrix().asDiagonal();
    return t;
  }

  TrackerConfig cfg_;
  CameraIntrinsics cam_;
  double object_height_;
  std::vector<TrackState> tracks_;
  int next_id_ = 1;
  long frame_ = 0;
};

} // namespace camot
