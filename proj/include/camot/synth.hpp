#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "camot/geometry.hpp"

namespace camot::synth {

enum class MotionModel { static_scene, linear, crossing };

/// Ground rectangle in camera-foot coordinates: x lateral (right positive),
/// g forward distance along the ground from the point below the camera.
struct GroundRect {
  double x_min = 0.0;
  double x_max = 0.0;
  double g_min = 0.0;
  double g_max = 0.0;

  bool empty() const { return !(x_max > x_min) || !(g_max > g_min); }
};

struct SceneSpec {
  int n_objects = 25;
  double theta_star = deg2rad(30.0);
  CameraIntrinsics cam = CameraIntrinsics::from_focal_mm(18.75, 1920, 1080); // f_px = 1000
  double H = 1.7;          // object (cylinder) height, meters
  double aspect = 0.41;    // cylinder diameter = H * aspect
  double cam_height = -1.0; // < 0: 6 m when theta > 15 deg, 1.8 m otherwise
  GroundRect area;          // empty: auto-fit to the camera footprint
  int n_frames = 60;
  double fps = 30.0;
  MotionModel motion = MotionModel::linear;
  double noise = 0.0; // box-edge jitter std, pixels
  std::uint64_t seed = 0;
  double speed_min = 0.4; // m/s, linear motion
  double speed_max = 1.4;
  // Crossing mode: objects 1 and 2 walk opposite ways along the depth
  // direction between ground distances g_a and g_b, meeting mid-sequence.
  // Negative values auto-fit to the visible footprint. crossing_dx separates
  // their lanes laterally; at 0 the ground-plane paths intersect exactly at
  // the midpoint frame.
  double crossing_g_a = -1.0;
  double crossing_g_b = -1.0;
  double crossing_dx = 0.0;

  double camera_height() const {
    if (cam_height > 0.0) return cam_height;
    return theta_star > deg2rad(15.0) ? 6.0 : 1.8;
  }

  void validate() const {
    cam.validate();
    if (n_objects < 1) throw invalid_input_error("SceneSpec: n_objects must be >= 1");
    if (!(theta_star >= 0.0 && theta_star < kPi / 2.0)) {
      throw invalid_input_error("SceneSpec: theta_star must lie in [0, pi/2)");
    }
    if (noise < 0.0) throw invalid_input_error("SceneSpec: noise must be >= 0");
    if (n_frames < 1) throw invalid_input_error("SceneSpec: n_frames must be >= 1");
    if (!(fps > 0.0)) throw invalid_input_error("SceneSpec: fps must be > 0");
    if (!(H > 0.0) || !(aspect > 0.0)) throw invalid_input_error("SceneSpec: H, aspect must be > 0");
  }
};

/// Straight-line ground-plane trajectory of one cylinder.
struct WorldObject {
  int id = 0;
  double x0 = 0.0;
  double g0 = 0.0;
  double vx = 0.0; // meters per frame
  double vg = 0.0;

  double x(long frame) const { return x0 + vx * static_cast<double>(frame); }
  double g(long frame) const { return g0 + vg * static_cast<double>(frame); }
};

struct World {
  SceneSpec spec;
  std::vector<WorldObject> objects;
};

struct GtObject {
  int id = 0;
  Point3 centroid;    // camera frame, exact
  Point3 bottom;      // bottom-center on the ground plane
  BBox box;           // exact projection, no jitter
  bool visible = false;
};

struct GtFrame {
  long frame = 0; // 1-based
  std::vector<GtObject> objects;
};

struct ProjectedFrame {
  long frame = 0;
  std::vector<BBox> detections;    // jittered when spec.noise > 0, visible objects only
  std::vector<int> det_object_ids; // parallel to detections
  GtFrame gt;
};

/// Ground footprint visible to the camera, shrunk a little so sampled objects
/// start well inside the frame.
inline GroundRect visible_footprint(const SceneSpec& spec) {
  const double h = spec.camera_height();
  const double theta = spec.theta_star;
  const double vfov2 = std::atan(0.5 * spec.cam.height / spec.cam.f_px);
  // Feet visible: the depression angle of the bottom ray stays inside the
  // vertical field of view (with margin) and below the horizon.
  const double dep_max = std::min(theta + 0.85 * vfov2, deg2rad(80.0));
  const double dep_min = std::max(theta - 0.85 * vfov2, deg2rad(0.8));
  GroundRect r;
  r.g_min = h / std::tan(dep_max);
  r.g_max = std::min(h / std::tan(dep_min), 60.0);
  if (r.g_max <= r.g_min) r.g_max = r.g_min * 1.5 + 1.0;
  const double z_near = h * std::sin(theta) + r.g_min * std::cos(theta);
  const double x_half = 0.8 * (0.5 * spec.cam.width / spec.cam.f_px) * z_near;
  r.x_min = -x_half;
  r.x_max = x_half;
  return r;
}

/// Deterministically places and moves n_objects cylinders on the ground.
inline World generate_scene(const SceneSpec& spec_in) {
  SceneSpec spec = spec_in;
  spec.validate();
  if (spec.area.empty()) spec.area = visible_footprint(spec);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(spec.area.x_min, spec.area.x_max);
  std::uniform_real_distribution<double> ug(spec.area.g_min, spec.area.g_max);
  std::uniform_real_distribution<double> uang(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uspeed(spec.speed_min, spec.speed_max);

  World world;
  world.spec = spec;

  const auto sample_static = [&](int id) {
    WorldObject o;
    o.id = id;
    o.x0 = ux(rng);
    o.g0 = ug(rng);
    return o;
  };

  switch (spec.motion) {
    case MotionModel::static_scene: {
      for (int i = 0; i < spec.n_objects; ++i) world.objects.push_back(sample_static(i + 1));
      break;
    }
    case MotionModel::linear: {
      for (int i = 0; i < spec.n_objects; ++i) {
        WorldObject o = sample_static(i + 1);
        const double heading = uang(rng);
        const double speed = uspeed(rng) / spec.fps; // meters per frame
        o.vx = speed * std::cos(heading);
        o.vg = speed * std::sin(heading);
        world.objects.push_back(o);
      }
      break;
    }
    case MotionModel::crossing: {
      // Objects 1 and 2 walk the depth lane in opposite directions (one away
      // from the camera, one toward it) and pass each other at the midpoint
      // frame; the rest is a static backdrop.
      const double span = spec.area.g_max - spec.area.g_min;
      const double g_a =
          spec.crossing_g_a > 0.0 ? spec.crossing_g_a : spec.area.g_min + 0.1 * span;
      const double g_b =
          spec.crossing_g_b > 0.0 ? spec.crossing_g_b : spec.area.g_max - 0.1 * span;
      const double T = static_cast<double>(std::max(spec.n_frames - 1, 1));

      WorldObject a;
      a.id = 1;
      a.x0 = -0.5 * spec.crossing_dx;
      a.g0 = g_a;
      a.vg = (g_b - g_a) / T;

      WorldObject b;
      b.id = 2;
      b.x0 = 0.5 * spec.crossing_dx;
      b.g0 = g_b;
      b.vg = (g_a - g_b) / T;

      world.objects.push_back(a);
      world.objects.push_back(b);
      for (int i = 2; i < spec.n_objects; ++i) world.objects.push_back(sample_static(i + 1));
      break;
    }
  }
  return world;
}

/// Exact pinhole projection of the world at the known elevation angle.
/// Box edges come from projecting the cylinder's top/bottom centers, the box
/// width from the cylinder diameter at the centroid depth. With noise > 0 a
/// seeded Gaussian jitter perturbs every box edge.
inline std::vector<ProjectedFrame> project_scene(const World& world) {
  const SceneSpec& spec = world.spec;
  spec.validate();

  const double theta = spec.theta_star;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double h = spec.camera_height();
  const CameraIntrinsics& cam = spec.cam;

  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> jitter(0.0, spec.noise > 0.0 ? spec.noise : 1.0);
  std::uniform_real_distribution<double> uconf(0.86, 0.99);

  std::vector<ProjectedFrame> frames;
  frames.reserve(static_cast<size_t>(spec.n_frames));

  for (long fi = 0; fi < spec.n_frames; ++fi) {
    ProjectedFrame pf;
    pf.frame = fi + 1;
    pf.gt.frame = fi + 1;

    for (const auto& obj : world.objects) {
      const double x = obj.x(fi);
      const double g = obj.g(fi);

      // Bottom-center on the plane, top-center H above it (world-vertical).
      const Point3 bottom{x, h * c - g * s, h * s + g * c};
      const Point3 top{x, (h - spec.H) * c - g * s, (h - spec.H) * s + g * c};
      const Point3 centroid{x, 0.5 * (bottom.y + top.y), 0.5 * (bottom.z + top.z)};

      GtObject gt;
      gt.id = obj.id;
      gt.centroid = centroid;
      gt.bottom = bottom;

      const double conf = uconf(rng);
      double j1 = 0.0, j2 = 0.0, j3 = 0.0, j4 = 0.0;
      if (spec.noise > 0.0) {
        j1 = jitter(rng);
        j2 = jitter(rng);
        j3 = jitter(rng);
        j4 = jitter(rng);
      }

      if (top.z <= 0.1 || bottom.z <= 0.1 || centroid.z <= 0.1) {
        gt.visible = false;
        pf.gt.objects.push_back(gt);
        continue;
      }

      const double y_top = cam.f_px * top.y / top.z + cam.cy;
      const double y_bot = cam.f_px * bottom.y / bottom.z + cam.cy;
      const double w_px = cam.f_px * (spec.H * spec.aspect) / centroid.z;
      const double x_c = cam.f_px * centroid.x / centroid.z + cam.cx;

      if (!(y_bot > y_top) || !(w_px > 0.0)) {
        gt.visible = false;
        pf.gt.objects.push_back(gt);
        continue;
      }

      gt.box = BBox{x_c - 0.5 * w_px, y_top, w_px, y_bot - y_top, 1.0};
      gt.visible = gt.box.right() > 0.0 && gt.box.left < cam.width && gt.box.bottom() > 0.0 &&
                   gt.box.top < cam.height;
      pf.gt.objects.push_back(gt);
      if (!gt.visible) continue;

      BBox det = gt.box;
      det.conf = conf;
      if (spec.noise > 0.0) {
        const double l = det.left + j1;
        const double t = det.top + j2;
        const double r = det.right() + j3;
        const double b = det.bottom() + j4;
        det.left = l;
        det.top = t;
        det.w = std::max(r - l, 1.0);
        det.h = std::max(b - t, 1.0);
      }
      pf.detections.push_back(det);
      pf.det_object_ids.push_back(obj.id);
    }
    frames.push_back(std::move(pf));
  }
  return frames;
}

/// Ground-plane of the generated scene in camera coordinates: n·p = cam_height
/// with n = (0, cos theta, sin theta).
inline Plane scene_ground_plane(const SceneSpec& spec) {
  Plane p;
  p.n = Eigen::Vector3d(0.0, std::cos(spec.theta_star), std::sin(spec.theta_star));
  p.d = spec.camera_height();
  return p;
}

} // namespace camot::synth
