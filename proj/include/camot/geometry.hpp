#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "camot/errors.hpp"

namespace camot {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Pinhole camera: focal length and principal point in pixels.
/// Camera frame: X right, Y down (matching image rows), Z forward along the
/// principal axis. Image origin is the top-left corner.
struct CameraIntrinsics {
  double f_px = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (!(f_px > 0.0) || width <= 0 || height <= 0 || !std::isfinite(cx) || !std::isfinite(cy)) {
      throw invalid_input_error("CameraIntrinsics: f_px and image size must be positive");
    }
  }

  /// 35 mm-film equivalence: f_px = f_mm * width_px / 36.
  static CameraIntrinsics from_focal_mm(double f_mm, int width, int height) {
    CameraIntrinsics cam;
    cam.f_px = f_mm * static_cast<double>(width) / 36.0;
    cam.cx = 0.5 * static_cast<double>(width);
    cam.cy = 0.5 * static_cast<double>(height);
    cam.width = width;
    cam.height = height;
    cam.validate();
    return cam;
  }
};

/// Axis-aligned detection box, pixel units, confidence in [0, 1].
struct BBox {
  double left = 0.0;
  double top = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 1.0;

  double right() const { return left + w; }
  double bottom() const { return top + h; }
  double center_x() const { return left + 0.5 * w; }
  double center_y() const { return top + 0.5 * h; }
  double area() const { return w * h; }

  void validate() const {
    if (!(w > 0.0) || !(h > 0.0) || !(conf >= 0.0 && conf <= 1.0) ||
        !std::isfinite(left) || !std::isfinite(top)) {
      throw invalid_input_error("BBox: needs positive size and conf in [0,1]");
    }
  }

  /// True when any side lies strictly outside the image.
  bool clips_frame(const CameraIntrinsics& cam) const {
    return left < 0.0 || top < 0.0 || right() > static_cast<double>(cam.width) ||
           bottom() > static_cast<double>(cam.height);
  }
};

/// Back-projected ray (a, b, 1) through the optical center, z fixed at 1.
struct Ray {
  double a = 0.0;
  double b = 0.0;

  Eigen::Vector3d vec() const { return {a, b, 1.0}; }
  double norm() const { return std::sqrt(a * a + b * b + 1.0); }
};

/// 3D point in the camera frame, meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static Point3 from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Ground plane in Hesse form n·p = d with the unit normal oriented so that
/// n·ẑ >= 0. The principal-axis intersection (0, 0, z_plane) is only defined
/// when the plane is not parallel to the axis.
struct Plane {
  Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
  double d = 0.0;

  bool has_axis_point() const { return std::abs(n.z()) >= 1e-9; }

  /// Intersection with the principal axis, (0, 0, z_plane).
  Point3 p0() const {
    if (!has_axis_point()) {
      throw degenerate_fit_error("Plane: parallel to the principal axis, no axis intersection");
    }
    return {0.0, 0.0, d / n.z()};
  }
};

enum class LiftMode {
  paper, // slant distances and centroid straight from the closed-form half-angle expressions
  exact  // law-of-sines slant distances in the side view, centroid as the top/bottom midpoint
};

/// One detection lifted to camera-frame 3D at an assumed elevation angle.
struct LiftedObject {
  Ray r_top;
  Ray r_bottom;
  double alpha = 0.0;    // signed angle axis -> r_top in the vertical plane, positive below axis
  double gamma = 0.0;    // angular extent between the two rays in the vertical plane
  double d_top = 0.0;    // slant distance to the top point, meters
  double d_bottom = 0.0; // slant distance to the bottom point, meters
  Point3 top;
  Point3 bottom;
  Point3 centroid;
  Eigen::Vector3d v = Eigen::Vector3d::Zero(); // top - bottom
};

/// Maps a pixel to the camera-frame ray ((px-cx)/f, (py-cy)/f, 1).
/// Pixels may lie outside the frame: extrapolated boxes are fair game.
inline Ray back_project(const CameraIntrinsics& cam, double px, double py) {
  if (!std::isfinite(px) || !std::isfinite(py)) {
    throw invalid_input_error("back_project: non-finite pixel");
  }
  return {(px - cam.cx) / cam.f_px, (py - cam.cy) / cam.f_px};
}

/// Lifts a detection box to a 3D object of assumed height H under the
/// flat-ground model at camera elevation theta.
///
/// Both modes share the side-view angles: alpha is the signed angle from the
/// principal axis to the top-middle ray (positive below the axis, Y-down
/// frame) and gamma the vertical angular extent of the box. `paper` evaluates
/// the closed-form slant distances with the half-angle approximation and the
/// cos-weighted centroid; `exact` solves the side-view triangles with the law
/// of sines and reconstructs top/bottom as unit-ray * slant-distance, so a
/// noiseless synthetic box round-trips to the generating cylinder.
inline LiftedObject lift_detection(const BBox& box, double theta, const CameraIntrinsics& cam,
                                   double H, LiftMode mode) {
  box.validate();
  if (!(H > 0.0) || !std::isfinite(theta) || theta < 0.0 || theta >= kPi / 2.0) {
    throw invalid_input_error("lift_detection: need H > 0 and theta in [0, pi/2)");
  }

  LiftedObject out;
  const double xc = box.center_x();
  out.r_top = back_project(cam, xc, box.top);
  out.r_bottom = back_project(cam, xc, box.bottom());

  out.alpha = std::atan(out.r_top.b);
  out.gamma = std::atan(out.r_bottom.b) - std::atan(out.r_top.b);

  const double half = std::sin(0.5 * out.gamma);
  const double aa = theta + out.alpha;           // top-ray depression below world horizontal
  const double ab = aa + out.gamma;              // bottom-ray depression below world horizontal
  if (half < 1e-9 || std::abs(std::cos(ab)) < 1e-9) {
    throw degenerate_geometry_error("lift_detection: degenerate box/ray configuration");
  }

  const Eigen::Vector3d rt = out.r_top.vec();
  const Eigen::Vector3d rb = out.r_bottom.vec();
  Eigen::Vector3d top, bottom;

  if (mode == LiftMode::paper) {
    out.d_top = H * std::cos(aa + 0.5 * out.gamma) / (2.0 * half);
    out.d_bottom =
        2.0 * out.d_top * half * std::sin(aa + 0.5 * out.gamma) / std::cos(ab) + out.d_top;
    if (!(out.d_top > 0.0) || !(out.d_bottom > 0.0)) {
      throw degenerate_geometry_error("lift_detection: non-positive slant distance");
    }
    top = rt * (out.d_top * std::cos(out.alpha));
    bottom = rb * (out.d_bottom * std::cos(out.alpha + out.gamma));
  } else {
    // Side-view triangle of the vertical object: exact distances within the
    // vertical plane, then scaled onto the full 3D rays of the box column.
    const double d2_top = H * std::cos(ab) / std::sin(out.gamma);
    const double d2_bottom = d2_top * std::cos(aa) / std::cos(ab);
    if (!(d2_top > 0.0) || !(d2_bottom > 0.0)) {
      throw degenerate_geometry_error("lift_detection: non-positive slant distance");
    }
    const double z_top = d2_top / std::hypot(1.0, out.r_top.b);
    const double z_bottom = d2_bottom / std::hypot(1.0, out.r_bottom.b);
    top = rt * z_top;
    bottom = rb * z_bottom;
    out.d_top = top.norm();
    out.d_bottom = bottom.norm();
  }

  out.top = Point3::from(top);
  out.bottom = Point3::from(bottom);
  out.centroid = Point3::from(0.5 * (top + bottom));
  out.v = top - bottom;
  if (!(out.centroid.z > 0.0)) {
    throw degenerate_geometry_error("lift_detection: centroid behind the camera");
  }
  return out;
}

/// Total-least-squares plane through >= 3 points: the normal is the smallest
/// principal direction of the centered cloud, re-oriented so n·ẑ >= 0.
inline Plane fit_plane(const std::vector<Point3>& points) {
  if (points.size() < 3) {
    throw insufficient_points_error("fit_plane: need at least 3 points");
  }
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : points) c += p.vec();
  c /= static_cast<double>(points.size());

  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d q = p.vec() - c;
    m += q * q.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  if (es.info() != Eigen::Success) {
    throw numerical_failure_error("fit_plane: eigen decomposition failed");
  }
  const Eigen::Vector3d evals = es.eigenvalues(); // ascending
  // Collinear (or coincident) points span no plane: the two smallest
  // principal variances both vanish.
  if (evals(1) <= std::max(evals(2) * 1e-12, 1e-18)) {
    throw degenerate_fit_error("fit_plane: points are collinear");
  }

  Plane plane;
  plane.n = es.eigenvectors().col(0).normalized();
  if (plane.n.z() < 0.0) plane.n = -plane.n;
  plane.d = plane.n.dot(c);
  return plane;
}

/// Elevation angle of a camera whose ground plane has normal n:
/// pi/2 - arccos(clamp(n·ẑ, 0, 1)). 0 for a horizontal view, pi/2 top-down.
inline double plane_angle(const Plane& plane) {
  const double nz = std::clamp(plane.n.z(), 0.0, 1.0);
  return kPi / 2.0 - std::acos(nz);
}

/// Unsigned perpendicular distance from p to the plane.
inline double point_plane_distance(const Point3& p, const Plane& plane) {
  return std::abs(plane.n.dot(p.vec()) - plane.d);
}

} // namespace camot
