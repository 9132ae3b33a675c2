#pragma once

#include <stdexcept>
#include <string>

namespace camot {

/// Base class for all camot errors.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller passed a value that violates a precondition (NaN pixel, bad config, ...).
class invalid_input_error : public error {
public:
  using error::error;
};

/// A detection cannot be lifted to 3D (zero-height box, horizon-grazing ray, ...).
class degenerate_geometry_error : public error {
public:
  using error::error;
};

/// Fewer than three usable points/boxes where a plane fit is required.
class insufficient_points_error : public error {
public:
  using error::error;
};

/// Plane fit failed (collinear points, plane parallel to the principal axis).
class degenerate_fit_error : public error {
public:
  using error::error;
};

/// Linear-algebra breakdown (non-PSD covariance and the like).
class numerical_failure_error : public error {
public:
  using error::error;
};

/// Malformed file content; message names the offending line.
class parse_error : public error {
public:
  using error::error;
};

} // namespace camot
