#pragma once

#include <cmath>

namespace poleloc {

/// 3D point in meters. Sensor frame: x forward, y left, z up.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

/// 2D point in meters (map plane).
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Circle in the map plane: pole model.
struct Circle {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
};

/// Wraps an angle to (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double r = std::fmod(a + M_PI, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - M_PI;
}

/// Shortest signed difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

/// 2D robot pose in the world frame; theta normalized to (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Point given in the pose's frame, expressed in the world frame.
inline Point2 transform_to_world(const Pose2D& pose, const Point2& p) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y};
}

/// World-frame point expressed in the pose's frame.
inline Point2 transform_to_local(const Pose2D& pose, const Point2& p) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double dx = p.x - pose.x;
  const double dy = p.y - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

/// Composition a ∘ b: pose b expressed in a's frame, returned in world frame.
inline Pose2D compose(const Pose2D& a, const Pose2D& b) {
  const Point2 t = transform_to_world(a, {b.x, b.y});
  return {t.x, t.y, normalize_angle(a.theta + b.theta)};
}

/// Relative pose of `to` in the frame of `from` (inverse of compose).
inline Pose2D relative_pose(const Pose2D& from, const Pose2D& to) {
  const Point2 t = transform_to_local(from, {to.x, to.y});
  return {t.x, t.y, angle_diff(to.theta, from.theta)};
}

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace poleloc
