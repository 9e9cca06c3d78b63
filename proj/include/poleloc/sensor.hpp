#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "poleloc/geometry.hpp"

namespace poleloc {

/// Spherical projection model of a rotating 3D LiDAR.
///
/// fov_up / fov_down are the magnitudes (radians, both >= 0) of the vertical
/// field of view above and below the horizon.
struct SensorConfig {
  int width = 1024;
  int height = 64;
  double fov_up = deg_to_rad(22.5);
  double fov_down = deg_to_rad(22.5);
  double min_range = 0.5;
  double max_range = 120.0;

  double fov() const { return fov_up + fov_down; }

  bool valid() const {
    return width >= 1 && height >= 1 && fov_up >= 0.0 && fov_down >= 0.0 &&
           fov() > 0.0 && min_range >= 0.0 && min_range < max_range;
  }
};

struct PixelCoord {
  int u = 0;  // column, azimuth axis (wraps)
  int v = 0;  // row, 0 = top of FOV
};

/// Image coordinates of a point under the spherical mapping, or nullopt if
/// the point is outside the vertical FOV or the [min_range, max_range] window.
///
///   u = 1/2 (1 - atan2(y,x)/pi) w      (seam at the -x axis, maps to u = 0)
///   v = (1 - (asin(z/r) + fov_down)/fov) h
///
/// both floored, then clamped to the valid index range.
std::optional<PixelCoord> project_point(const Point3& p,
                                        const SensorConfig& cfg);

/// Range image: per-pixel range plus the originating 3D point.
/// Invalid (empty) pixels carry the negative sentinel range and no
/// coordinates. Immutable after construction; safe to share across threads.
class RangeImage {
 public:
  static constexpr double kInvalidRange = -1.0;

  RangeImage(int height, int width)
      : height_(height), width_(width),
        pixels_(static_cast<std::size_t>(height) * width) {}

  int height() const { return height_; }
  int width() const { return width_; }

  bool in_bounds(int u, int v) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }
  bool valid(int u, int v) const { return at(u, v).range >= 0.0; }
  double range(int u, int v) const { return at(u, v).range; }
  Point3 point(int u, int v) const {
    const Pixel& px = at(u, v);
    return {px.x, px.y, px.z};
  }

  void set(int u, int v, const Point3& p, double range) {
    Pixel& px = at(u, v);
    px.range = range;
    px.x = p.x;
    px.y = p.y;
    px.z = p.z;
  }

 private:
  struct Pixel {
    double range = kInvalidRange;
    double x = 0.0, y = 0.0, z = 0.0;
  };

  const Pixel& at(int u, int v) const {
    return pixels_[static_cast<std::size_t>(v) * width_ + u];
  }
  Pixel& at(int u, int v) {
    return pixels_[static_cast<std::size_t>(v) * width_ + u];
  }

  int height_;
  int width_;
  std::vector<Pixel> pixels_;
};

/// Projects a scan into a range image. When several points land in the same
/// pixel the closest one wins. Out-of-FOV and out-of-range points are dropped.
RangeImage project_scan(std::span<const Point3> points, const SensorConfig& cfg);

/// Stored point and range at (u, v), or nullopt for an empty pixel.
/// Throws std::out_of_range for indices outside the image.
std::optional<std::pair<Point3, double>> pixel_point(const RangeImage& img,
                                                     int u, int v);

}  // namespace poleloc
