#include "poleloc/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poleloc {

namespace {
// Slack on the FOV bounds so points constructed exactly on the boundary
// (z = r sin(fov_up)) survive the asin/sqrt round-trip.
constexpr double kFovSlack = 1e-12;
}  // namespace

std::optional<PixelCoord> project_point(const Point3& p,
                                        const SensorConfig& cfg) {
  const double r = p.norm();
  if (!(r >= cfg.min_range && r <= cfg.max_range)) return std::nullopt;

  const double pitch = std::asin(std::clamp(p.z / r, -1.0, 1.0));
  if (pitch < -cfg.fov_down - kFovSlack || pitch > cfg.fov_up + kFovSlack)
    return std::nullopt;

  const double yaw = std::atan2(p.y, p.x);
  const double u_raw = 0.5 * (1.0 - yaw / M_PI) * cfg.width;
  const double v_raw = (1.0 - (pitch + cfg.fov_down) / cfg.fov()) * cfg.height;

  PixelCoord px;
  px.u = std::clamp(static_cast<int>(std::floor(u_raw)), 0, cfg.width - 1);
  px.v = std::clamp(static_cast<int>(std::floor(v_raw)), 0, cfg.height - 1);
  return px;
}

namespace {
// Order-free tie-break for equal-range collisions in one pixel.
bool lex_less(const Point3& a, const Point3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}
}  // namespace

RangeImage project_scan(std::span<const Point3> points,
                        const SensorConfig& cfg) {
  RangeImage img(cfg.height, cfg.width);
  for (const Point3& p : points) {
    if (!p.finite()) continue;
    const auto px = project_point(p, cfg);
    if (!px) continue;
    const double r = p.norm();
    const double stored = img.range(px->u, px->v);
    if (stored < 0.0 || r < stored ||
        (r == stored && lex_less(p, img.point(px->u, px->v)))) {
      img.set(px->u, px->v, p, r);
    }
  }
  return img;
}

std::optional<std::pair<Point3, double>> pixel_point(const RangeImage& img,
                                                     int u, int v) {
  if (!img.in_bounds(u, v))
    throw std::out_of_range("pixel_point: index (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") outside " +
                            std::to_string(img.width()) + "x" +
                            std::to_string(img.height()) + " image");
  if (!img.valid(u, v)) return std::nullopt;
  return std::make_pair(img.point(u, v), img.range(u, v));
}

}  // namespace poleloc
