#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poleloc/geometry.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/mcl.hpp"
#include "poleloc/pole_map.hpp"
#include "poleloc/random.hpp"
#include "poleloc/sensor.hpp"

namespace poleloc {

/// Vertical cylinder standing on the ground plane.
struct CylinderSpec {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.1;
  double height = 4.0;
};

/// Vertical rectangle over a ground segment.
struct WallSpec {
  double x1 = 0.0, y1 = 0.0;
  double x2 = 1.0, y2 = 0.0;
  double height = 2.0;
};

/// Cylinder moving piecewise-linearly between timed waypoints.
struct DynamicCylinder {
  struct Waypoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
  };
  std::vector<Waypoint> path;
  double radius = 0.3;
  double height = 1.7;

  Point2 position_at(double t) const;
};

/// Ground-truth world: static poles, walls, ground plane z = 0, and moving
/// cylinders. The oracle behind every desk-scale test.
struct WorldSpec {
  std::vector<CylinderSpec> poles;
  std::vector<WallSpec> walls;
  std::vector<DynamicCylinder> dynamics;
  std::uint64_t seed = 0;
};

/// Timed waypoints the sensor drives through; scans are taken every
/// scan_period seconds at the interpolated pose.
struct TrajectorySpec {
  struct Waypoint {
    double t = 0.0;
    Pose2D pose;
  };
  std::vector<Waypoint> waypoints;
  double scan_period = 0.1;
  double mount_height = 1.5;

  Pose2D pose_at(double t) const;
  double t_begin() const { return waypoints.front().t; }
  double t_end() const { return waypoints.back().t; }
};

enum class Surface { kGround, kPole, kWall, kDynamic };

/// One ray return: the hit point in the sensor frame, its range, which
/// surface produced it, and the pixel the ray belongs to.
struct RayHit {
  Point3 point;
  double range = 0.0;
  Surface surface = Surface::kGround;
  int object_index = -1;
  int u = 0;
  int v = 0;
};

/// Casts one ray per range-image pixel (directions exactly on the pixel-
/// center grid of the spherical mapping, so simulator rays and projector
/// pixels align one to one). Returns the nearest hit per ray within
/// [min_range, max_range], with Gaussian range noise applied.
std::vector<RayHit> raycast_scan_hits(const WorldSpec& world,
                                      const Pose2D& pose, double t,
                                      double mount_height,
                                      const SensorConfig& cfg,
                                      double range_noise_sigma, Rng& rng);

/// Same, points only (sensor frame).
std::vector<Point3> raycast_scan(const WorldSpec& world, const Pose2D& pose,
                                 double t, double mount_height,
                                 const SensorConfig& cfg,
                                 double range_noise_sigma, Rng& rng);

/// A generated drive: ground-truth posed scans, their raw point clouds, and
/// the noisy odometry chain (odometry[i] moves scan i to scan i+1).
struct Session {
  std::vector<PosedScan> posed;
  std::vector<std::vector<Point3>> scans;
  std::vector<OdometryDelta> odometry;
  double mount_height = 1.5;
};

/// Deterministic under `seed` regardless of `threads`; per-scan noise comes
/// from derived streams so scans can be generated in any order.
Session generate_session(const WorldSpec& world, const TrajectorySpec& traj,
                         const SensorConfig& cfg,
                         const MotionNoise& odom_noise,
                         double range_noise_sigma, std::uint64_t seed,
                         int threads = 1);

/// Static poles exported as a ground-truth map (count = truth sentinel).
PoleMap world_truth_poles(const WorldSpec& world);

/// Keyword-record text formats for the specs (`pole`, `wall`, `dyncyl`,
/// `waypoint`, ... one record per line, # comments).
std::string serialize_world_spec(const WorldSpec& world);
WorldSpec parse_world_spec(const std::string& text);
void save_world_spec(const WorldSpec& world, const std::filesystem::path& path);
WorldSpec load_world_spec(const std::filesystem::path& path);

std::string serialize_trajectory_spec(const TrajectorySpec& traj);
TrajectorySpec parse_trajectory_spec(const std::string& text);
void save_trajectory_spec(const TrajectorySpec& traj,
                          const std::filesystem::path& path);
TrajectorySpec load_trajectory_spec(const std::filesystem::path& path);

}  // namespace poleloc
