#include "poleloc/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "poleloc/textio.hpp"

namespace poleloc {

Point2 DynamicCylinder::position_at(double t) const {
  if (path.empty()) return {0.0, 0.0};
  if (t <= path.front().t) return {path.front().x, path.front().y};
  if (t >= path.back().t) return {path.back().x, path.back().y};
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (t <= path[i].t) {
      const auto& a = path[i - 1];
      const auto& b = path[i];
      const double span = b.t - a.t;
      const double f = span > 0.0 ? (t - a.t) / span : 0.0;
      return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
    }
  }
  return {path.back().x, path.back().y};
}

Pose2D TrajectorySpec::pose_at(double t) const {
  if (waypoints.empty()) return {};
  if (t <= waypoints.front().t) return waypoints.front().pose;
  if (t >= waypoints.back().t) return waypoints.back().pose;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (t <= waypoints[i].t) {
      const auto& a = waypoints[i - 1];
      const auto& b = waypoints[i];
      const double span = b.t - a.t;
      const double f = span > 0.0 ? (t - a.t) / span : 0.0;
      Pose2D p;
      p.x = a.pose.x + f * (b.pose.x - a.pose.x);
      p.y = a.pose.y + f * (b.pose.y - a.pose.y);
      p.theta = normalize_angle(
          a.pose.theta + f * angle_diff(b.pose.theta, a.pose.theta));
      return p;
    }
  }
  return waypoints.back().pose;
}

namespace {

constexpr double kRayEps = 1e-9;

struct Ray {
  double ox, oy, oz;
  double dx, dy, dz;  // unit
};

/// Nearest intersection parameter with a finite vertical cylinder whose base
/// sits on the ground. The smaller quadratic root wins if its height is in
/// range, otherwise the larger one is tried.
double hit_cylinder(const Ray& ray, double cx, double cy, double radius,
                    double height) {
  const double ox = ray.ox - cx;
  const double oy = ray.oy - cy;
  const double a = ray.dx * ray.dx + ray.dy * ray.dy;
  const double b = 2.0 * (ox * ray.dx + oy * ray.dy);
  const double c = ox * ox + oy * oy - radius * radius;
  if (a <= 0.0) return -1.0;  // vertical ray
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return -1.0;
  const double sq = std::sqrt(disc);
  for (const double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t <= kRayEps) continue;
    const double z = ray.oz + t * ray.dz;
    if (z >= 0.0 && z <= height) return t;
  }
  return -1.0;
}

double hit_wall(const Ray& ray, const WallSpec& wall) {
  const double ex = wall.x2 - wall.x1;
  const double ey = wall.y2 - wall.y1;
  const double nx = -ey;
  const double ny = ex;
  const double denom = nx * ray.dx + ny * ray.dy;
  if (std::abs(denom) < 1e-15) return -1.0;
  const double t =
      (nx * (wall.x1 - ray.ox) + ny * (wall.y1 - ray.oy)) / denom;
  if (t <= kRayEps) return -1.0;
  const double hx = ray.ox + t * ray.dx;
  const double hy = ray.oy + t * ray.dy;
  const double hz = ray.oz + t * ray.dz;
  if (hz < 0.0 || hz > wall.height) return -1.0;
  const double len_sq = ex * ex + ey * ey;
  if (len_sq <= 0.0) return -1.0;
  const double s = ((hx - wall.x1) * ex + (hy - wall.y1) * ey) / len_sq;
  if (s < 0.0 || s > 1.0) return -1.0;
  return t;
}

double hit_ground(const Ray& ray) {
  if (ray.dz >= -1e-15) return -1.0;
  const double t = -ray.oz / ray.dz;
  return t > kRayEps ? t : -1.0;
}

}  // namespace

std::vector<RayHit> raycast_scan_hits(const WorldSpec& world,
                                      const Pose2D& pose, double t,
                                      double mount_height,
                                      const SensorConfig& cfg,
                                      double range_noise_sigma, Rng& rng) {
  std::vector<RayHit> hits;
  hits.reserve(static_cast<std::size_t>(cfg.width) * cfg.height / 4);

  std::vector<std::pair<Point2, const DynamicCylinder*>> dyn;
  dyn.reserve(world.dynamics.size());
  for (const auto& d : world.dynamics) dyn.emplace_back(d.position_at(t), &d);

  const double cos_theta = std::cos(pose.theta);
  const double sin_theta = std::sin(pose.theta);

  for (int v = 0; v < cfg.height; ++v) {
    // Pixel-center elevation of row v under the spherical mapping.
    const double pitch =
        cfg.fov() * (1.0 - (v + 0.5) / cfg.height) - cfg.fov_down;
    const double cp = std::cos(pitch);
    const double sp = std::sin(pitch);
    for (int u = 0; u < cfg.width; ++u) {
      // Pixel-center azimuth of column u, sensor frame.
      const double yaw = M_PI * (1.0 - 2.0 * (u + 0.5) / cfg.width);
      const double yaw_world = pose.theta + yaw;

      Ray ray;
      ray.ox = pose.x;
      ray.oy = pose.y;
      ray.oz = mount_height;
      ray.dx = cp * std::cos(yaw_world);
      ray.dy = cp * std::sin(yaw_world);
      ray.dz = sp;

      double best_t = std::numeric_limits<double>::infinity();
      Surface best_surface = Surface::kGround;
      int best_index = -1;

      for (std::size_t i = 0; i < world.poles.size(); ++i) {
        const auto& p = world.poles[i];
        const double tc = hit_cylinder(ray, p.x, p.y, p.radius, p.height);
        if (tc > 0.0 && tc < best_t) {
          best_t = tc;
          best_surface = Surface::kPole;
          best_index = static_cast<int>(i);
        }
      }
      for (std::size_t i = 0; i < world.walls.size(); ++i) {
        const double tw = hit_wall(ray, world.walls[i]);
        if (tw > 0.0 && tw < best_t) {
          best_t = tw;
          best_surface = Surface::kWall;
          best_index = static_cast<int>(i);
        }
      }
      for (std::size_t i = 0; i < dyn.size(); ++i) {
        const double td = hit_cylinder(ray, dyn[i].first.x, dyn[i].first.y,
                                       dyn[i].second->radius,
                                       dyn[i].second->height);
        if (td > 0.0 && td < best_t) {
          best_t = td;
          best_surface = Surface::kDynamic;
          best_index = static_cast<int>(i);
        }
      }
      {
        const double tg = hit_ground(ray);
        if (tg > 0.0 && tg < best_t) {
          best_t = tg;
          best_surface = Surface::kGround;
          best_index = -1;
        }
      }

      if (!std::isfinite(best_t)) continue;
      double range = best_t;
      if (range_noise_sigma > 0.0)
        range += range_noise_sigma * rng.gaussian();
      if (range < cfg.min_range || range > cfg.max_range) continue;

      // World-frame point along the (noisy) ray, then into the sensor frame.
      const double wx = ray.ox + range * ray.dx;
      const double wy = ray.oy + range * ray.dy;
      const double wz = ray.oz + range * ray.dz;
      const double lx = wx - pose.x;
      const double ly = wy - pose.y;

      RayHit hit;
      hit.point = {cos_theta * lx + sin_theta * ly,
                   -sin_theta * lx + cos_theta * ly, wz - mount_height};
      hit.range = range;
      hit.surface = best_surface;
      hit.object_index = best_index;
      hit.u = u;
      hit.v = v;
      hits.push_back(hit);
    }
  }
  return hits;
}

std::vector<Point3> raycast_scan(const WorldSpec& world, const Pose2D& pose,
                                 double t, double mount_height,
                                 const SensorConfig& cfg,
                                 double range_noise_sigma, Rng& rng) {
  const auto hits = raycast_scan_hits(world, pose, t, mount_height, cfg,
                                      range_noise_sigma, rng);
  std::vector<Point3> points;
  points.reserve(hits.size());
  for (const RayHit& h : hits) points.push_back(h.point);
  return points;
}

Session generate_session(const WorldSpec& world, const TrajectorySpec& traj,
                         const SensorConfig& cfg,
                         const MotionNoise& odom_noise,
                         double range_noise_sigma, std::uint64_t seed,
                         int threads) {
  if (traj.waypoints.empty())
    throw FormatError("generate_session: trajectory has no waypoints");

  Session session;
  session.mount_height = traj.mount_height;

  const double t0 = traj.t_begin();
  const double t1 = traj.t_end();
  const std::size_t n_scans =
      1 + static_cast<std::size_t>(
              std::floor((t1 - t0) / traj.scan_period + 1e-9));

  session.scans.resize(n_scans);
  for (std::size_t k = 0; k < n_scans; ++k) {
    const double t = t0 + static_cast<double>(k) * traj.scan_period;
    session.posed.push_back({t, traj.pose_at(t), k});
  }

  const auto cast_scan = [&](std::size_t k) {
    Rng scan_rng(Rng::derive_seed(seed, k));
    session.scans[k] =
        raycast_scan(world, session.posed[k].pose, session.posed[k].timestamp,
                     traj.mount_height, cfg, range_noise_sigma, scan_rng);
  };

  if (threads <= 1 || n_scans < 2) {
    for (std::size_t k = 0; k < n_scans; ++k) cast_scan(k);
  } else {
    const int pool = std::min<int>(threads, static_cast<int>(n_scans));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (int w = 0; w < pool; ++w)
      workers.emplace_back([&] {
        for (std::size_t k = next.fetch_add(1); k < n_scans;
             k = next.fetch_add(1))
          cast_scan(k);
      });
    for (auto& w : workers) w.join();
  }

  // Odometry: truth deltas perturbed by the motion-noise model, from a
  // dedicated stream.
  Rng odom_rng(Rng::derive_seed(seed, 0x6f646f6dULL << 16));
  for (std::size_t k = 0; k + 1 < session.posed.size(); ++k) {
    OdometryDelta d = OdometryDelta::from_poses(session.posed[k].pose,
                                                session.posed[k + 1].pose);
    const double var_rot1 = odom_noise.alpha1 * d.rot1 * d.rot1 +
                            odom_noise.alpha2 * d.trans * d.trans;
    const double var_trans =
        odom_noise.alpha3 * d.trans * d.trans +
        odom_noise.alpha4 * (d.rot1 * d.rot1 + d.rot2 * d.rot2);
    const double var_rot2 = odom_noise.alpha1 * d.rot2 * d.rot2 +
                            odom_noise.alpha2 * d.trans * d.trans;
    d.rot1 += std::sqrt(var_rot1) * odom_rng.gaussian();
    d.trans += std::sqrt(var_trans) * odom_rng.gaussian();
    d.rot2 += std::sqrt(var_rot2) * odom_rng.gaussian();
    session.odometry.push_back(d);
  }
  return session;
}

PoleMap world_truth_poles(const WorldSpec& world) {
  PoleMap map;
  map.metadata["format"] = "polemap.v1";
  map.metadata["source"] = "world_truth";
  for (const CylinderSpec& p : world.poles)
    map.poles.push_back({p.x, p.y, p.radius, PoleMap::kTruthCount});
  return map;
}

// --- spec text formats ------------------------------------------------

std::string serialize_world_spec(const WorldSpec& world) {
  std::ostringstream out;
  out << "# poleloc world v1\n";
  out << "seed " << world.seed << '\n';
  for (const auto& p : world.poles)
    out << "pole " << format_g9(p.x) << ' ' << format_g9(p.y) << ' '
        << format_g9(p.radius) << ' ' << format_g9(p.height) << '\n';
  for (const auto& w : world.walls)
    out << "wall " << format_g9(w.x1) << ' ' << format_g9(w.y1) << ' '
        << format_g9(w.x2) << ' ' << format_g9(w.y2) << ' '
        << format_g9(w.height) << '\n';
  for (const auto& d : world.dynamics) {
    out << "dyncyl " << format_g9(d.radius) << ' ' << format_g9(d.height);
    for (const auto& wp : d.path)
      out << ' ' << format_g9(wp.t) << ' ' << format_g9(wp.x) << ' '
          << format_g9(wp.y);
    out << '\n';
  }
  return out.str();
}

namespace {

double to_double(std::string_view tok, const char* ctx) {
  try {
    return std::stod(std::string(tok));
  } catch (const std::exception&) {
    throw FormatError(std::string(ctx) + ": bad number '" + std::string(tok) +
                      "'");
  }
}

}  // namespace

WorldSpec parse_world_spec(const std::string& text) {
  WorldSpec world;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    const std::string_view kind = tok[0];
    if (kind == "seed") {
      if (tok.size() != 2) throw FormatError("world spec: bad seed line");
      world.seed = static_cast<std::uint64_t>(
          std::stoull(std::string(tok[1])));
    } else if (kind == "pole") {
      if (tok.size() != 5)
        throw FormatError("world spec: pole needs x y radius height");
      world.poles.push_back({to_double(tok[1], "pole"),
                             to_double(tok[2], "pole"),
                             to_double(tok[3], "pole"),
                             to_double(tok[4], "pole")});
    } else if (kind == "wall") {
      if (tok.size() != 6)
        throw FormatError("world spec: wall needs x1 y1 x2 y2 height");
      world.walls.push_back({to_double(tok[1], "wall"),
                             to_double(tok[2], "wall"),
                             to_double(tok[3], "wall"),
                             to_double(tok[4], "wall"),
                             to_double(tok[5], "wall")});
    } else if (kind == "dyncyl") {
      if (tok.size() < 6 || (tok.size() - 3) % 3 != 0)
        throw FormatError(
            "world spec: dyncyl needs radius height then t x y triples");
      DynamicCylinder d;
      d.radius = to_double(tok[1], "dyncyl");
      d.height = to_double(tok[2], "dyncyl");
      for (std::size_t i = 3; i + 3 <= tok.size(); i += 3)
        d.path.push_back({to_double(tok[i], "dyncyl"),
                          to_double(tok[i + 1], "dyncyl"),
                          to_double(tok[i + 2], "dyncyl")});
      world.dynamics.push_back(std::move(d));
    } else {
      throw FormatError("world spec: unknown record '" + std::string(kind) +
                        "'");
    }
  }
  return world;
}

void save_world_spec(const WorldSpec& world,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << serialize_world_spec(world);
}

WorldSpec load_world_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open world spec: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_world_spec(buf.str());
}

std::string serialize_trajectory_spec(const TrajectorySpec& traj) {
  std::ostringstream out;
  out << "# poleloc trajectory v1\n";
  out << "scan_period " << format_g9(traj.scan_period) << '\n';
  out << "mount_height " << format_g9(traj.mount_height) << '\n';
  for (const auto& wp : traj.waypoints)
    out << "waypoint " << format_g9(wp.t) << ' ' << format_g9(wp.pose.x)
        << ' ' << format_g9(wp.pose.y) << ' ' << format_g9(wp.pose.theta)
        << '\n';
  return out.str();
}

TrajectorySpec parse_trajectory_spec(const std::string& text) {
  TrajectorySpec traj;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    const std::string_view kind = tok[0];
    if (kind == "scan_period") {
      if (tok.size() != 2)
        throw FormatError("trajectory spec: bad scan_period line");
      traj.scan_period = to_double(tok[1], "scan_period");
    } else if (kind == "mount_height") {
      if (tok.size() != 2)
        throw FormatError("trajectory spec: bad mount_height line");
      traj.mount_height = to_double(tok[1], "mount_height");
    } else if (kind == "waypoint") {
      if (tok.size() != 5)
        throw FormatError("trajectory spec: waypoint needs t x y theta");
      TrajectorySpec::Waypoint wp;
      wp.t = to_double(tok[1], "waypoint");
      wp.pose.x = to_double(tok[2], "waypoint");
      wp.pose.y = to_double(tok[3], "waypoint");
      wp.pose.theta = to_double(tok[4], "waypoint");
      traj.waypoints.push_back(wp);
    } else {
      throw FormatError("trajectory spec: unknown record '" +
                        std::string(kind) + "'");
    }
  }
  if (!traj.waypoints.empty()) {
    for (std::size_t i = 1; i < traj.waypoints.size(); ++i)
      if (traj.waypoints[i].t <= traj.waypoints[i - 1].t)
        throw FormatError("trajectory spec: timestamps must increase");
  }
  return traj;
}

void save_trajectory_spec(const TrajectorySpec& traj,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << serialize_trajectory_spec(traj);
}

TrajectorySpec load_trajectory_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open trajectory spec: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trajectory_spec(buf.str());
}

}  // namespace poleloc
