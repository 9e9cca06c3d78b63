#include "poleloc/mcl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace poleloc {

OdometryDelta OdometryDelta::from_poses(const Pose2D& from, const Pose2D& to) {
  OdometryDelta d;
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  d.trans = std::hypot(dx, dy);
  // Pure rotations keep rot1 at zero so the decomposition stays stable.
  d.rot1 = d.trans < 1e-12 ? 0.0
                           : angle_diff(std::atan2(dy, dx), from.theta);
  d.rot2 = angle_diff(angle_diff(to.theta, from.theta), d.rot1);
  return d;
}

Pose2D OdometryDelta::apply(const Pose2D& pose) const {
  const double heading = pose.theta + rot1;
  return {pose.x + trans * std::cos(heading),
          pose.y + trans * std::sin(heading),
          normalize_angle(pose.theta + rot1 + rot2)};
}

PoleMapIndex::PoleMapIndex(const PoleMap& map) {
  std::vector<Point2> centers;
  centers.reserve(map.poles.size());
  for (const MapPole& p : map.poles) centers.push_back({p.x, p.y});
  tree_ = KdTree2D(std::move(centers));
}

std::optional<double> PoleMapIndex::nearest_distance(double x, double y,
                                                     double max_dist) const {
  const auto hit = tree_.nearest({x, y}, max_dist);
  if (!hit) return std::nullopt;
  return std::sqrt(hit->dist_sq);
}

std::vector<Particle> init_particles(const Pose2D& center, int n,
                                     double pos_radius, double yaw_halfwidth,
                                     Rng& rng) {
  if (n < 1) throw std::invalid_argument("init_particles: n must be >= 1");
  std::vector<Particle> particles(static_cast<std::size_t>(n));
  const double w0 = 1.0 / n;
  for (Particle& p : particles) {
    // Uniform over the disk: radius ∝ sqrt(U).
    const double r = pos_radius * std::sqrt(rng.uniform01());
    const double phi = rng.uniform(-M_PI, M_PI);
    p.pose.x = center.x + r * std::cos(phi);
    p.pose.y = center.y + r * std::sin(phi);
    p.pose.theta = normalize_angle(
        center.theta + rng.uniform(-yaw_halfwidth, yaw_halfwidth));
    p.weight = w0;
  }
  return particles;
}

void motion_update(std::vector<Particle>& particles,
                   const OdometryDelta& delta, const MotionNoise& noise,
                   Rng& rng) {
  const double var_rot1 = noise.alpha1 * delta.rot1 * delta.rot1 +
                          noise.alpha2 * delta.trans * delta.trans;
  const double var_trans =
      noise.alpha3 * delta.trans * delta.trans +
      noise.alpha4 * (delta.rot1 * delta.rot1 + delta.rot2 * delta.rot2);
  const double var_rot2 = noise.alpha1 * delta.rot2 * delta.rot2 +
                          noise.alpha2 * delta.trans * delta.trans;
  const double sd_rot1 = std::sqrt(var_rot1);
  const double sd_trans = std::sqrt(var_trans);
  const double sd_rot2 = std::sqrt(var_rot2);

  for (Particle& p : particles) {
    OdometryDelta noisy;
    noisy.rot1 = delta.rot1 + sd_rot1 * rng.gaussian();
    noisy.trans = delta.trans + sd_trans * rng.gaussian();
    noisy.rot2 = delta.rot2 + sd_rot2 * rng.gaussian();
    p.pose = noisy.apply(p.pose);
  }
}

double observation_likelihood(std::span<const PoleDetection> detections,
                              const PoleMapIndex& map, const Pose2D& pose,
                              const ObservationModelParams& params) {
  double likelihood = 1.0;
  const double inv_two_sigma_sq = 0.5 / (params.sigma_d * params.sigma_d);
  for (const PoleDetection& det : detections) {
    const Point2 world = transform_to_world(pose, {det.x, det.y});
    const auto d =
        map.nearest_distance(world.x, world.y, params.max_match_dist);
    if (d)
      likelihood *= std::exp(-(*d) * (*d) * inv_two_sigma_sq);
    else
      likelihood *= params.no_match_penalty;
  }
  return likelihood;
}

WeightUpdateStatus weight_update(std::vector<Particle>& particles,
                                 std::span<const PoleDetection> detections,
                                 const PoleMapIndex& map,
                                 const ObservationModelParams& params) {
  if (particles.empty())
    throw std::invalid_argument("weight_update: empty particle set");

  double total = 0.0;
  for (Particle& p : particles) {
    p.weight *= observation_likelihood(detections, map, p.pose, params);
    total += p.weight;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    const double w0 = 1.0 / static_cast<double>(particles.size());
    for (Particle& p : particles) p.weight = w0;
    return WeightUpdateStatus::kStarved;
  }
  for (Particle& p : particles) p.weight /= total;
  return WeightUpdateStatus::kOk;
}

double effective_particle_fraction(std::span<const Particle> particles) {
  double sum_sq = 0.0;
  for (const Particle& p : particles) sum_sq += p.weight * p.weight;
  if (sum_sq <= 0.0) return 1.0;
  return 1.0 / sum_sq / static_cast<double>(particles.size());
}

void resample(std::vector<Particle>& particles, Rng& rng) {
  const std::size_t n = particles.size();
  if (n == 0) return;

  std::vector<Particle> out;
  out.reserve(n);
  const double step = 1.0 / static_cast<double>(n);
  const double start = rng.uniform01() * step;
  double cumulative = particles[0].weight;
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double target = start + static_cast<double>(m) * step;
    while (target > cumulative && i + 1 < n) {
      ++i;
      cumulative += particles[i].weight;
    }
    out.push_back({particles[i].pose, step});
  }
  particles = std::move(out);
}

Pose2D pose_estimate(std::span<const Particle> particles,
                     double top_fraction) {
  if (particles.empty())
    throw std::invalid_argument("pose_estimate: empty particle set");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0))
    throw std::invalid_argument("pose_estimate: top_fraction out of (0,1]");

  const std::size_t n = particles.size();
  const std::size_t k = std::min(
      n, static_cast<std::size_t>(
             std::ceil(top_fraction * static_cast<double>(n))));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (particles[a].weight != particles[b].weight)
                        return particles[a].weight > particles[b].weight;
                      return a < b;
                    });

  double sum_w = 0.0, sx = 0.0, sy = 0.0, ssin = 0.0, scos = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const Particle& p = particles[order[j]];
    sum_w += p.weight;
    sx += p.weight * p.pose.x;
    sy += p.weight * p.pose.y;
    ssin += p.weight * std::sin(p.pose.theta);
    scos += p.weight * std::cos(p.pose.theta);
  }
  if (sum_w <= 0.0) {
    // All-zero weights: fall back to the unweighted mean of the selection.
    sx = sy = ssin = scos = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const Particle& p = particles[order[j]];
      sx += p.pose.x;
      sy += p.pose.y;
      ssin += std::sin(p.pose.theta);
      scos += std::cos(p.pose.theta);
    }
    sum_w = static_cast<double>(k);
  }
  return {sx / sum_w, sy / sum_w, std::atan2(ssin, scos)};
}

MclFilter::MclFilter(PoleMap map, const MclParams& params,
                     const ExtractorParams& extractor, std::uint64_t seed)
    : map_(std::move(map)), index_(map_), params_(params),
      extractor_(extractor), rng_(seed) {}

void MclFilter::initialize(const Pose2D& center) {
  particles_ = init_particles(center, params_.num_particles,
                              params_.init_pos_radius,
                              params_.init_yaw_halfwidth, rng_);
}

MclFilter::StepResult MclFilter::step(const OdometryDelta& odometry,
                                      const RangeImage& scan) {
  if (particles_.empty())
    throw std::logic_error("MclFilter::step before initialize");

  motion_update(particles_, odometry, params_.motion, rng_);
  const auto detections = extract_poles(scan, extractor_);
  const auto status =
      weight_update(particles_, detections, index_, params_.observation);

  StepResult result;
  result.starved = status == WeightUpdateStatus::kStarved;
  result.num_detections = static_cast<int>(detections.size());
  // Estimate ranks by the post-update weights, before any resampling.
  result.estimate = pose_estimate(particles_, params_.top_fraction);
  result.ess_fraction = effective_particle_fraction(particles_);
  if (result.ess_fraction < params_.resample_threshold) {
    resample(particles_, rng_);
    result.resampled = true;
  }
  return result;
}

}  // namespace poleloc
