#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "poleloc/extractor.hpp"
#include "poleloc/geometry.hpp"
#include "poleloc/kdtree.hpp"
#include "poleloc/pole_map.hpp"
#include "poleloc/random.hpp"
#include "poleloc/sensor.hpp"

namespace poleloc {

struct Particle {
  Pose2D pose;
  double weight = 0.0;
};

/// Relative motion between two filter steps in the standard odometry
/// decomposition: turn by rot1, drive trans, turn by rot2.
struct OdometryDelta {
  double rot1 = 0.0;
  double trans = 0.0;
  double rot2 = 0.0;

  static OdometryDelta from_poses(const Pose2D& from, const Pose2D& to);
  Pose2D apply(const Pose2D& pose) const;
};

/// Noise coefficients of the odometry motion model. The perturbation of each
/// delta component is zero-mean Gaussian with variance
///   rot1:  a1·rot1² + a2·trans²
///   trans: a3·trans² + a4·(rot1² + rot2²)
///   rot2:  a1·rot2² + a2·trans²
struct MotionNoise {
  double alpha1 = 0.1;
  double alpha2 = 0.1;
  double alpha3 = 0.05;
  double alpha4 = 0.05;
};

struct ObservationModelParams {
  double sigma_d = 0.5;          // stddev of the match-distance Gaussian (m)
  double max_match_dist = 1.0;   // association bound (m)
  double no_match_penalty = 0.8; // factor for detections without a match
};

/// Read-only nearest-neighbor index over the map poles.
class PoleMapIndex {
 public:
  PoleMapIndex() = default;
  explicit PoleMapIndex(const PoleMap& map);

  bool empty() const { return tree_.empty(); }
  std::size_t size() const { return tree_.size(); }

  /// Distance to the nearest map pole within max_dist of (x, y), if any.
  std::optional<double> nearest_distance(double x, double y,
                                         double max_dist) const;

 private:
  KdTree2D tree_;
};

/// n particles: positions uniform on the disk of pos_radius around center,
/// yaw uniform within ±yaw_halfwidth of center.theta, weights 1/n.
std::vector<Particle> init_particles(const Pose2D& center, int n,
                                     double pos_radius, double yaw_halfwidth,
                                     Rng& rng);

/// Propagates every particle through a noise-perturbed copy of the delta.
void motion_update(std::vector<Particle>& particles,
                   const OdometryDelta& delta, const MotionNoise& noise,
                   Rng& rng);

/// Unnormalized observation likelihood of a detection set for one pose:
/// per matched detection exp(-d²/(2σ²)), per unmatched detection the
/// constant no-match penalty. No detections → 1.
double observation_likelihood(std::span<const PoleDetection> detections,
                              const PoleMapIndex& map, const Pose2D& pose,
                              const ObservationModelParams& params);

enum class WeightUpdateStatus { kOk, kStarved };

/// Multiplies weights by likelihoods and renormalizes to sum 1. If the total
/// mass underflows to zero the set is reset to uniform and kStarved returned.
WeightUpdateStatus weight_update(std::vector<Particle>& particles,
                                 std::span<const PoleDetection> detections,
                                 const PoleMapIndex& map,
                                 const ObservationModelParams& params);

/// ESS/n = (1 / Σ wᵢ²) / n for normalized weights; 1 iff uniform.
double effective_particle_fraction(std::span<const Particle> particles);

/// Low-variance (systematic) resampling; weights become uniform. Every
/// particle is copied within ±1 of n·wᵢ times.
void resample(std::vector<Particle>& particles, Rng& rng);

/// Weighted mean pose of the ceil(top_fraction·n) highest-weight particles;
/// the heading uses the weighted circular mean.
Pose2D pose_estimate(std::span<const Particle> particles, double top_fraction);

struct MclParams {
  int num_particles = 1000;
  double init_pos_radius = 2.5;                     // m
  double init_yaw_halfwidth = deg_to_rad(5.0);      // rad
  double resample_threshold = 0.5;                  // on ESS/n
  double top_fraction = 0.1;                        // share used for estimate
  MotionNoise motion;
  ObservationModelParams observation;
};

/// Monte Carlo localizer against a pole map. Single-owner state machine:
/// one step at a time; all randomness flows from the seed, so a run replays
/// bit-identically.
class MclFilter {
 public:
  MclFilter(PoleMap map, const MclParams& params,
            const ExtractorParams& extractor, std::uint64_t seed);

  void initialize(const Pose2D& center);

  struct StepResult {
    Pose2D estimate;
    double ess_fraction = 1.0;
    bool resampled = false;
    bool starved = false;
    int num_detections = 0;
  };

  /// One filter cycle: motion update, pole extraction from the scan, weight
  /// update, pose estimate (pre-resampling weights), then resampling when
  /// ESS/n falls below the threshold.
  StepResult step(const OdometryDelta& odometry, const RangeImage& scan);

  const std::vector<Particle>& particles() const { return particles_; }
  const MclParams& params() const { return params_; }

 private:
  PoleMap map_;
  PoleMapIndex index_;
  MclParams params_;
  ExtractorParams extractor_;
  Rng rng_;
  std::vector<Particle> particles_;
};

}  // namespace poleloc
