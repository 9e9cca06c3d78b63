#pragma once

#include <span>
#include <utility>
#include <string>
#include <vector>

#include "poleloc/geometry.hpp"
#include "poleloc/pole_map.hpp"

namespace poleloc {

/// Outcome of matching a detected pole map against ground truth.
struct MatchReport {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  std::vector<double> match_distances;
  std::vector<std::pair<int, int>> matches;  // (detected, truth) index pairs
};

/// One-to-one matching, greedy in ascending pair distance, among pairs
/// within max_dist. Unmatched detections are FP, unmatched truth FN.
MatchReport match_poles(const PoleMap& detected, const PoleMap& truth,
                        double max_dist);

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Standard definitions; 0 where a denominator vanishes.
Prf1 prf1(const MatchReport& report);

struct TimedPose {
  double timestamp = 0.0;
  Pose2D pose;
};

/// Mean absolute and RMS errors of an estimated trajectory against ground
/// truth, position in meters and heading in degrees.
struct TrajectoryErrors {
  double mean_pos = 0.0;
  double rmse_pos = 0.0;
  double mean_ang_deg = 0.0;
  double rmse_ang_deg = 0.0;
  std::size_t samples = 0;
};

/// Truth is linearly interpolated at each estimate timestamp (circular
/// interpolation for theta); estimate samples outside the truth time range
/// are skipped. Throws FormatError when the time ranges do not overlap.
TrajectoryErrors trajectory_errors(std::span<const TimedPose> estimate,
                                   std::span<const TimedPose> truth);

/// Key-value text block / CSV row renderings used by the CLI reports.
std::string extraction_report(const MatchReport& report);
std::string extraction_csv_row(const MatchReport& report, bool with_header);
std::string trajectory_report(const TrajectoryErrors& errors);
std::string trajectory_csv_row(const TrajectoryErrors& errors,
                               bool with_header);

}  // namespace poleloc
