#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "poleloc/extractor.hpp"
#include "poleloc/geometry.hpp"
#include "poleloc/pole_map.hpp"
#include "poleloc/sensor.hpp"

namespace poleloc {

/// A scan with its (mapping ground-truth) pose. The scan itself lives with
/// the session; scan_index refers into it.
struct PosedScan {
  double timestamp = 0.0;
  Pose2D pose;
  std::size_t scan_index = 0;
};

/// Contiguous run of scans covering one stretch of trajectory arc length.
/// `middle` is the scan whose cumulative arc is closest to the segment's
/// midpoint.
struct TrajectorySegment {
  std::size_t first = 0;
  std::size_t last = 0;    // inclusive
  std::size_t middle = 0;
};

struct MapBuildParams {
  double segment_length = 20.0;  // m of trajectory per section
  double merge_radius = 1.0;     // same-pole association distance (m)
  int min_count = 3;             // consecutive sections a real pole needs
};

/// Splits scans into contiguous sections of equal along-trajectory length
/// (the last one may be shorter). Throws FormatError on empty input.
std::vector<TrajectorySegment> split_trajectory(
    std::span<const PosedScan> scans, double segment_length);

/// Rigid 2D transform of detections from the sensor frame into the world
/// frame of `pose`; radii unchanged.
std::vector<PoleDetection> detections_to_world(
    std::span<const PoleDetection> detections, const Pose2D& pose);

/// A map pole under construction: running sums give the exact arithmetic
/// mean of every merged detection; `segments` lists the observing sections.
struct MergedPole {
  double sum_x = 0.0;
  double sum_y = 0.0;
  double sum_radius = 0.0;
  int detections = 0;
  std::vector<int> segments;  // ascending, unique

  double x() const { return sum_x / detections; }
  double y() const { return sum_y / detections; }
  double radius() const { return sum_radius / detections; }
  int count() const { return static_cast<int>(segments.size()); }
};

/// Greedy agglomeration of world-frame detections, grouped per segment.
/// A detection joins the nearest existing pole within merge_radius (counting
/// each segment at most once) or opens a new pole.
std::vector<MergedPole> merge_detections(
    const std::vector<std::vector<PoleDetection>>& detections_per_segment,
    double merge_radius);

/// Counting model: keeps poles observed in at least min_count consecutive
/// sections, where "consecutive" is evaluated only over sections whose
/// middle-scan pose is within sensor_range of the pole (occlusion gaps in
/// between do not erase a pole that could not have been seen).
PoleMap filter_by_count(std::span<const MergedPole> merged, int min_count,
                        std::span<const Pose2D> segment_mid_poses,
                        double sensor_range);

/// Full mapping pass: split, extract poles from each section's middle scan,
/// merge, filter. `load_scan` supplies the raw points for a scan index.
PoleMap build_pole_map(
    std::span<const PosedScan> scans,
    const std::function<std::vector<Point3>(std::size_t)>& load_scan,
    const SensorConfig& sensor, const ExtractorParams& extractor,
    const MapBuildParams& params);

/// Scans of a later session taken further than min_distance from every
/// previously visited pose; used to extend a map into unseen places.
std::vector<PosedScan> select_unseen_scans(std::span<const PosedScan> scans,
                                           std::span<const Pose2D> prior_poses,
                                           double min_distance);

}  // namespace poleloc
