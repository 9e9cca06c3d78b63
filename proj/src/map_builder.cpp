#include "poleloc/map_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poleloc/textio.hpp"

namespace poleloc {

std::vector<TrajectorySegment> split_trajectory(
    std::span<const PosedScan> scans, double segment_length) {
  if (scans.empty()) throw FormatError("split_trajectory: no scans");
  if (!(segment_length > 0.0))
    throw FormatError("split_trajectory: segment_length must be positive");

  // Cumulative arc length at each scan.
  std::vector<double> arc(scans.size(), 0.0);
  for (std::size_t i = 1; i < scans.size(); ++i)
    arc[i] = arc[i - 1] + std::hypot(scans[i].pose.x - scans[i - 1].pose.x,
                                     scans[i].pose.y - scans[i - 1].pose.y);

  const double total = arc.back();
  const std::size_t n_segments =
      total <= 0.0
          ? 1
          : static_cast<std::size_t>(std::ceil(total / segment_length));

  // Scan i belongs to segment floor(arc/segment_length), the end point
  // folding into the last segment.
  std::vector<TrajectorySegment> segments;
  segments.reserve(n_segments);
  std::size_t begin = 0;
  for (std::size_t s = 0; s < n_segments; ++s) {
    const double upper = (s + 1 == n_segments)
                             ? std::numeric_limits<double>::infinity()
                             : (s + 1) * segment_length;
    std::size_t end = begin;
    while (end < scans.size() && arc[end] < upper) ++end;

    TrajectorySegment seg;
    seg.first = begin;
    seg.last = end - 1;
    const double mid_arc = 0.5 * (arc[seg.first] + arc[seg.last]);
    seg.middle = seg.first;
    for (std::size_t i = seg.first; i <= seg.last; ++i)
      if (std::abs(arc[i] - mid_arc) < std::abs(arc[seg.middle] - mid_arc))
        seg.middle = i;
    segments.push_back(seg);
    begin = end;
    if (begin >= scans.size()) break;
  }
  return segments;
}

std::vector<PoleDetection> detections_to_world(
    std::span<const PoleDetection> detections, const Pose2D& pose) {
  std::vector<PoleDetection> out;
  out.reserve(detections.size());
  for (const PoleDetection& d : detections) {
    const Point2 w = transform_to_world(pose, {d.x, d.y});
    out.push_back({w.x, w.y, d.radius, d.support, Frame::kWorld});
  }
  return out;
}

std::vector<MergedPole> merge_detections(
    const std::vector<std::vector<PoleDetection>>& detections_per_segment,
    double merge_radius) {
  std::vector<MergedPole> merged;
  for (std::size_t seg = 0; seg < detections_per_segment.size(); ++seg) {
    for (const PoleDetection& det : detections_per_segment[seg]) {
      MergedPole* best = nullptr;
      double best_d = merge_radius;
      for (MergedPole& pole : merged) {
        const double d = std::hypot(det.x - pole.x(), det.y - pole.y());
        if (d < best_d || (d == best_d && best == nullptr)) {
          best_d = d;
          best = &pole;
        }
      }
      if (best == nullptr) {
        merged.emplace_back();
        best = &merged.back();
      }
      best->sum_x += det.x;
      best->sum_y += det.y;
      best->sum_radius += det.radius;
      best->detections += 1;
      if (best->segments.empty() ||
          best->segments.back() != static_cast<int>(seg))
        best->segments.push_back(static_cast<int>(seg));
    }
  }
  return merged;
}

PoleMap filter_by_count(std::span<const MergedPole> merged, int min_count,
                        std::span<const Pose2D> segment_mid_poses,
                        double sensor_range) {
  PoleMap map;
  for (const MergedPole& pole : merged) {
    if (pole.count() < min_count) continue;

    // Longest streak of observations over the sections that could have seen
    // the pole. Observed sections always qualify as eligible.
    int longest = 0;
    int streak = 0;
    std::size_t next_obs = 0;
    for (std::size_t seg = 0; seg < segment_mid_poses.size(); ++seg) {
      const bool observed =
          next_obs < pole.segments.size() &&
          pole.segments[next_obs] == static_cast<int>(seg);
      if (observed) ++next_obs;
      const double d = std::hypot(segment_mid_poses[seg].x - pole.x(),
                                  segment_mid_poses[seg].y - pole.y());
      const bool eligible = observed || d <= sensor_range;
      if (!eligible) continue;
      streak = observed ? streak + 1 : 0;
      longest = std::max(longest, streak);
    }
    if (longest < min_count) continue;

    map.poles.push_back({pole.x(), pole.y(), pole.radius(),
                         static_cast<std::int64_t>(pole.count())});
  }
  return map;
}

PoleMap build_pole_map(
    std::span<const PosedScan> scans,
    const std::function<std::vector<Point3>(std::size_t)>& load_scan,
    const SensorConfig& sensor, const ExtractorParams& extractor,
    const MapBuildParams& params) {
  const auto segments = split_trajectory(scans, params.segment_length);

  std::vector<std::vector<PoleDetection>> world_dets(segments.size());
  std::vector<Pose2D> mid_poses(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const PosedScan& mid = scans[segments[s].middle];
    mid_poses[s] = mid.pose;
    const RangeImage img =
        project_scan(load_scan(mid.scan_index), sensor);
    const auto dets = extract_poles(img, extractor);
    world_dets[s] = detections_to_world(dets, mid.pose);
  }

  const auto merged = merge_detections(world_dets, params.merge_radius);
  PoleMap map = filter_by_count(merged, params.min_count, mid_poses,
                                sensor.max_range);
  map.metadata["format"] = "polemap.v1";
  map.metadata["segment_length"] = format_g9(params.segment_length);
  map.metadata["merge_radius"] = format_g9(params.merge_radius);
  map.metadata["min_count"] = std::to_string(params.min_count);
  return map;
}

std::vector<PosedScan> select_unseen_scans(std::span<const PosedScan> scans,
                                           std::span<const Pose2D> prior_poses,
                                           double min_distance) {
  std::vector<PosedScan> out;
  const double d2 = min_distance * min_distance;
  for (const PosedScan& s : scans) {
    bool unseen = true;
    for (const Pose2D& p : prior_poses) {
      const double dx = s.pose.x - p.x;
      const double dy = s.pose.y - p.y;
      if (dx * dx + dy * dy < d2) {
        unseen = false;
        break;
      }
    }
    if (unseen) out.push_back(s);
  }
  return out;
}

}  // namespace poleloc
