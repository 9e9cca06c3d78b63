#pragma once

#include <optional>
#include <span>
#include <vector>

#include "poleloc/geometry.hpp"
#include "poleloc/sensor.hpp"

namespace poleloc {

/// Tunables of the range-image pole extractor. Values are engineering
/// defaults; all of them are exposed through the config file.
struct ExtractorParams {
  double range_gap = 0.5;              // max |Δrange| along a cluster edge (m)
  int min_cluster_pixels = 4;          // clusters below this size are noise
  double smaller_range_fraction = 0.5; // required share of foreground pixels
  double min_z_extent = 1.0;           // min vertical span of a pole (m)
  double min_top_z = 1.0;              // cluster max z must exceed this (m)
  double max_bottom_z = 1.5;           // cluster min z must stay below this (m)
  double min_radius = 0.02;            // fitted radius gate (m)
  double max_radius = 0.4;
  double free_space_fraction = 0.3;    // max occupied share of the outer ring
  double ground_z_cutoff = -1.0;       // pixels at or below are ground (m)
  double free_space_margin = 0.2;      // width of the ring checked (m)

  bool valid() const {
    return range_gap > 0.0 && min_cluster_pixels >= 1 &&
           smaller_range_fraction >= 0.0 && smaller_range_fraction <= 1.0 &&
           min_z_extent > 0.0 && min_radius < max_radius &&
           free_space_fraction >= 0.0 && free_space_fraction <= 1.0 &&
           free_space_margin >= 0.0;
  }
};

/// Connected region of valid above-ground pixels with near-equal ranges.
/// Members are kept in row-major order, so equal inputs give equal clusters.
struct PixelCluster {
  struct Member {
    int u = 0;
    int v = 0;
    double range = 0.0;
    Point3 point;
  };

  std::vector<Member> pixels;
  int u_min = 0, u_max = 0;  // raw column bounds (ignore across the seam)
  int v_min = 0, v_max = 0;
  int u_extent = 0;          // wrap-aware width of the covering column arc

  int width() const { return u_extent; }
  int height() const { return v_max - v_min + 1; }
  int size() const { return static_cast<int>(pixels.size()); }
};

/// A pole hypothesis: fitted circle plus the pixel support behind it.
enum class Frame { kSensor, kWorld };

struct PoleDetection {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  int support = 0;
  Frame frame = Frame::kSensor;
};

/// Segments the range image into clusters: connected components of valid
/// pixels above the ground cutoff, where neighboring pixels (left/right with
/// horizontal wrap, below) connect iff their ranges differ by less than
/// range_gap. Components smaller than min_cluster_pixels are dropped.
std::vector<PixelCluster> cluster_range_image(const RangeImage& img,
                                              const ExtractorParams& params);

/// Keeps clusters that look pole-like in image space: pixel bounding box at
/// least as tall as wide, and enough member pixels closer than their
/// horizontal background (empty background counts as farther).
std::vector<PixelCluster> filter_clusters(std::vector<PixelCluster> clusters,
                                          const RangeImage& img,
                                          const ExtractorParams& params);

/// Algebraic least-squares circle (Kåsa). Exact for points sampled from a
/// circle. Returns nullopt for fewer than 3 points or a collinear set.
std::optional<Circle> fit_circle(std::span<const Point2> points);

/// Full extraction pipeline: cluster, filter, gate on vertical extent and
/// placement, fit circles, gate on radius and on free space around the fit.
/// Detections are in the sensor frame.
std::vector<PoleDetection> extract_poles(const RangeImage& img,
                                         const ExtractorParams& params);

}  // namespace poleloc
