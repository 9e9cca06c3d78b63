#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poleloc/evaluation.hpp"
#include "poleloc/geometry.hpp"
#include "poleloc/mcl.hpp"
#include "poleloc/pole_map.hpp"

namespace poleloc {

/// One raw LiDAR scan as read from disk.
struct ScanRecord {
  double timestamp = 0.0;
  std::vector<Point3> points;
  int dropped_non_finite = 0;  // NaN/Inf points skipped while reading
};

/// KITTI-style binary scan: little-endian float32 (x, y, z, intensity)
/// quadruples; intensity discarded. Throws FormatError when the file size is
/// not a multiple of 16.
ScanRecord read_scan_bin(const std::filesystem::path& path);
void write_scan_bin(const std::filesystem::path& path,
                    std::span<const Point3> points);

/// `timestamp x y theta` lines, `#` comments; timestamps must strictly
/// increase. Extra trailing columns (trajectory files carry an ess column)
/// are ignored.
std::vector<TimedPose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path,
                 std::span<const TimedPose> poses,
                 const std::string& header_comments = {});

/// Ground-truth pole file; same format as the pole map.
PoleMap read_truth_poles(const std::filesystem::path& path);

/// Odometry chain: `timestamp rot1 trans rot2` lines, stamped at the
/// destination scan.
struct TimedOdometry {
  double timestamp = 0.0;
  OdometryDelta delta;
};
std::vector<TimedOdometry> read_odometry(const std::filesystem::path& path);
void write_odometry(const std::filesystem::path& path,
                    std::span<const TimedOdometry> deltas,
                    const std::string& header_comments = {});

/// On-disk session layout:
///   poses.txt      ground-truth trajectory
///   odometry.txt   noisy odometry chain
///   scans.txt      `index timestamp relative_path` per scan
///   scans/NNNNNN.bin
struct SessionIndexEntry {
  std::size_t index = 0;
  double timestamp = 0.0;
  std::string relative_path;
};

std::vector<SessionIndexEntry> read_session_index(
    const std::filesystem::path& session_dir);
void write_session_index(const std::filesystem::path& session_dir,
                         std::span<const SessionIndexEntry> entries);

}  // namespace poleloc
