#include "poleloc/dataset_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "poleloc/textio.hpp"

namespace poleloc {

namespace {

double to_double(std::string_view tok, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const std::string s(tok);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError(ctx + ": bad number '" + std::string(tok) + "'");
  }
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(std::string("cannot open ") + what + ": " +
                             path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ScanRecord read_scan_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open scan: " + path.string());
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  if (size % 16 != 0)
    throw FormatError("scan " + path.string() + ": size " +
                      std::to_string(size) + " not a multiple of 16");

  ScanRecord record;
  const std::size_t count = static_cast<std::size_t>(size) / 16;
  record.points.reserve(count);
  std::vector<float> raw(count * 4);
  if (count > 0)
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(size));
  if (count > 0 && !in)
    throw FormatError("scan " + path.string() + ": short read");

  for (std::size_t i = 0; i < count; ++i) {
    const Point3 p{raw[i * 4 + 0], raw[i * 4 + 1], raw[i * 4 + 2]};
    if (!p.finite()) {
      record.dropped_non_finite += 1;
      continue;
    }
    record.points.push_back(p);
  }
  return record;
}

void write_scan_bin(const std::filesystem::path& path,
                    std::span<const Point3> points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  std::vector<float> raw;
  raw.reserve(points.size() * 4);
  for (const Point3& p : points) {
    raw.push_back(static_cast<float>(p.x));
    raw.push_back(static_cast<float>(p.y));
    raw.push_back(static_cast<float>(p.z));
    raw.push_back(0.0f);  // intensity placeholder
  }
  if (!raw.empty())
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

std::vector<TimedPose> read_poses(const std::filesystem::path& path) {
  const std::string text = read_file(path, "poses");
  std::vector<TimedPose> poses;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    // trailing columns (e.g. the ess column of trajectory files) are ignored
    if (tok.size() < 4)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'timestamp x y theta'");
    TimedPose p;
    p.timestamp = to_double(tok[0], "poses");
    p.pose.x = to_double(tok[1], "poses");
    p.pose.y = to_double(tok[2], "poses");
    p.pose.theta = to_double(tok[3], "poses");
    if (!poses.empty() && p.timestamp <= poses.back().timestamp)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": timestamps must strictly increase");
    poses.push_back(p);
  }
  return poses;
}

void write_poses(const std::filesystem::path& path,
                 std::span<const TimedPose> poses,
                 const std::string& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << header_comments;
  out << "# timestamp x y theta\n";
  for (const TimedPose& p : poses)
    out << format_g9(p.timestamp) << ' ' << format_g9(p.pose.x) << ' '
        << format_g9(p.pose.y) << ' ' << format_g9(p.pose.theta) << '\n';
}

PoleMap read_truth_poles(const std::filesystem::path& path) {
  return load_pole_map(path);
}

std::vector<TimedOdometry> read_odometry(const std::filesystem::path& path) {
  const std::string text = read_file(path, "odometry");
  std::vector<TimedOdometry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    if (tok.size() != 4)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'timestamp rot1 trans rot2'");
    TimedOdometry d;
    d.timestamp = to_double(tok[0], "odometry");
    d.delta.rot1 = to_double(tok[1], "odometry");
    d.delta.trans = to_double(tok[2], "odometry");
    d.delta.rot2 = to_double(tok[3], "odometry");
    out.push_back(d);
  }
  return out;
}

void write_odometry(const std::filesystem::path& path,
                    std::span<const TimedOdometry> deltas,
                    const std::string& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << header_comments;
  out << "# timestamp rot1 trans rot2\n";
  for (const TimedOdometry& d : deltas)
    out << format_g9(d.timestamp) << ' ' << format_g9(d.delta.rot1) << ' '
        << format_g9(d.delta.trans) << ' ' << format_g9(d.delta.rot2) << '\n';
}

std::vector<SessionIndexEntry> read_session_index(
    const std::filesystem::path& session_dir) {
  const auto path = session_dir / "scans.txt";
  const std::string text = read_file(path, "session index");
  std::vector<SessionIndexEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    if (tok.size() != 3)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'index timestamp path'");
    SessionIndexEntry e;
    try {
      e.index = std::stoull(std::string(tok[0]));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": bad index");
    }
    e.timestamp = to_double(tok[1], "session index");
    e.relative_path = std::string(tok[2]);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_session_index(const std::filesystem::path& session_dir,
                         std::span<const SessionIndexEntry> entries) {
  std::ofstream out(session_dir / "scans.txt", std::ios::binary);
  if (!out)
    throw FormatError("cannot open for writing: " +
                      (session_dir / "scans.txt").string());
  out << "# index timestamp path\n";
  for (const SessionIndexEntry& e : entries)
    out << e.index << ' ' << format_g9(e.timestamp) << ' ' << e.relative_path
        << '\n';
}

}  // namespace poleloc
