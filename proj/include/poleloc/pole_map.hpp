#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace poleloc {

/// Typed error for any malformed input file (maps, poses, scans, specs).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One pole of the global map: world-frame circle plus how many trajectory
/// sections observed it. Ground-truth maps use the kTruthCount sentinel.
struct MapPole {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  std::int64_t count = 1;
};

/// 2D global pole map. Metadata keys are free-form and round-trip through
/// the file format; `format` and `params_hash` are always present on save.
struct PoleMap {
  static constexpr std::int64_t kTruthCount =
      std::numeric_limits<std::int64_t>::max();

  std::vector<MapPole> poles;
  std::map<std::string, std::string> metadata;
};

/// Text format, one record per line: `x y radius count` (9 significant
/// digits); `#`-prefixed header lines hold `# key value` metadata.
/// serialize(parse(s)) == s for files produced by serialize.
std::string serialize_pole_map(const PoleMap& map);
PoleMap parse_pole_map(const std::string& text);

void save_pole_map(const PoleMap& map, const std::filesystem::path& path);
PoleMap load_pole_map(const std::filesystem::path& path);

}  // namespace poleloc
