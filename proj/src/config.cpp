#include "poleloc/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "poleloc/pole_map.hpp"
#include "poleloc/textio.hpp"

namespace poleloc {

namespace {

enum class KeyType { kInt, kDouble, kAngleDeg };

struct Binding {
  const char* key;
  KeyType type;
  void* ptr;
};

// Declaration order is the canonical serialization order.
std::vector<Binding> bindings(AppConfig& c) {
  return {
      {"sensor.width", KeyType::kInt, &c.sensor.width},
      {"sensor.height", KeyType::kInt, &c.sensor.height},
      {"sensor.fov_up_deg", KeyType::kAngleDeg, &c.sensor.fov_up},
      {"sensor.fov_down_deg", KeyType::kAngleDeg, &c.sensor.fov_down},
      {"sensor.min_range", KeyType::kDouble, &c.sensor.min_range},
      {"sensor.max_range", KeyType::kDouble, &c.sensor.max_range},
      {"extractor.range_gap", KeyType::kDouble, &c.extractor.range_gap},
      {"extractor.min_cluster_pixels", KeyType::kInt,
       &c.extractor.min_cluster_pixels},
      {"extractor.smaller_range_fraction", KeyType::kDouble,
       &c.extractor.smaller_range_fraction},
      {"extractor.min_z_extent", KeyType::kDouble, &c.extractor.min_z_extent},
      {"extractor.min_top_z", KeyType::kDouble, &c.extractor.min_top_z},
      {"extractor.max_bottom_z", KeyType::kDouble, &c.extractor.max_bottom_z},
      {"extractor.min_radius", KeyType::kDouble, &c.extractor.min_radius},
      {"extractor.max_radius", KeyType::kDouble, &c.extractor.max_radius},
      {"extractor.free_space_fraction", KeyType::kDouble,
       &c.extractor.free_space_fraction},
      {"extractor.ground_z_cutoff", KeyType::kDouble,
       &c.extractor.ground_z_cutoff},
      {"extractor.free_space_margin", KeyType::kDouble,
       &c.extractor.free_space_margin},
      {"map.segment_length", KeyType::kDouble, &c.map.segment_length},
      {"map.merge_radius", KeyType::kDouble, &c.map.merge_radius},
      {"map.min_count", KeyType::kInt, &c.map.min_count},
      {"mcl.num_particles", KeyType::kInt, &c.mcl.num_particles},
      {"mcl.init_pos_radius", KeyType::kDouble, &c.mcl.init_pos_radius},
      {"mcl.init_yaw_halfwidth_deg", KeyType::kAngleDeg,
       &c.mcl.init_yaw_halfwidth},
      {"mcl.resample_threshold", KeyType::kDouble, &c.mcl.resample_threshold},
      {"mcl.top_fraction", KeyType::kDouble, &c.mcl.top_fraction},
      {"mcl.alpha1", KeyType::kDouble, &c.mcl.motion.alpha1},
      {"mcl.alpha2", KeyType::kDouble, &c.mcl.motion.alpha2},
      {"mcl.alpha3", KeyType::kDouble, &c.mcl.motion.alpha3},
      {"mcl.alpha4", KeyType::kDouble, &c.mcl.motion.alpha4},
      {"mcl.sigma_d", KeyType::kDouble, &c.mcl.observation.sigma_d},
      {"mcl.max_match_dist", KeyType::kDouble,
       &c.mcl.observation.max_match_dist},
      {"mcl.no_match_penalty", KeyType::kDouble,
       &c.mcl.observation.no_match_penalty},
      {"sim.odom_alpha1", KeyType::kDouble, &c.sim_odom_noise.alpha1},
      {"sim.odom_alpha2", KeyType::kDouble, &c.sim_odom_noise.alpha2},
      {"sim.odom_alpha3", KeyType::kDouble, &c.sim_odom_noise.alpha3},
      {"sim.odom_alpha4", KeyType::kDouble, &c.sim_odom_noise.alpha4},
      {"sim.range_noise_sigma", KeyType::kDouble, &c.sim_range_noise_sigma},
  };
}

double parse_num(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key '" + std::string(key) + "': bad value '" +
                      std::string(value) + "'");
  }
}

}  // namespace

void AppConfig::set(std::string_view key, std::string_view value) {
  if (key == "preset") {
    apply_preset(value);
    return;
  }
  for (const Binding& b : bindings(*this)) {
    if (key != b.key) continue;
    const double v = parse_num(key, value);
    switch (b.type) {
      case KeyType::kInt:
        *static_cast<int*>(b.ptr) = static_cast<int>(v);
        return;
      case KeyType::kDouble:
        *static_cast<double*>(b.ptr) = v;
        return;
      case KeyType::kAngleDeg:
        *static_cast<double*>(b.ptr) = deg_to_rad(v);
        return;
    }
  }
  throw FormatError("unknown config key '" + std::string(key) + "'");
}

std::string AppConfig::serialize() const {
  std::ostringstream out;
  for (const Binding& b : bindings(const_cast<AppConfig&>(*this))) {
    out << b.key << ' ';
    switch (b.type) {
      case KeyType::kInt:
        out << *static_cast<const int*>(b.ptr);
        break;
      case KeyType::kDouble:
        out << format_g9(*static_cast<const double*>(b.ptr));
        break;
      case KeyType::kAngleDeg:
        out << format_g9(rad_to_deg(*static_cast<const double*>(b.ptr)));
        break;
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t AppConfig::hash() const { return fnv1a64(serialize()); }

void AppConfig::apply_preset(std::string_view name) {
  if (name == "os1-64") {
    sensor.width = 1024;
    sensor.height = 64;
    sensor.fov_up = deg_to_rad(22.5);
    sensor.fov_down = deg_to_rad(22.5);
    sensor.min_range = 0.5;
    sensor.max_range = 120.0;
  } else if (name == "hdl-32e") {
    sensor.width = 1024;
    sensor.height = 32;
    sensor.fov_up = deg_to_rad(10.67);
    sensor.fov_down = deg_to_rad(30.67);
    sensor.min_range = 0.5;
    sensor.max_range = 100.0;
  } else {
    throw FormatError("unknown sensor preset '" + std::string(name) + "'");
  }
}

void AppConfig::validate() const {
  if (!sensor.valid()) throw FormatError("invalid sensor config");
  if (!extractor.valid()) throw FormatError("invalid extractor params");
  if (map.segment_length <= 0.0 || map.merge_radius <= 0.0 ||
      map.min_count < 1)
    throw FormatError("invalid map builder params");
  if (mcl.num_particles < 1 || mcl.observation.sigma_d <= 0.0 ||
      mcl.observation.max_match_dist <= 0.0 ||
      mcl.observation.no_match_penalty <= 0.0 ||
      mcl.observation.no_match_penalty > 1.0 ||
      mcl.top_fraction <= 0.0 || mcl.top_fraction > 1.0)
    throw FormatError("invalid mcl params");
}

void apply_config_text(AppConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto tok = split_ws(stripped);
    if (tok.size() != 2)
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected 'key value'");
    config.set(tok[0], tok[1]);
  }
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  AppConfig config;
  apply_config_text(config, buf.str());
  config.validate();
  return config;
}

}  // namespace poleloc
