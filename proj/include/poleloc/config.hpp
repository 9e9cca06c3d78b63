#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "poleloc/extractor.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/mcl.hpp"
#include "poleloc/sensor.hpp"

namespace poleloc {

/// Everything the pipeline is parameterized by, in one place. Loaded from a
/// `key value` text file; CLI flags override file values which override the
/// built-in defaults. Angles live in the file in degrees.
struct AppConfig {
  SensorConfig sensor;
  ExtractorParams extractor;
  MapBuildParams map;
  MclParams mcl;
  MotionNoise sim_odom_noise;
  double sim_range_noise_sigma = 0.0;

  /// Sets one key (file spelling, e.g. "sensor.width"). Throws FormatError
  /// for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Canonical text rendering (stable order); also the hash input.
  std::string serialize() const;
  std::uint64_t hash() const;

  /// Built-in sensor presets: "os1-64" (default) or "hdl-32e".
  void apply_preset(std::string_view name);

  void validate() const;  // throws FormatError on out-of-range values
};

/// Defaults overlaid with the file's keys.
AppConfig load_config(const std::filesystem::path& path);

/// Parses config text into `config` (used for both files and tests).
void apply_config_text(AppConfig& config, const std::string& text);

}  // namespace poleloc
