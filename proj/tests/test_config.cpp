#include <doctest.h>

#include <fstream>

#include "poleloc/config.hpp"
#include "poleloc/pole_map.hpp"
#include "test_helpers.hpp"

using namespace poleloc;

TEST_SUITE("config") {

TEST_CASE("defaults are valid and hash deterministically") {
  AppConfig a, b;
  a.validate();
  CHECK(a.hash() == b.hash());
  CHECK(a.sensor.height == 64);
  CHECK(a.mcl.num_particles == 1000);
  CHECK(a.mcl.init_pos_radius == 2.5);
  CHECK(a.mcl.init_yaw_halfwidth == doctest::Approx(deg_to_rad(5.0)));
}

TEST_CASE("set/serialize round-trip and hash sensitivity") {
  AppConfig config;
  const auto base_hash = config.hash();
  config.set("extractor.range_gap", "0.75");
  CHECK(config.extractor.range_gap == 0.75);
  CHECK(config.hash() != base_hash);

  config.set("sensor.fov_up_deg", "12.5");
  CHECK(config.sensor.fov_up == doctest::Approx(deg_to_rad(12.5)));
  CHECK(config.serialize().find("sensor.fov_up_deg 12.5") !=
        std::string::npos);

  AppConfig reparsed;
  apply_config_text(reparsed, config.serialize());
  CHECK(reparsed.hash() == config.hash());
}

TEST_CASE("unknown keys and bad values are format errors") {
  AppConfig config;
  CHECK_THROWS_AS(config.set("extractor.typo", "1"), FormatError);
  CHECK_THROWS_AS(config.set("mcl.sigma_d", "abc"), FormatError);
  CHECK_THROWS_AS(apply_config_text(config, "just_one_token\n"), FormatError);
}

TEST_CASE("presets configure the sensor") {
  AppConfig config;
  config.apply_preset("hdl-32e");
  CHECK(config.sensor.height == 32);
  CHECK(config.sensor.fov_down == doctest::Approx(deg_to_rad(30.67)));
  config.apply_preset("os1-64");
  CHECK(config.sensor.height == 64);
  CHECK_THROWS_AS(config.apply_preset("vlp-128"), FormatError);
}

TEST_CASE("load_config applies file keys over defaults") {
  test::TempDir dir("config");
  const auto path = dir.path() / "test.cfg";
  {
    std::ofstream out(path);
    out << "# test config\n";
    out << "preset hdl-32e\n";
    out << "mcl.num_particles 500\n";
    out << "extractor.min_radius 0.05\n";
  }
  const AppConfig config = load_config(path);
  CHECK(config.sensor.height == 32);
  CHECK(config.mcl.num_particles == 500);
  CHECK(config.extractor.min_radius == 0.05);
  CHECK(config.map.min_count == 3);  // untouched default
}

TEST_CASE("validate rejects inconsistent values") {
  AppConfig config;
  config.set("sensor.min_range", "200");  // > max_range
  CHECK_THROWS_AS(config.validate(), FormatError);
}

}  // TEST_SUITE
