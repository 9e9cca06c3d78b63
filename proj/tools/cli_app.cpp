#include "cli_app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "poleloc/config.hpp"
#include "poleloc/dataset_io.hpp"
#include "poleloc/evaluation.hpp"
#include "poleloc/extractor.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/mcl.hpp"
#include "poleloc/pole_map.hpp"
#include "poleloc/simulator.hpp"
#include "poleloc/textio.hpp"

namespace poleloc {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 1;
  std::string out_dir;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_out = true) {
  cmd->add_option("--config", opts.config_path, "config file (key value)");
  cmd->add_option("--set", opts.overrides,
                  "config override key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--threads", opts.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  auto* out = cmd->add_option("--out", opts.out_dir, "output directory");
  if (needs_out) out->required();
}

AppConfig make_config(const CommonOptions& opts) {
  AppConfig config;
  if (!opts.config_path.empty()) config = load_config(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw FormatError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

/// `# cfg.<key> <value>` lines plus the hash, prepended to every text output.
std::string config_header(const AppConfig& config, std::uint64_t seed) {
  std::ostringstream out;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "0x%016llx",
                static_cast<unsigned long long>(config.hash()));
  out << "# config_hash " << hash << '\n';
  out << "# seed " << seed << '\n';
  std::istringstream lines(config.serialize());
  std::string line;
  while (std::getline(lines, line)) out << "# cfg." << line << '\n';
  return out.str();
}

struct Manifest {
  std::vector<std::string> artifacts;
};

void write_manifest(const fs::path& dir, const Manifest& manifest,
                    const AppConfig& config, std::uint64_t seed) {
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out)
    throw FormatError("cannot open for writing: " +
                      (dir / "manifest.txt").string());
  out << "# poleloc manifest\n" << config_header(config, seed);
  for (const std::string& a : manifest.artifacts) out << "artifact " << a
                                                      << '\n';
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << content;
}

struct LoadedSession {
  std::vector<TimedPose> poses;
  std::vector<TimedOdometry> odometry;
  std::vector<SessionIndexEntry> index;
  fs::path dir;

  std::vector<Point3> load_scan(std::size_t i) const {
    return read_scan_bin(dir / index[i].relative_path).points;
  }
};

LoadedSession load_session(const fs::path& dir) {
  if (!fs::exists(dir))
    throw FormatError("session directory does not exist: " + dir.string());
  LoadedSession s;
  s.dir = dir;
  s.poses = read_poses(dir / "poses.txt");
  if (fs::exists(dir / "odometry.txt"))
    s.odometry = read_odometry(dir / "odometry.txt");
  s.index = read_session_index(dir);
  if (s.index.size() != s.poses.size())
    throw FormatError("session " + dir.string() + ": " +
                      std::to_string(s.index.size()) + " scans but " +
                      std::to_string(s.poses.size()) + " poses");
  return s;
}

/// Order-preserving parallel map over [0, n).
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min<int>(threads, static_cast<int>(n));
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& t : pool) t.join();
}

// --- subcommand bodies -------------------------------------------------

int cmd_simulate(const CommonOptions& opts, const std::string& world_path,
                 const std::string& traj_path) {
  const AppConfig config = make_config(opts);
  const WorldSpec world = load_world_spec(world_path);
  const TrajectorySpec traj = load_trajectory_spec(traj_path);

  const Session session =
      generate_session(world, traj, config.sensor, config.sim_odom_noise,
                       config.sim_range_noise_sigma, opts.seed, opts.threads);

  const fs::path out = opts.out_dir;
  fs::create_directories(out / "scans");
  const std::string header = config_header(config, opts.seed);

  std::vector<TimedPose> poses;
  std::vector<SessionIndexEntry> index;
  for (const PosedScan& p : session.posed) {
    poses.push_back({p.timestamp, p.pose});
    char name[32];
    std::snprintf(name, sizeof(name), "scans/%06zu.bin", p.scan_index);
    index.push_back({p.scan_index, p.timestamp, name});
    write_scan_bin(out / name, session.scans[p.scan_index]);
  }
  write_poses(out / "poses.txt", poses, header);

  std::vector<TimedOdometry> odometry;
  for (std::size_t k = 0; k < session.odometry.size(); ++k)
    odometry.push_back({session.posed[k + 1].timestamp, session.odometry[k]});
  write_odometry(out / "odometry.txt", odometry, header);
  write_session_index(out, index);

  save_pole_map(world_truth_poles(world), out / "truth_poles.txt");

  Manifest manifest;
  manifest.artifacts = {"poses.txt", "odometry.txt", "scans.txt",
                        "truth_poles.txt"};
  write_manifest(out, manifest, config, opts.seed);
  std::cout << "simulate: " << session.posed.size() << " scans -> "
            << out.string() << '\n';
  return kExitOk;
}

int cmd_extract(const CommonOptions& opts, const std::string& session_dir) {
  const AppConfig config = make_config(opts);
  const LoadedSession session = load_session(session_dir);

  std::vector<std::vector<PoleDetection>> detections(session.index.size());
  parallel_for(session.index.size(), opts.threads, [&](std::size_t i) {
    const RangeImage img =
        project_scan(session.load_scan(i), config.sensor);
    detections[i] = extract_poles(img, config.extractor);
  });

  const fs::path out = opts.out_dir;
  fs::create_directories(out);
  std::ostringstream body;
  body << config_header(config, opts.seed);
  body << "# scan_index timestamp x y radius support\n";
  for (std::size_t i = 0; i < detections.size(); ++i)
    for (const PoleDetection& d : detections[i])
      body << i << ' ' << format_g9(session.poses[i].timestamp) << ' '
           << format_g9(d.x) << ' ' << format_g9(d.y) << ' '
           << format_g9(d.radius) << ' ' << d.support << '\n';
  write_text(out / "detections.txt", body.str());

  Manifest manifest;
  manifest.artifacts = {"detections.txt"};
  write_manifest(out, manifest, config, opts.seed);
  std::cout << "extract: " << session.index.size() << " scans -> "
            << (out / "detections.txt").string() << '\n';
  return kExitOk;
}

int cmd_build_map(const CommonOptions& opts, const std::string& session_dir) {
  const AppConfig config = make_config(opts);
  const LoadedSession session = load_session(session_dir);

  std::vector<PosedScan> scans;
  for (std::size_t i = 0; i < session.poses.size(); ++i)
    scans.push_back({session.poses[i].timestamp, session.poses[i].pose, i});

  PoleMap map = build_pole_map(
      scans, [&](std::size_t i) { return session.load_scan(i); },
      config.sensor, config.extractor, config.map);

  char hash[32];
  std::snprintf(hash, sizeof(hash), "0x%016llx",
                static_cast<unsigned long long>(config.hash()));
  map.metadata["params_hash"] = hash;

  const fs::path out = opts.out_dir;
  fs::create_directories(out);
  save_pole_map(map, out / "pole_map.txt");

  Manifest manifest;
  manifest.artifacts = {"pole_map.txt"};
  write_manifest(out, manifest, config, opts.seed);
  std::cout << "build-map: " << map.poles.size() << " poles -> "
            << (out / "pole_map.txt").string() << '\n';
  return kExitOk;
}

int cmd_localize(const CommonOptions& opts, const std::string& session_dir,
                 const std::string& map_path, int particles_override) {
  AppConfig config = make_config(opts);
  if (particles_override > 0) config.mcl.num_particles = particles_override;
  if (!fs::exists(map_path))
    throw FormatError("map file does not exist: " + map_path);
  const PoleMap map = load_pole_map(map_path);
  const LoadedSession session = load_session(session_dir);
  if (session.poses.empty())
    throw FormatError("session has no scans: " + session_dir);
  if (session.odometry.size() + 1 != session.poses.size())
    throw FormatError("session odometry/scan count mismatch");

  MclFilter filter(map, config.mcl, config.extractor, opts.seed);
  filter.initialize(session.poses.front().pose);

  std::ostringstream body;
  body << config_header(config, opts.seed);
  body << "# timestamp x y theta ess_fraction\n";
  for (std::size_t i = 0; i < session.poses.size(); ++i) {
    const OdometryDelta delta =
        i == 0 ? OdometryDelta{} : session.odometry[i - 1].delta;
    const RangeImage img = project_scan(session.load_scan(i), config.sensor);
    const auto result = filter.step(delta, img);
    body << format_g9(session.poses[i].timestamp) << ' '
         << format_g9(result.estimate.x) << ' '
         << format_g9(result.estimate.y) << ' '
         << format_g9(result.estimate.theta) << ' '
         << format_g9(result.ess_fraction) << '\n';
  }

  const fs::path out = opts.out_dir;
  fs::create_directories(out);
  write_text(out / "trajectory.txt", body.str());

  Manifest manifest;
  manifest.artifacts = {"trajectory.txt"};
  write_manifest(out, manifest, config, opts.seed);
  std::cout << "localize: " << session.poses.size() << " steps -> "
            << (out / "trajectory.txt").string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& detected_map,
                 const std::string& truth_map, const std::string& estimate,
                 const std::string& truth_poses, double max_dist) {
  const AppConfig config = make_config(opts);
  const fs::path out = opts.out_dir;
  fs::create_directories(out);
  Manifest manifest;

  const bool map_mode = !detected_map.empty() || !truth_map.empty();
  const bool traj_mode = !estimate.empty() || !truth_poses.empty();
  if (map_mode == traj_mode)
    throw CLI::ValidationError(
        "evaluate",
        "pass either --detected-map with --truth-map, or --estimate with "
        "--truth-poses");

  if (map_mode) {
    if (detected_map.empty() || truth_map.empty())
      throw CLI::ValidationError("evaluate",
                                 "--detected-map and --truth-map go together");
    const MatchReport report = match_poles(
        load_pole_map(detected_map), load_pole_map(truth_map), max_dist);
    write_text(out / "extraction_metrics.txt",
               config_header(config, opts.seed) + extraction_report(report));
    write_text(out / "extraction_metrics.csv",
               extraction_csv_row(report, true));
    manifest.artifacts = {"extraction_metrics.txt", "extraction_metrics.csv"};
    std::cout << extraction_report(report);
  } else {
    if (estimate.empty() || truth_poses.empty())
      throw CLI::ValidationError("evaluate",
                                 "--estimate and --truth-poses go together");
    const auto errors =
        trajectory_errors(read_poses(estimate), read_poses(truth_poses));
    write_text(out / "trajectory_metrics.txt",
               config_header(config, opts.seed) + trajectory_report(errors));
    write_text(out / "trajectory_metrics.csv",
               trajectory_csv_row(errors, true));
    manifest.artifacts = {"trajectory_metrics.txt", "trajectory_metrics.csv"};
    std::cout << trajectory_report(errors);
  }
  write_manifest(out, manifest, config, opts.seed);
  return kExitOk;
}

int cmd_bench(const CommonOptions& opts, const std::string& session_dir,
              const std::string& map_path, int max_scans) {
  const AppConfig config = make_config(opts);
  const LoadedSession session = load_session(session_dir);
  const std::size_t n =
      std::min<std::size_t>(session.index.size(),
                            max_scans > 0 ? max_scans : session.index.size());
  if (n == 0) throw FormatError("bench: session has no scans");

  // Preload so disk I/O stays out of the timings.
  std::vector<std::vector<Point3>> clouds(n);
  for (std::size_t i = 0; i < n; ++i) clouds[i] = session.load_scan(i);

  using clock = std::chrono::steady_clock;
  std::vector<double> extract_ms;
  extract_ms.reserve(n);
  std::size_t total_detections = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto begin = clock::now();
    const RangeImage img = project_scan(clouds[i], config.sensor);
    const auto dets = extract_poles(img, config.extractor);
    const auto end = clock::now();
    total_detections += dets.size();
    extract_ms.push_back(
        std::chrono::duration<double, std::milli>(end - begin).count());
  }

  std::vector<double> step_ms;
  if (!map_path.empty()) {
    if (!fs::exists(map_path))
      throw FormatError("map file does not exist: " + map_path);
    MclFilter filter(load_pole_map(map_path), config.mcl, config.extractor,
                     opts.seed);
    filter.initialize(session.poses.front().pose);
    step_ms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const OdometryDelta delta =
          i == 0 || session.odometry.empty() ? OdometryDelta{}
                                             : session.odometry[i - 1].delta;
      const auto begin = clock::now();
      const RangeImage img = project_scan(clouds[i], config.sensor);
      filter.step(delta, img);
      const auto end = clock::now();
      step_ms.push_back(
          std::chrono::duration<double, std::milli>(end - begin).count());
    }
  }

  const auto stats = [](std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const double mean =
        std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
    const double p95 = samples[static_cast<std::size_t>(
        0.95 * static_cast<double>(samples.size() - 1))];
    return std::pair{mean, p95};
  };

  std::ostringstream body;
  body << config_header(config, opts.seed);
  const auto [ext_mean, ext_p95] = stats(extract_ms);
  body << "scans " << n << '\n'
       << "detections " << total_detections << '\n'
       << "extract_mean_ms " << format_g9(ext_mean) << '\n'
       << "extract_p95_ms " << format_g9(ext_p95) << '\n'
       << "extract_max_ms "
       << format_g9(*std::max_element(extract_ms.begin(), extract_ms.end()))
       << '\n';
  if (!step_ms.empty()) {
    const auto [step_mean, step_p95] = stats(step_ms);
    body << "mcl_step_mean_ms " << format_g9(step_mean) << '\n'
         << "mcl_step_p95_ms " << format_g9(step_p95) << '\n';
  }

  const fs::path out = opts.out_dir;
  fs::create_directories(out);
  write_text(out / "bench.txt", body.str());
  Manifest manifest;
  manifest.artifacts = {"bench.txt"};
  write_manifest(out, manifest, config, opts.seed);
  std::cout << body.str();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pole-based LiDAR localization pipeline"};
  app.require_subcommand(1);

  CommonOptions sim_opts, ext_opts, map_opts, loc_opts, eval_opts, bench_opts;
  std::string world_path, traj_path;
  std::string ext_session, map_session, loc_session, bench_session;
  std::string loc_map, bench_map;
  int loc_particles = -1;
  std::string eval_detected, eval_truth_map, eval_estimate, eval_truth_poses;
  double eval_max_dist = 1.0;
  int bench_scans = 100;

  auto* simulate = app.add_subcommand(
      "simulate", "ray-cast a synthetic session from world+trajectory specs");
  simulate->add_option("--world", world_path, "world spec file")->required();
  simulate->add_option("--trajectory", traj_path, "trajectory spec file")
      ->required();
  add_common(simulate, sim_opts);

  auto* extract = app.add_subcommand(
      "extract", "extract poles from every scan of a session");
  extract->add_option("--session", ext_session, "session directory")
      ->required();
  add_common(extract, ext_opts);

  auto* build_map = app.add_subcommand(
      "build-map", "build a global pole map from a posed session");
  build_map->add_option("--session", map_session, "session directory")
      ->required();
  add_common(build_map, map_opts);

  auto* localize = app.add_subcommand(
      "localize", "run Monte Carlo localization against a pole map");
  localize->add_option("--session", loc_session, "session directory")
      ->required();
  localize->add_option("--map", loc_map, "pole map file")->required();
  localize->add_option("--particles", loc_particles, "particle count");
  add_common(localize, loc_opts);

  auto* evaluate = app.add_subcommand(
      "evaluate", "score extraction against truth or a trajectory estimate");
  evaluate->add_option("--detected-map", eval_detected, "detected pole map");
  evaluate->add_option("--truth-map", eval_truth_map, "ground-truth pole map");
  evaluate->add_option("--estimate", eval_estimate, "estimated trajectory");
  evaluate->add_option("--truth-poses", eval_truth_poses,
                       "ground-truth trajectory");
  evaluate->add_option("--max-dist", eval_max_dist,
                       "pole match distance bound (m)");
  add_common(evaluate, eval_opts);

  auto* bench = app.add_subcommand(
      "bench", "per-scan extraction / MCL step latency over a session");
  bench->add_option("--session", bench_session, "session directory")
      ->required();
  bench->add_option("--map", bench_map, "pole map for full MCL step timing");
  bench->add_option("--scans", bench_scans, "number of scans to time");
  add_common(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(sim_opts, world_path, traj_path);
    if (extract->parsed()) return cmd_extract(ext_opts, ext_session);
    if (build_map->parsed()) return cmd_build_map(map_opts, map_session);
    if (localize->parsed())
      return cmd_localize(loc_opts, loc_session, loc_map, loc_particles);
    if (evaluate->parsed())
      return cmd_evaluate(eval_opts, eval_detected, eval_truth_map,
                          eval_estimate, eval_truth_poses, eval_max_dist);
    if (bench->parsed())
      return cmd_bench(bench_opts, bench_session, bench_map, bench_scans);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace poleloc
