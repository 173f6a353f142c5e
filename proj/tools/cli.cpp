#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lidomaug/augment_pipeline.hpp"
#include "lidomaug/dataset_io.hpp"
#include "lidomaug/error.hpp"
#include "lidomaug/keyvalue.hpp"
#include "lidomaug/synthetic.hpp"

namespace lidomaug::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kReferenceFps = 330.0;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string describe(const LidarConfig& c) {
  std::ostringstream os;
  os << "channels=" << c.channels << " width=" << c.width << " fov_up_deg=" << fmt(rad_to_deg(c.fov_up))
     << " fov_down_deg=" << fmt(rad_to_deg(c.fov_down)) << " max_range_m=" << fmt(c.max_range)
     << " spin_hz=" << fmt(c.spin_rate_hz);
  return os.str();
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void for_each_parallel(unsigned workers, std::size_t n, Fn&& fn) {
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](unsigned w) {
    try {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
      next = n;
    }
  };
  {
    std::vector<std::jthread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(body, w);
    body(0);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// --- shared option groups ----------------------------------------------------

struct WorldArgs {
  std::vector<std::string> files;
  std::size_t synthetic = 0;
  std::uint64_t synthetic_seed = 1;
  std::size_t synthetic_worlds = 1;
};

void add_world_options(CLI::App& cmd, WorldArgs& a) {
  cmd.add_option("--world", a.files, "Cached world model (repeatable)");
  cmd.add_option("--synthetic", a.synthetic, "Use synthetic street scenes with this many points instead");
  cmd.add_option("--synthetic-seed", a.synthetic_seed, "Seed of the first synthetic scene");
  cmd.add_option("--synthetic-worlds", a.synthetic_worlds, "Number of synthetic scenes")->check(CLI::PositiveNumber);
}

std::vector<WorldModel> load_worlds(const WorldArgs& a, std::ostream& err) {
  if (a.files.empty() == (a.synthetic == 0)) throw UsageError("give either --world files or --synthetic N");
  std::vector<WorldModel> worlds;
  for (const auto& path : a.files) {
    CachedWorld cached = load_world(path);
    err << "loaded " << path << " (" << cached.world.size() << " points)\n";
    worlds.push_back(std::move(cached.world));
  }
  if (a.synthetic > 0) {
    for (std::size_t k = 0; k < a.synthetic_worlds; ++k) {
      worlds.push_back(synthetic_world(a.synthetic, a.synthetic_seed + k));
    }
  }
  return worlds;
}

struct SensorArgs {
  std::string preset;
  std::string file;
};

void add_sensor_options(CLI::App& cmd, SensorArgs& a) {
  auto* p = cmd.add_option("--preset", a.preset, "Sensor preset (V64, V32, V16, O64, O128)");
  auto* f = cmd.add_option("--sensor-file", a.file, "Sensor description file");
  p->excludes(f);
}

std::optional<LidarConfig> sensor_of(const SensorArgs& a) {
  if (!a.preset.empty()) return preset(a.preset);
  if (!a.file.empty()) return load_sensor_description(a.file);
  return std::nullopt;
}

struct OutputArgs {
  std::string prefix;
  bool ply = false;
};

void add_output_options(CLI::App& cmd, OutputArgs& a) {
  cmd.add_option("--out-prefix", a.prefix, "Write <prefix>.bin, .label and .png");
  cmd.add_flag("--ply", a.ply, "Also write <prefix>.ply");
}

std::vector<std::uint32_t> raw_labels(const PointCloud& cloud) {
  return std::vector<std::uint32_t>(cloud.labels.begin(), cloud.labels.end());
}

void write_outputs(const std::string& prefix, const PointCloud& cloud, const RangeMap& map, bool ply) {
  const std::filesystem::path parent = std::filesystem::path(prefix).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_scan(cloud, prefix + ".bin");
  write_labels(raw_labels(cloud), prefix + ".label");
  write_range_png(map, prefix + ".png");
  if (ply) write_ply(cloud, prefix + ".ply");
}

struct SeedChoice {
  std::uint64_t value = 0;
  const char* source = "";
};

/// --seed, then LIDOMAUG_SEED, then the config file, then a fresh random seed.
SeedChoice resolve_seed(const std::string& flag, std::optional<std::uint64_t> from_file) {
  if (!flag.empty()) {
    try {
      return {parse_seed(flag), "flag"};
    } catch (const Error& e) {
      throw UsageError(std::string("--seed: ") + e.what());
    }
  }
  std::optional<std::uint64_t> env;
  try {
    env = environment_seed();
  } catch (const Error& e) {
    throw UsageError(std::string("LIDOMAUG_SEED: ") + e.what());
  }
  if (env) return {*env, "env"};
  if (from_file) return {*from_file, "config"};
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return {seed, "generated"};
}

// --- augmentation spec flags ---------------------------------------------------

struct DoubleFlag {
  const char* name;
  double AugmentSpec::*field;
  const char* help;
};

const std::array<DoubleFlag, 18> kDoubleFlags{{
    {"--fov-up-min", &AugmentSpec::fov_up_min, "Lower bound of the sampled upper FOV edge, rad"},
    {"--fov-up-max", &AugmentSpec::fov_up_max, "Upper bound of the sampled upper FOV edge, rad"},
    {"--fov-down-min", &AugmentSpec::fov_down_min, "Lower bound of the sampled lower FOV edge, rad"},
    {"--fov-down-max", &AugmentSpec::fov_down_max, "Upper bound of the sampled lower FOV edge, rad"},
    {"--max-range", &AugmentSpec::max_range, "Max range of sampled sensors, m"},
    {"--spin-hz", &AugmentSpec::spin_hz, "Spin rate of sampled sensors, Hz"},
    {"--yaw-min", &AugmentSpec::yaw_min, "rad"},
    {"--yaw-max", &AugmentSpec::yaw_max, "rad"},
    {"--tx-min", &AugmentSpec::tx_min, "m"},
    {"--tx-max", &AugmentSpec::tx_max, "m"},
    {"--ty-min", &AugmentSpec::ty_min, "m"},
    {"--ty-max", &AugmentSpec::ty_max, "m"},
    {"--tz-min", &AugmentSpec::tz_min, "m"},
    {"--tz-max", &AugmentSpec::tz_max, "m"},
    {"--speed-kmh-min", &AugmentSpec::speed_kmh_min, "km/h"},
    {"--speed-kmh-max", &AugmentSpec::speed_kmh_max, "km/h"},
    {"--yaw-rate-min", &AugmentSpec::yaw_rate_min, "rad/s"},
    {"--yaw-rate-max", &AugmentSpec::yaw_rate_max, "rad/s"},
}};

const std::map<std::string, DistortionOrder> kOrders{{"resample_first", DistortionOrder::kResampleThenTravel},
                                                     {"travel_first", DistortionOrder::kTravelThenResample}};
const std::map<std::string, TravelMode> kModes{{"translate", TravelMode::kTranslate},
                                               {"range_offset", TravelMode::kRangeOffset}};

struct SpecArgs {
  std::string config_file;
  std::string seed;
  SensorArgs sensor;
  bool no_random_config = false;
  bool identity = false;
  std::vector<int> width_choices;
  int channels_min = 0;
  int channels_max = 0;
  std::size_t n_mix = 0;
  std::string order;
  std::string mode;
  std::array<double, kDoubleFlags.size()> values{};
  std::array<CLI::Option*, kDoubleFlags.size()> options{};
  CLI::Option* channels_min_opt = nullptr;
  CLI::Option* channels_max_opt = nullptr;
  CLI::Option* n_mix_opt = nullptr;
};

void add_spec_options(CLI::App& cmd, SpecArgs& a) {
  cmd.add_option("--config", a.config_file, "Augmentation spec file (key = value); flags override it");
  cmd.add_option("--seed", a.seed, "Master seed (overrides LIDOMAUG_SEED and the config file)");
  add_sensor_options(cmd, a.sensor);
  cmd.add_flag("--no-random-config", a.no_random_config, "Render to the given sensor instead of sampling one");
  cmd.add_flag("--identity", a.identity, "Zero pose and motion ranges");
  cmd.add_option("--width-choices", a.width_choices, "Sampled widths, comma separated")->delimiter(',');
  a.channels_min_opt = cmd.add_option("--channels-min", a.channels_min, "Smallest sampled channel count");
  a.channels_max_opt = cmd.add_option("--channels-max", a.channels_max, "Largest sampled channel count");
  for (std::size_t i = 0; i < kDoubleFlags.size(); ++i) {
    a.options[i] = cmd.add_option(kDoubleFlags[i].name, a.values[i], kDoubleFlags[i].help);
  }
  a.n_mix_opt = cmd.add_option("--n-mix", a.n_mix, "Worlds mixed per output")->check(CLI::PositiveNumber);
  cmd.add_option("--distortion-order", a.order, "resample_first or travel_first")
      ->check(CLI::IsMember({"resample_first", "travel_first"}));
  cmd.add_option("--travel-mode", a.mode, "translate or range_offset")
      ->check(CLI::IsMember({"translate", "range_offset"}));
}

struct ResolvedSpec {
  AugmentSpec spec;
  SeedChoice seed;
};

ResolvedSpec resolve_spec(const SpecArgs& a) {
  AugmentSpec spec;
  std::optional<std::uint64_t> file_seed;
  if (!a.config_file.empty()) {
    const std::string text = read_text_file(a.config_file);
    spec = parse_augment_spec(text);
    if (KeyValueText::parse(text).has("seed")) file_seed = spec.seed;
  }
  if (const auto sensor = sensor_of(a.sensor)) {
    if (a.no_random_config) {
      spec.fixed_config = *sensor;
    } else {
      spec.max_range = sensor->max_range;
      spec.spin_hz = sensor->spin_rate_hz;
    }
  } else if (a.no_random_config && !spec.fixed_config) {
    throw UsageError("--no-random-config needs --preset, --sensor-file or sensor_preset in the config file");
  }
  if (!a.width_choices.empty()) spec.width_choices = a.width_choices;
  if (a.channels_min_opt->count()) spec.channels_min = a.channels_min;
  if (a.channels_max_opt->count()) spec.channels_max = a.channels_max;
  for (std::size_t i = 0; i < kDoubleFlags.size(); ++i) {
    if (a.options[i]->count()) spec.*kDoubleFlags[i].field = a.values[i];
  }
  if (a.n_mix_opt->count()) spec.n_mix = a.n_mix;
  if (!a.order.empty()) spec.distortion.order = kOrders.at(a.order);
  if (!a.mode.empty()) spec.distortion.mode = kModes.at(a.mode);
  if (a.identity) spec.make_identity();

  ResolvedSpec out{spec, resolve_seed(a.seed, file_seed)};
  out.spec.seed = out.seed.value;
  out.spec.validate();
  return out;
}

void require_worlds(const std::vector<WorldModel>& worlds, const AugmentSpec& spec) {
  if (worlds.size() < spec.n_mix) {
    throw UsageError("n_mix = " + std::to_string(spec.n_mix) + " needs at least that many worlds, got " +
                     std::to_string(worlds.size()));
  }
}

// --- build-world ---------------------------------------------------------------

struct BuildArgs {
  std::string sequence;
  std::size_t synthetic = 0;
  std::uint64_t synthetic_seed = 1;
  std::size_t frame = 0;
  std::size_t stride = 0;
  std::size_t count = 40;
  double voxel_size = VoxelIndex::kDefaultSize;
  std::size_t dynamic_window = 5;
  CLI::Option* window_opt = nullptr;
  std::string tracks;
  bool allow_missing_labels = false;
  bool no_vote = false;
  std::string out;
  std::string out_dir;
  unsigned workers = 1;
};

std::uint64_t options_hash(const AggregationOptions& o, std::size_t frame, std::uint64_t tracks_hash) {
  std::ostringstream os;
  os << std::setprecision(17) << "count=" << o.count << "\nvoxel_size=" << o.voxel_size << "\ndynamic_window="
     << (o.dynamic_window ? std::to_string(*o.dynamic_window) : "none") << "\nvote=" << o.vote
     << "\ntracks=" << hex64(tracks_hash) << "\nframe=" << frame << "\nclasses=";
  for (Label c : o.dynamic_classes) os << c << ",";
  Fnv1a h;
  const std::string text = os.str();
  h.update(text.data(), text.size());
  return h.digest();
}

int cmd_build_world(const BuildArgs& a, std::ostream& out, std::ostream& err) {
  if (a.sequence.empty() == (a.synthetic == 0)) throw UsageError("give either --sequence DIR or --synthetic N");

  if (a.synthetic > 0) {
    if (a.out.empty()) throw UsageError("--synthetic needs --out");
    const WorldModel world = WorldModel::from_cloud(synthetic_scene(a.synthetic, a.synthetic_seed), a.voxel_size);
    Fnv1a h;
    h.update_value(a.synthetic);
    h.update_value(a.synthetic_seed);
    h.update_value(a.voxel_size);
    cache_world(world, h.digest(), a.out);
    out << "source=synthetic points=" << world.size() << " voxels=" << world.voxels.size()
        << " labeled_density=" << fmt(world.labeled_density()) << " cache=" << a.out
        << " cache_hash=" << hex64(file_hash(a.out)) << "\n";
    return kExitOk;
  }

  if ((a.stride > 0) == !a.out.empty() || (a.stride > 0) != !a.out_dir.empty()) {
    throw UsageError("use --frame T with --out FILE, or --stride S with --out-dir DIR");
  }
  LoadedSequence seq = load_sequence(a.sequence, {a.allow_missing_labels});
  for (const auto& w : seq.warnings) err << "warning: " << w << "\n";
  const std::size_t n = seq.frames.size();
  if (n == 0) fail(ErrorKind::kFormat, "sequence " + a.sequence + " has no scans");

  std::vector<BoxTrack> tracks;
  std::uint64_t tracks_hash = 0;
  if (!a.tracks.empty()) {
    tracks = read_tracks(a.tracks);
    tracks_hash = file_hash(a.tracks);
  }

  AggregationOptions options;
  options.count = a.count;
  options.voxel_size = a.voxel_size;
  if (a.window_opt->count()) options.dynamic_window = a.dynamic_window;
  options.vote = !a.no_vote;

  std::vector<std::size_t> targets;
  if (a.stride > 0) {
    for (std::size_t t = 0; t < n; t += a.stride) targets.push_back(t);
    std::filesystem::create_directories(a.out_dir);
  } else {
    if (a.frame >= n) {
      throw UsageError("--frame " + std::to_string(a.frame) + " out of range (sequence has " + std::to_string(n) +
                       " scans)");
    }
    targets.push_back(a.frame);
  }

  std::vector<std::string> lines(targets.size());
  for_each_parallel(a.workers, targets.size(), [&](std::size_t k) {
    const std::size_t t = targets[k];
    AggregationStats stats;
    const WorldModel world = build_world(seq.frames, t, options, tracks, &stats);
    std::string path = a.out;
    if (a.stride > 0) {
      std::ostringstream name;
      name << std::setw(6) << std::setfill('0') << t << ".world";
      path = (std::filesystem::path(a.out_dir) / name.str()).string();
    }
    cache_world(world, options_hash(options, t, tracks_hash), path);
    std::ostringstream line;
    line << "frame=" << t << " frames_used=" << stats.frames_used << " points=" << world.size()
         << " static_points=" << stats.static_points << " dynamic_points=" << stats.dynamic_points
         << " object_points=" << stats.object_points << " voxels=" << world.voxels.size()
         << " labeled_density=" << fmt(world.labeled_density()) << " cache=" << path
         << " cache_hash=" << hex64(file_hash(path));
    lines[k] = line.str();
  });
  for (const auto& line : lines) out << line << "\n";
  return kExitOk;
}

// --- render / distort / mix -----------------------------------------------------

struct PoseArgs {
  double yaw = 0.0, tx = 0.0, ty = 0.0, tz = 0.0;
};

void add_pose_options(CLI::App& cmd, PoseArgs& a) {
  cmd.add_option("--yaw", a.yaw, "Augmentation yaw, rad");
  cmd.add_option("--tx", a.tx, "Augmentation translation x, m");
  cmd.add_option("--ty", a.ty, "Augmentation translation y, m");
  cmd.add_option("--tz", a.tz, "Augmentation translation z, m");
}

RenderOptions render_options(const PoseArgs& p, unsigned workers) {
  RenderOptions o;
  o.workers = workers;
  if (p.yaw != 0.0 || p.tx != 0.0 || p.ty != 0.0 || p.tz != 0.0) o.pose = Pose::from_yaw(p.yaw, Vec3(p.tx, p.ty, p.tz));
  return o;
}

struct SingleArgs {
  WorldArgs world;
  SensorArgs sensor;
  PoseArgs pose;
  OutputArgs output;
  unsigned workers = 1;
  // distort only
  double speed_kmh = 0.0;
  double yaw_rate = 0.0;
  std::string order;
  std::string mode;
};

void report_map(std::ostream& out, const RangeMap& map, const PointCloud& cloud, const OutputArgs& output) {
  out << describe(map.config) << "\n";
  out << "valid_pixels=" << map.valid_count() << " points=" << cloud.size() << " map_hash=" << hex64(content_hash(map))
      << " cloud_hash=" << hex64(content_hash(cloud)) << "\n";
  if (!output.prefix.empty()) {
    write_outputs(output.prefix, cloud, map, output.ply);
    out << "output=" << output.prefix << "\n";
  }
}

const WorldModel& single_world(const std::vector<WorldModel>& worlds) {
  if (worlds.size() != 1) throw UsageError("this command takes exactly one world");
  return worlds.front();
}

int cmd_render(const SingleArgs& a, std::ostream& out, std::ostream& err) {
  const auto worlds = load_worlds(a.world, err);
  const WorldModel& world = single_world(worlds);
  const LidarConfig config = sensor_of(a.sensor).value_or(preset("V64"));
  const RangeMap map = render(world, config, render_options(a.pose, a.workers));
  out << "world_points=" << world.size() << "\n";
  report_map(out, map, extract_cloud(map), a.output);
  return kExitOk;
}

int cmd_distort(const SingleArgs& a, std::ostream& out, std::ostream& err) {
  const auto worlds = load_worlds(a.world, err);
  const WorldModel& world = single_world(worlds);
  const LidarConfig config = sensor_of(a.sensor).value_or(preset("V64"));
  const MotionParams motion = MotionParams::from_kmh(a.speed_kmh, a.yaw_rate, config.spin_omega());
  DistortionOptions options;
  if (!a.order.empty()) options.order = kOrders.at(a.order);
  if (!a.mode.empty()) options.mode = kModes.at(a.mode);
  const RangeMap map = distort(render(world, config, render_options(a.pose, a.workers)), motion, options);
  out << "world_points=" << world.size() << " speed_mps=" << fmt(motion.speed) << " omega=" << fmt(motion.omega)
      << " omega0=" << fmt(motion.omega0) << "\n";
  report_map(out, map, extract_cloud(map), a.output);
  return kExitOk;
}

struct MixArgs {
  WorldArgs world;
  SensorArgs sensor;
  OutputArgs output;
  std::vector<double> cuts;
  std::string seed;
  unsigned workers = 1;
};

int cmd_mix(const MixArgs& a, std::ostream& out, std::ostream& err) {
  const auto worlds = load_worlds(a.world, err);
  if (worlds.size() < 2) throw UsageError("mix needs at least two worlds");
  const LidarConfig config = sensor_of(a.sensor).value_or(preset("V64"));
  std::vector<Sector> sectors;
  if (!a.cuts.empty()) {
    if (!a.seed.empty()) throw UsageError("--cuts and --seed are mutually exclusive");
    sectors = sectors_from_cuts(a.cuts, worlds.size());
  } else {
    const SeedChoice seed = resolve_seed(a.seed, std::nullopt);
    out << "seed=" << seed.value << " seed_source=" << seed.source << "\n";
    auto rng = SplitMix64::stream(seed.value, streams::kSectors);
    sectors = sample_sectors(rng, worlds.size());
  }
  std::vector<RangeMap> maps;
  RenderOptions options;
  options.workers = a.workers;
  for (const auto& w : worlds) maps.push_back(render(w, config, options));
  const RangeMap map = mix(maps, sectors);
  for (const auto& s : sectors) {
    out << "sector begin=" << fmt(s.begin) << " end=" << fmt(s.end) << " source=" << s.source << "\n";
  }
  report_map(out, map, extract_cloud(map), a.output);
  return kExitOk;
}

// --- augment / bench --------------------------------------------------------------

struct AugmentArgs {
  WorldArgs world;
  SpecArgs spec;
  OutputArgs output;
  std::size_t count = 1;
  unsigned workers = 1;
  std::string dump_spec;
};

std::string frame_prefix(const std::string& prefix, std::size_t i, std::size_t count) {
  if (count == 1) return prefix;
  std::ostringstream os;
  os << prefix << "_" << std::setw(6) << std::setfill('0') << i;
  return os.str();
}

int cmd_augment(const AugmentArgs& a, std::ostream& out, std::ostream& err) {
  const ResolvedSpec resolved = resolve_spec(a.spec);
  out << "seed=" << resolved.seed.value << " seed_source=" << resolved.seed.source << "\n";
  if (!a.dump_spec.empty()) {
    std::ofstream f(a.dump_spec, std::ios::binary);
    f << format_augment_spec(resolved.spec);
    if (!f) fail(ErrorKind::kIo, "cannot write " + a.dump_spec);
  }
  const auto worlds = load_worlds(a.world, err);
  require_worlds(worlds, resolved.spec);

  // Frame i uses seed + i; frames are independent, so the thread count does
  // not affect any output.
  std::vector<std::string> lines(a.count);
  for_each_parallel(a.workers, a.count, [&](std::size_t i) {
    AugmentSpec spec = resolved.spec;
    spec.seed = resolved.spec.seed + i;
    const AugmentResult r = augment(std::span<const WorldModel>(worlds), spec);
    std::ostringstream line;
    line << "frame=" << i << " seed=" << spec.seed << " " << describe(r.config) << " points=" << r.cloud.size()
         << " map_hash=" << hex64(content_hash(r.map)) << " cloud_hash=" << hex64(content_hash(r.cloud));
    if (!a.output.prefix.empty()) {
      const std::string prefix = frame_prefix(a.output.prefix, i, a.count);
      write_outputs(prefix, r.cloud, r.map, a.output.ply);
      line << " output=" << prefix;
    }
    lines[i] = line.str();
  });
  for (const auto& line : lines) out << line << "\n";
  return kExitOk;
}

struct BenchArgs {
  WorldArgs world;
  SpecArgs spec;
  std::size_t iterations = 50;
  std::size_t warmup = 2;
  unsigned workers = 1;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const ResolvedSpec resolved = resolve_spec(a.spec);
  const auto worlds = load_worlds(a.world, err);
  require_worlds(worlds, resolved.spec);
  const AugmentOptions options{a.workers};

  for (std::size_t i = 0; i < a.warmup; ++i) {
    AugmentSpec spec = resolved.spec;
    spec.seed = resolved.spec.seed + i;
    (void)augment(std::span<const WorldModel>(worlds), spec, options);
  }

  std::vector<double> latency;
  latency.reserve(a.iterations);
  std::size_t output_points = 0;
  Fnv1a outputs;
  for (std::size_t i = 0; i < a.iterations; ++i) {
    AugmentSpec spec = resolved.spec;
    spec.seed = resolved.spec.seed + i;
    const AugmentResult r = augment(std::span<const WorldModel>(worlds), spec, options);
    latency.push_back(r.latency_ms);
    output_points += r.cloud.size();
    outputs.update_value(content_hash(r.map));
    err << "iteration " << i + 1 << "/" << a.iterations << " " << fmt(r.latency_ms) << " ms\n";
  }
  std::sort(latency.begin(), latency.end());
  const std::size_t k = latency.size();
  const double median = k % 2 == 1 ? latency[k / 2] : 0.5 * (latency[k / 2 - 1] + latency[k / 2]);
  // Nearest-rank percentile.
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(k)));
  const double p99 = latency[std::max<std::size_t>(rank, 1) - 1];

  std::size_t world_points = 0;
  for (std::size_t i = 0; i < resolved.spec.n_mix; ++i) world_points += worlds[i].size();

  out << "seed=" << resolved.seed.value << "\n";
  out << "world_points=" << world_points << "\n";
  out << "n_mix=" << resolved.spec.n_mix << "\n";
  if (resolved.spec.fixed_config) {
    out << "config=fixed " << describe(*resolved.spec.fixed_config) << "\n";
  } else {
    out << "config=random\n";
  }
  out << "workers=" << a.workers << "\n";
  out << "iterations=" << k << "\n";
  out << "mean_output_points=" << fmt(static_cast<double>(output_points) / static_cast<double>(k)) << "\n";
  out << "latency_min_ms=" << fmt(latency.front()) << "\n";
  out << "latency_median_ms=" << fmt(median) << "\n";
  out << "latency_p99_ms=" << fmt(p99) << "\n";
  out << "fps=" << fmt(1000.0 / median) << "\n";
  out << "reference_fps=" << fmt(kReferenceFps) << "\n";
  out << "output_hash=" << hex64(outputs.digest()) << "\n";
  return kExitOk;
}

// --- inspect -------------------------------------------------------------------

std::string read_magic(const std::string& path, std::size_t n) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIo, "cannot open " + path);
  std::string magic(n, '\0');
  f.read(magic.data(), static_cast<std::streamsize>(n));
  magic.resize(static_cast<std::size_t>(f.gcount()));
  return magic;
}

void print_histogram(std::ostream& out, const std::map<std::uint32_t, std::size_t>& counts) {
  for (const auto& [label, n] : counts) out << "label=" << label << " count=" << n << "\n";
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const std::string magic = read_magic(path, 8);
  const std::string ext = std::filesystem::path(path).extension().string();
  if (magic == "LDMWORLD") {
    const CachedWorld cached = load_world(path);
    const WorldModel& w = cached.world;
    out << "type=world points=" << w.size() << " voxels=" << w.voxels.size() << " voxel_size=" << fmt(w.voxels.voxel_size())
        << " labeled_density=" << fmt(w.labeled_density()) << " config_hash=" << hex64(cached.config_hash)
        << " content_hash=" << hex64(content_hash(w)) << "\n";
    std::map<std::uint32_t, std::size_t> counts;
    for (Label l : w.cloud.labels) ++counts[l];
    print_histogram(out, counts);
  } else if (magic.rfind("\x89PNG", 0) == 0) {
    const Gray16Image img = read_png16(path);
    const auto valid = std::count_if(img.pixels.begin(), img.pixels.end(), [](std::uint16_t v) { return v != 0; });
    out << "type=range_png width=" << img.width << " height=" << img.height << " valid_pixels=" << valid << "\n";
  } else if (magic.rfind("ply", 0) == 0) {
    const PointCloud cloud = read_ply(path);
    out << "type=ply points=" << cloud.size() << " content_hash=" << hex64(content_hash(cloud)) << "\n";
    std::map<std::uint32_t, std::size_t> counts;
    for (Label l : cloud.labels) ++counts[l];
    print_histogram(out, counts);
  } else if (ext == ".bin") {
    const PointCloud cloud = read_scan(path);
    out << "type=scan points=" << cloud.size() << "\n";
  } else if (ext == ".label") {
    const auto raw = read_labels(path);
    out << "type=labels points=" << raw.size() << "\n";
    std::map<std::uint32_t, std::size_t> counts;
    for (std::uint32_t r : raw) ++counts[semantic_class(r)];
    print_histogram(out, counts);
  } else {
    throw UsageError("cannot tell the type of " + path + " (expected a world cache, .png, .ply, .bin or .label)");
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instant LiDAR domain augmentation: world models, rendering, distortion and mixing"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-world", "Aggregate a labeled sequence into cached world models");
  build_cmd->add_option("--sequence", build.sequence, "Sequence directory (velodyne/, labels/, poses.txt)");
  build_cmd->add_option("--synthetic", build.synthetic, "Cache a synthetic street scene with this many points");
  build_cmd->add_option("--synthetic-seed", build.synthetic_seed, "Seed of the synthetic scene");
  auto* frame_opt = build_cmd->add_option("--frame", build.frame, "Reference frame");
  auto* stride_opt = build_cmd->add_option("--stride", build.stride, "Build every S-th frame")->check(CLI::PositiveNumber);
  frame_opt->excludes(stride_opt);
  build_cmd->add_option("--count", build.count, "Adjacent frames aggregated per world")->check(CLI::PositiveNumber);
  build_cmd->add_option("--voxel-size", build.voxel_size, "Voting voxel edge, m")->check(CLI::PositiveNumber);
  build.window_opt =
      build_cmd
          ->add_option("--dynamic-window", build.dynamic_window,
                       "Take dynamic classes from a temporal window of this many frames (5 if no value)")
          ->expected(0, 1)
          ->default_str("5");
  build_cmd->add_option("--dynamic-tracks", build.tracks, "Box track file for moving objects");
  build_cmd->add_flag("--allow-missing-labels", build.allow_missing_labels, "Treat scans without labels as unlabeled");
  build_cmd->add_flag("--no-vote", build.no_vote, "Skip voxel label voting");
  build_cmd->add_option("--out", build.out, "Cache file (single frame)");
  build_cmd->add_option("--out-dir", build.out_dir, "Cache directory (with --stride)");
  build_cmd->add_option("--workers", build.workers, "Frames built in parallel")->check(CLI::PositiveNumber);

  SingleArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render one world to a range map");
  add_world_options(*render_cmd, render_args.world);
  add_sensor_options(*render_cmd, render_args.sensor);
  add_pose_options(*render_cmd, render_args.pose);
  add_output_options(*render_cmd, render_args.output);
  render_cmd->add_option("--workers", render_args.workers, "Scatter threads")->check(CLI::PositiveNumber);

  SingleArgs distort_args;
  auto* distort_cmd = app.add_subcommand("distort", "Render one world and apply motion distortion");
  add_world_options(*distort_cmd, distort_args.world);
  add_sensor_options(*distort_cmd, distort_args.sensor);
  add_pose_options(*distort_cmd, distort_args.pose);
  add_output_options(*distort_cmd, distort_args.output);
  distort_cmd->add_option("--workers", distort_args.workers, "Scatter threads")->check(CLI::PositiveNumber);
  distort_cmd->add_option("--speed-kmh", distort_args.speed_kmh, "Platform speed, km/h");
  distort_cmd->add_option("--yaw-rate", distort_args.yaw_rate, "Platform yaw rate, rad/s");
  distort_cmd->add_option("--distortion-order", distort_args.order, "resample_first or travel_first")
      ->check(CLI::IsMember({"resample_first", "travel_first"}));
  distort_cmd->add_option("--travel-mode", distort_args.mode, "translate or range_offset")
      ->check(CLI::IsMember({"translate", "range_offset"}));

  MixArgs mix_args;
  auto* mix_cmd = app.add_subcommand("mix", "Render several worlds and mix them by azimuth sectors");
  add_world_options(*mix_cmd, mix_args.world);
  add_sensor_options(*mix_cmd, mix_args.sensor);
  add_output_options(*mix_cmd, mix_args.output);
  mix_cmd->add_option("--cuts", mix_args.cuts, "Sorted sector boundaries in rad, comma separated")->delimiter(',');
  mix_cmd->add_option("--seed", mix_args.seed, "Seed for sampled sectors");
  mix_cmd->add_option("--workers", mix_args.workers, "Scatter threads")->check(CLI::PositiveNumber);

  AugmentArgs augment_args;
  auto* augment_cmd = app.add_subcommand("augment", "Generate augmented frames from cached worlds");
  add_world_options(*augment_cmd, augment_args.world);
  add_spec_options(*augment_cmd, augment_args.spec);
  add_output_options(*augment_cmd, augment_args.output);
  augment_cmd->add_option("--count", augment_args.count, "Frames to generate (frame i uses seed + i)")
      ->check(CLI::PositiveNumber);
  augment_cmd->add_option("--workers", augment_args.workers, "Frames generated in parallel")
      ->check(CLI::PositiveNumber);
  augment_cmd->add_option("--dump-spec", augment_args.dump_spec, "Write the resolved spec to this file");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Measure end-to-end augmentation latency");
  add_world_options(*bench_cmd, bench_args.world);
  add_spec_options(*bench_cmd, bench_args.spec);
  bench_cmd->add_option("--iterations", bench_args.iterations, "Timed iterations")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench_args.warmup, "Untimed iterations first");
  bench_cmd->add_option("--workers", bench_args.workers, "Scatter threads per render")->check(CLI::PositiveNumber);

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a cache, scan, label, PLY or PNG file");
  inspect_cmd->add_option("path", inspect_path, "File to describe")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build_cmd) return cmd_build_world(build, out, err);
    if (*render_cmd) return cmd_render(render_args, out, err);
    if (*distort_cmd) return cmd_distort(distort_args, out, err);
    if (*mix_cmd) return cmd_mix(mix_args, out, err);
    if (*augment_cmd) return cmd_augment(augment_args, out, err);
    if (*bench_cmd) return cmd_bench(bench_args, out, err);
    if (*inspect_cmd) return cmd_inspect(inspect_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kInvalidArgument ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lidomaug::cli
