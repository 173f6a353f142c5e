#include "lidomaug/augment_pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <sstream>

#include "lidomaug/error.hpp"
#include "lidomaug/keyvalue.hpp"

namespace lidomaug {

void AugmentSpec::validate() const {
  auto ordered = [](double lo, double hi, const char* what) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, std::string(what) + ": expected min <= max");
  };
  if (!fixed_config) {
    require(!width_choices.empty(), "width_choices must not be empty");
    for (int w : width_choices) require(w >= 1, "width choices must be positive");
    require(channels_min >= 1 && channels_min <= channels_max, "channel range must satisfy 1 <= min <= max");
    ordered(fov_up_min, fov_up_max, "fov_up range");
    ordered(fov_down_min, fov_down_max, "fov_down range");
    require(fov_up_min >= 0.0 && fov_up_max <= kPi / 2, "fov_up range must lie in [0, pi/2]");
    require(fov_down_max <= 0.0 && fov_down_min >= -kPi / 2, "fov_down range must lie in [-pi/2, 0]");
    require(fov_up_max > fov_down_min, "fov ranges admit only empty fields of view");
    require(max_range > 0.0 && spin_hz > 0.0, "max_range and spin_hz must be positive");
  } else {
    fixed_config->validate();
  }
  ordered(yaw_min, yaw_max, "yaw range");
  ordered(tx_min, tx_max, "tx range");
  ordered(ty_min, ty_max, "ty range");
  ordered(tz_min, tz_max, "tz range");
  ordered(speed_kmh_min, speed_kmh_max, "speed range");
  ordered(yaw_rate_min, yaw_rate_max, "yaw rate range");
  require(n_mix >= 1, "n_mix must be >= 1");
}

MotionRanges AugmentSpec::motion_ranges() const { return {speed_kmh_min, speed_kmh_max, yaw_rate_min, yaw_rate_max}; }

void AugmentSpec::make_identity() {
  yaw_min = yaw_max = 0.0;
  tx_min = tx_max = ty_min = ty_max = tz_min = tz_max = 0.0;
  speed_kmh_min = speed_kmh_max = 0.0;
  yaw_rate_min = yaw_rate_max = 0.0;
}

std::uint64_t parse_seed(std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    fail(ErrorKind::kFormat, "invalid seed '" + std::string(text) + "' (expected an unsigned 64-bit integer)");
  }
  return value;
}

std::optional<std::uint64_t> environment_seed() {
  const char* value = std::getenv("LIDOMAUG_SEED");
  if (value == nullptr || *value == '\0') return std::nullopt;
  return parse_seed(value);
}

namespace {

const std::vector<std::string> kSpecKeys = {
    "seed",         "width_choices", "channels_min",  "channels_max",  "fov_up_min",       "fov_up_max",
    "fov_down_min", "fov_down_max",  "max_range_m",   "spin_hz",       "sensor_preset",    "yaw_min",
    "yaw_max",      "tx_min",        "tx_max",        "ty_min",        "ty_max",           "tz_min",
    "tz_max",       "speed_kmh_min", "speed_kmh_max", "yaw_rate_min",  "yaw_rate_max",     "n_mix",
    "distortion_order", "travel_mode"};

}  // namespace

AugmentSpec parse_augment_spec(std::string_view text, AugmentSpec spec) {
  const auto kv = KeyValueText::parse(text);
  kv.check_keys(kSpecKeys);
  auto set_double = [&](const char* key, double& field) {
    if (kv.has(key)) field = kv.get_double(key);
  };
  if (kv.has("seed")) spec.seed = parse_seed(kv.raw("seed"));
  if (kv.has("width_choices")) {
    spec.width_choices.clear();
    for (long long w : kv.get_int_list("width_choices")) {
      require(w >= 1 && w <= 1 << 20, "width choice out of range");
      spec.width_choices.push_back(static_cast<int>(w));
    }
  }
  if (kv.has("channels_min")) spec.channels_min = static_cast<int>(kv.get_int("channels_min"));
  if (kv.has("channels_max")) spec.channels_max = static_cast<int>(kv.get_int("channels_max"));
  set_double("fov_up_min", spec.fov_up_min);
  set_double("fov_up_max", spec.fov_up_max);
  set_double("fov_down_min", spec.fov_down_min);
  set_double("fov_down_max", spec.fov_down_max);
  set_double("max_range_m", spec.max_range);
  set_double("spin_hz", spec.spin_hz);
  if (kv.has("sensor_preset")) spec.fixed_config = preset(kv.raw("sensor_preset"));
  set_double("yaw_min", spec.yaw_min);
  set_double("yaw_max", spec.yaw_max);
  set_double("tx_min", spec.tx_min);
  set_double("tx_max", spec.tx_max);
  set_double("ty_min", spec.ty_min);
  set_double("ty_max", spec.ty_max);
  set_double("tz_min", spec.tz_min);
  set_double("tz_max", spec.tz_max);
  set_double("speed_kmh_min", spec.speed_kmh_min);
  set_double("speed_kmh_max", spec.speed_kmh_max);
  set_double("yaw_rate_min", spec.yaw_rate_min);
  set_double("yaw_rate_max", spec.yaw_rate_max);
  if (kv.has("n_mix")) {
    const long long n = kv.get_int("n_mix");
    require(n >= 1, "n_mix must be >= 1");
    spec.n_mix = static_cast<std::size_t>(n);
  }
  if (kv.has("distortion_order")) {
    const auto& v = kv.raw("distortion_order");
    if (v == "resample_first") spec.distortion.order = DistortionOrder::kResampleThenTravel;
    else if (v == "travel_first") spec.distortion.order = DistortionOrder::kTravelThenResample;
    else fail(ErrorKind::kFormat, "distortion_order must be resample_first or travel_first");
  }
  if (kv.has("travel_mode")) {
    const auto& v = kv.raw("travel_mode");
    if (v == "translate") spec.distortion.mode = TravelMode::kTranslate;
    else if (v == "range_offset") spec.distortion.mode = TravelMode::kRangeOffset;
    else fail(ErrorKind::kFormat, "travel_mode must be translate or range_offset");
  }
  spec.validate();
  return spec;
}

AugmentSpec load_augment_spec(const std::string& path, AugmentSpec base) {
  return parse_augment_spec(read_text_file(path), std::move(base));
}

std::string format_augment_spec(const AugmentSpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << "seed = " << s.seed << "\n";
  os << "width_choices = ";
  for (std::size_t i = 0; i < s.width_choices.size(); ++i) os << (i ? "," : "") << s.width_choices[i];
  os << "\n";
  os << "channels_min = " << s.channels_min << "\n"
     << "channels_max = " << s.channels_max << "\n"
     << "fov_up_min = " << s.fov_up_min << "\n"
     << "fov_up_max = " << s.fov_up_max << "\n"
     << "fov_down_min = " << s.fov_down_min << "\n"
     << "fov_down_max = " << s.fov_down_max << "\n"
     << "max_range_m = " << s.max_range << "\n"
     << "spin_hz = " << s.spin_hz << "\n";
  if (s.fixed_config) {
    bool named = false;
    for (const auto& name : preset_names()) {
      if (preset(name) == *s.fixed_config) {
        os << "sensor_preset = " << name << "\n";
        named = true;
        break;
      }
    }
    require(named, "only preset sensor configs can be written as key = value spec text");
  }
  os << "yaw_min = " << s.yaw_min << "\n"
     << "yaw_max = " << s.yaw_max << "\n"
     << "tx_min = " << s.tx_min << "\n"
     << "tx_max = " << s.tx_max << "\n"
     << "ty_min = " << s.ty_min << "\n"
     << "ty_max = " << s.ty_max << "\n"
     << "tz_min = " << s.tz_min << "\n"
     << "tz_max = " << s.tz_max << "\n"
     << "speed_kmh_min = " << s.speed_kmh_min << "\n"
     << "speed_kmh_max = " << s.speed_kmh_max << "\n"
     << "yaw_rate_min = " << s.yaw_rate_min << "\n"
     << "yaw_rate_max = " << s.yaw_rate_max << "\n"
     << "n_mix = " << s.n_mix << "\n"
     << "distortion_order = "
     << (s.distortion.order == DistortionOrder::kResampleThenTravel ? "resample_first" : "travel_first") << "\n"
     << "travel_mode = " << (s.distortion.mode == TravelMode::kTranslate ? "translate" : "range_offset") << "\n";
  return os.str();
}

LidarConfig sample_config(const AugmentSpec& spec, UniformSource& rng) {
  spec.validate();
  if (spec.fixed_config) return *spec.fixed_config;
  LidarConfig c;
  const auto choice = uniform_int(rng, 0, static_cast<long long>(spec.width_choices.size()) - 1);
  c.width = spec.width_choices[static_cast<std::size_t>(choice)];
  c.channels = static_cast<int>(uniform_int(rng, spec.channels_min, spec.channels_max));
  c.fov_up = uniform(rng, spec.fov_up_min, spec.fov_up_max);
  c.fov_down = uniform(rng, spec.fov_down_min, spec.fov_down_max);
  // A zero-width field of view is possible only at the joint endpoint.
  if (c.fov_up == c.fov_down) c.fov_up = std::nextafter(c.fov_up, kPi);
  c.max_range = spec.max_range;
  c.spin_rate_hz = spec.spin_hz;
  c.validate();
  return c;
}

Pose sample_pose(const AugmentSpec& spec, UniformSource& rng) {
  const double yaw = uniform(rng, spec.yaw_min, spec.yaw_max);
  const double x = uniform(rng, spec.tx_min, spec.tx_max);
  const double y = uniform(rng, spec.ty_min, spec.ty_max);
  const double z = uniform(rng, spec.tz_min, spec.tz_max);
  return Pose::from_yaw(yaw, Vec3(x, y, z));
}

AugmentResult augment(std::span<const WorldRef> worlds, const AugmentSpec& spec, const AugmentOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  spec.validate();
  require(worlds.size() >= spec.n_mix, "augment needs at least n_mix world models");
  for (std::size_t i = 0; i < spec.n_mix; ++i) require(!worlds[i].get().cloud.empty(), "augment: empty world model");

  AugmentResult result;
  auto config_rng = SplitMix64::stream(spec.seed, streams::kConfig);
  result.config = sample_config(spec, config_rng);

  std::vector<RangeMap> maps;
  maps.reserve(spec.n_mix);
  for (std::size_t i = 0; i < spec.n_mix; ++i) {
    auto pose_rng = SplitMix64::stream(spec.seed, streams::kPoseBase + i);
    auto motion_rng = SplitMix64::stream(spec.seed, streams::kMotionBase + i);
    const Pose pose = sample_pose(spec, pose_rng);
    const MotionParams motion = sample_motion(motion_rng, result.config.spin_rate_hz, spec.motion_ranges());

    RenderOptions render_options;
    render_options.workers = options.workers;
    const bool identity = pose.rotation() == Mat3::Identity() && pose.translation() == Vec3::Zero();
    if (!identity) render_options.pose = pose;
    maps.push_back(distort(render(worlds[i].get(), result.config, render_options), motion, spec.distortion));

    result.poses.push_back(pose);
    result.motions.push_back(motion);
  }

  if (spec.n_mix == 1) {
    result.sectors = {Sector{0.0, kTwoPi, 0}};
  } else {
    auto sector_rng = SplitMix64::stream(spec.seed, streams::kSectors);
    result.sectors = sample_sectors(sector_rng, spec.n_mix);
  }
  result.map = spec.n_mix == 1 ? std::move(maps.front()) : mix(maps, result.sectors);
  result.cloud = extract_cloud(result.map);
  result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

AugmentResult augment(std::span<const WorldModel> worlds, const AugmentSpec& spec, const AugmentOptions& options) {
  std::vector<WorldRef> refs(worlds.begin(), worlds.end());
  return augment(std::span<const WorldRef>(refs), spec, options);
}

}  // namespace lidomaug
