#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "lidomaug/dataset_io.hpp"
#include "lidomaug/synthetic.hpp"
#include "support.hpp"

using namespace lidomaug;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lidomaug");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// key=value pairs of the first output line containing `first_key=`.
std::map<std::string, std::string> fields(const std::string& text, const std::string& first_key) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(first_key + "=", 0) != 0) continue;
    std::map<std::string, std::string> kv;
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      const auto eq = w.find('=');
      if (eq != std::string::npos) kv[w.substr(0, eq)] = w.substr(eq + 1);
    }
    return kv;
  }
  return {};
}

std::string value_of(const std::string& text, const std::string& key) { return fields(text, key)[key]; }

std::string bytes_of(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_sequence(const fs::path& dir, const std::vector<LabeledFrame>& frames) {
  fs::create_directories(dir / "velodyne");
  fs::create_directories(dir / "labels");
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char stem[16];
    std::snprintf(stem, sizeof stem, "%06zu", i);
    write_scan(frames[i].cloud, (dir / "velodyne" / (std::string(stem) + ".bin")).string());
    const std::vector<std::uint32_t> raw(frames[i].cloud.labels.begin(), frames[i].cloud.labels.end());
    write_labels(raw, (dir / "labels" / (std::string(stem) + ".label")).string());
    poses.push_back(frames[i].pose);
  }
  write_poses(poses, (dir / "poses.txt").string());
}

/// Two cached synthetic worlds shared by the augment tests.
struct Worlds {
  testing::TempDir dir{"cli_worlds"};
  std::string a = dir.file("a.world");
  std::string b = dir.file("b.world");
  Worlds() {
    REQUIRE(run_cli({"build-world", "--synthetic", "60000", "--synthetic-seed", "1", "--out", a}).code == 0);
    REQUIRE(run_cli({"build-world", "--synthetic", "60000", "--synthetic-seed", "2", "--out", b}).code == 0);
  }
};

const Worlds& worlds() {
  static const Worlds w;
  return w;
}

struct EnvGuard {
  EnvGuard() { ::unsetenv("LIDOMAUG_SEED"); }
  ~EnvGuard() { ::unsetenv("LIDOMAUG_SEED"); }
};

}  // namespace

TEST_CASE("build-world on a three-frame sequence keeps every point") {
  testing::TempDir dir("cli_seq");
  const auto frames = synthetic_sequence(3, 1500, 3);
  write_sequence(dir.path() / "seq", frames);
  const std::string cache = dir.file("w.world");
  const Run r = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "1", "--count", "3",
                     "--out", cache});
  REQUIRE(r.code == 0);
  const auto kv = fields(r.out, "frame");
  CHECK(kv.at("frames_used") == "3");
  CHECK(kv.at("points") == std::to_string(3 * 1500));
  CHECK(load_world(cache).world.size() == 3 * 1500);

  const Run again = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "1", "--count", "3",
                         "--out", dir.file("w2.world")});
  CHECK(fields(again.out, "frame").at("cache_hash") == kv.at("cache_hash"));
  CHECK(bytes_of(cache) == bytes_of(dir.file("w2.world")));

  const Run strided = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--stride", "2", "--count",
                           "3", "--out-dir", dir.file("all"), "--workers", "2"});
  REQUIRE(strided.code == 0);
  CHECK(fs::exists(dir.path() / "all" / "000000.world"));
  CHECK(fs::exists(dir.path() / "all" / "000002.world"));
  CHECK_FALSE(fs::exists(dir.path() / "all" / "000001.world"));
}

TEST_CASE("build-world with box tracks accumulates object points") {
  testing::TempDir dir("cli_tracks");
  // A car-labeled block moving +1 m per frame next to a static wall.
  std::vector<LabeledFrame> frames;
  BoxTrack track;
  track.object_id = 3;
  for (int n = 0; n < 4; ++n) {
    const Pose sensor = Pose::from_translation(Vec3(1.5 * n, 0, 0));
    const Pose placement = Pose::from_translation(Vec3(10.0 + n, 3, 0));
    PointCloud world_points;
    for (int i = 0; i < 50; ++i) world_points.push_back(placement.apply(Vec3(-1.5 + 0.06 * i, 0.3, 0.2)), 0.5f, 10, 0);
    for (int i = 0; i < 30; ++i) world_points.push_back(Vec3(0.5 * i, -8, 0.5), 0.2f, 50, 0);
    LabeledFrame f;
    f.cloud = transformed(world_points, sensor.inverse());
    f.pose = sensor;
    f.time_index = n;
    frames.push_back(f);
    TrackEntry e;
    e.frame = n;
    e.box.center = placement.translation();
    e.box.half_extents = Vec3(2.0, 1.0, 1.0);
    e.motion = n == 0 ? Pose() : Pose::from_translation(Vec3(1, 0, 0));
    track.entries.push_back(e);
  }
  write_sequence(dir.path() / "seq", frames);
  const std::vector<BoxTrack> tracks{track};
  {
    std::ofstream(dir.file("tracks.txt")) << format_tracks(tracks);
  }
  const Run r = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "2", "--count", "4",
                     "--dynamic-tracks", dir.file("tracks.txt"), "--out", dir.file("w.world")});
  REQUIRE(r.code == 0);
  CHECK(fields(r.out, "frame").at("object_points") == std::to_string(4 * 50));
  CHECK(fields(r.out, "frame").at("static_points") == std::to_string(4 * 30));

  const Run plain = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "2", "--count", "4",
                         "--out", dir.file("p.world")});
  CHECK(fields(plain.out, "frame").at("object_points") == "0");
  CHECK(fields(plain.out, "frame").at("cache_hash") != fields(r.out, "frame").at("cache_hash"));

  const Run window = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "2", "--count", "4",
                          "--dynamic-window", "--out", dir.file("d.world")});
  REQUIRE(window.code == 0);
  const Run window5 = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "2", "--count",
                           "4", "--dynamic-window", "5", "--out", dir.file("d5.world")});
  CHECK(fields(window.out, "frame").at("cache_hash") == fields(window5.out, "frame").at("cache_hash"));
  const Run window1 = run_cli({"build-world", "--sequence", (dir.path() / "seq").string(), "--frame", "2", "--count",
                           "4", "--dynamic-window", "1", "--out", dir.file("d1.world")});
  CHECK(fields(window1.out, "frame").at("dynamic_points") == "50");
}

TEST_CASE("build-world reports every missing file and exits with a data error") {
  testing::TempDir dir("cli_missing");
  fs::create_directories(dir.path() / "velodyne");
  PointCloud c;
  c.push_back(Vec3(1, 1, 1), 0.f, 0, 0);
  write_scan(c, (dir.path() / "velodyne" / "000000.bin").string());
  const Run r = run_cli({"build-world", "--sequence", dir.path().string(), "--frame", "0", "--out", dir.file("w.world")});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("poses.txt") != std::string::npos);
  CHECK(r.err.find("000000.label") != std::string::npos);
}

TEST_CASE("augment with the same seed writes identical files") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_seed");
  for (const char* run : {"x", "y"}) {
    const Run r = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "42", "--out-prefix",
                       dir.file(std::string(run) + "/frame"), "--ply"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("seed=42 seed_source=flag\n", 0) == 0);
  }
  for (const char* ext : {".bin", ".label", ".png", ".ply"}) {
    const std::string a = bytes_of(dir.file(std::string("x/frame") + ext));
    CHECK_FALSE(a.empty());
    CHECK(a == bytes_of(dir.file(std::string("y/frame") + ext)));
  }
  const Run other = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "43"});
  CHECK(value_of(other.out, "frame") == "0");
  const Run first = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "42"});
  CHECK(fields(first.out, "frame").at("map_hash") != fields(other.out, "frame").at("map_hash"));
}

TEST_CASE("batch augment matches single runs and ignores the worker count") {
  EnvGuard env;
  const Worlds& w = worlds();
  const Run batch1 = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "100", "--count", "4"});
  const Run batch3 = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "100", "--count", "4", "--workers", "3"});
  REQUIRE(batch1.code == 0);
  CHECK(batch1.out == batch3.out);
  const Run single = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "102"});
  std::istringstream lines(batch1.out);
  std::string line, third;
  while (std::getline(lines, line)) {
    if (line.rfind("frame=2 ", 0) == 0) third = line;
  }
  CHECK(fields(third, "frame").at("map_hash") == fields(single.out, "frame").at("map_hash"));
}

TEST_CASE("a fixed V32 sensor gives a 32 x 2048 map") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_v32");
  const Run r = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "5", "--preset", "V32",
                     "--no-random-config", "--out-prefix", dir.file("f")});
  REQUIRE(r.code == 0);
  const auto kv = fields(r.out, "frame");
  CHECK(kv.at("channels") == "32");
  CHECK(kv.at("width") == "2048");
  const Gray16Image img = read_png16(dir.file("f.png"));
  CHECK(img.height == 32);
  CHECK(img.width == 2048);
}

TEST_CASE("one unmoved world through augment equals a plain render") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_identity");
  const Run a = run_cli({"augment", "--world", w.a, "--seed", "8", "--n-mix", "1", "--identity", "--preset", "V64",
                     "--no-random-config", "--out-prefix", dir.file("aug")});
  REQUIRE(a.code == 0);
  const Run r = run_cli({"render", "--world", w.a, "--preset", "V64", "--out-prefix", dir.file("plain")});
  REQUIRE(r.code == 0);
  for (const char* ext : {".bin", ".label", ".png"}) {
    CHECK(bytes_of(dir.file(std::string("aug") + ext)) == bytes_of(dir.file(std::string("plain") + ext)));
  }
}

TEST_CASE("seed precedence is flag, environment, config file, generated") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_prec");
  {
    std::ofstream(dir.file("spec.txt")) << "seed = 11\nn_mix = 1\n";
  }
  const std::vector<std::string> base{"augment", "--world", w.a, "--config", dir.file("spec.txt")};
  CHECK(run_cli(base).out.rfind("seed=11 seed_source=config\n", 0) == 0);
  ::setenv("LIDOMAUG_SEED", "22", 1);
  CHECK(run_cli(base).out.rfind("seed=22 seed_source=env\n", 0) == 0);
  auto with_flag = base;
  with_flag.insert(with_flag.end(), {"--seed", "33"});
  CHECK(run_cli(with_flag).out.rfind("seed=33 seed_source=flag\n", 0) == 0);
  ::unsetenv("LIDOMAUG_SEED");
  const Run generated = run_cli({"augment", "--world", w.a, "--n-mix", "1"});
  REQUIRE(generated.code == 0);
  CHECK(generated.out.find("seed_source=generated") != std::string::npos);

  // The echoed seed reproduces the run.
  const std::string seed = value_of(generated.out, "seed");
  const Run replay = run_cli({"augment", "--world", w.a, "--n-mix", "1", "--seed", seed});
  CHECK(fields(replay.out, "frame").at("map_hash") == fields(generated.out, "frame").at("map_hash"));
}

TEST_CASE("the dumped spec replays the same output") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_dump");
  const Run a = run_cli({"augment", "--world", w.a, "--world", w.b, "--seed", "77", "--speed-kmh-max", "30",
                     "--dump-spec", dir.file("spec.txt")});
  REQUIRE(a.code == 0);
  const Run b = run_cli({"augment", "--world", w.a, "--world", w.b, "--config", dir.file("spec.txt")});
  CHECK(b.out.rfind("seed=77 seed_source=config\n", 0) == 0);
  CHECK(fields(a.out, "frame").at("map_hash") == fields(b.out, "frame").at("map_hash"));
}

TEST_CASE("bench with one iteration reports fps as 1000 over the latency") {
  EnvGuard env;
  const Worlds& w = worlds();
  const Run r = run_cli({"bench", "--world", w.a, "--world", w.b, "--seed", "3", "--iterations", "1", "--warmup", "0"});
  REQUIRE(r.code == 0);
  const double median = std::stod(value_of(r.out, "latency_median_ms"));
  const double fps = std::stod(value_of(r.out, "fps"));
  CHECK(median > 0.0);
  CHECK(value_of(r.out, "latency_min_ms") == value_of(r.out, "latency_median_ms"));
  CHECK(value_of(r.out, "latency_p99_ms") == value_of(r.out, "latency_median_ms"));
  CHECK(fps == doctest::Approx(1000.0 / median).epsilon(1e-8));
  CHECK(value_of(r.out, "iterations") == "1");
  CHECK(value_of(r.out, "world_points") == "120000");
  CHECK(value_of(r.out, "reference_fps") == "330");
  CHECK(value_of(r.out, "config") == "random");

  const Run again = run_cli({"bench", "--world", w.a, "--world", w.b, "--seed", "3", "--iterations", "3"});
  const Run third = run_cli({"bench", "--world", w.a, "--world", w.b, "--seed", "3", "--iterations", "3"});
  CHECK(value_of(again.out, "output_hash") == value_of(third.out, "output_hash"));
}

TEST_CASE("render, distort, mix and inspect run end to end") {
  EnvGuard env;
  const Worlds& w = worlds();
  testing::TempDir dir("cli_misc");
  CHECK(run_cli({"render", "--world", w.a, "--preset", "O64", "--yaw", "0.3", "--out-prefix", dir.file("r")}).code == 0);
  const Run d = run_cli({"distort", "--world", w.a, "--speed-kmh", "72", "--out-prefix", dir.file("d")});
  CHECK(d.code == 0);
  CHECK(value_of(d.out, "world_points") == "60000");
  const Run m = run_cli({"mix", "--world", w.a, "--world", w.b, "--cuts", "3.14159", "--out-prefix", dir.file("m")});
  REQUIRE(m.code == 0);
  CHECK(m.out.find("source=1") != std::string::npos);

  const Run world = run_cli({"inspect", w.a});
  CHECK(world.code == 0);
  CHECK(fields(world.out, "type").at("points") == "60000");
  CHECK(fields(run_cli({"inspect", dir.file("r.png")}).out, "type").at("height") == "64");
  CHECK(fields(run_cli({"inspect", dir.file("r.bin")}).out, "type").at("type") == "scan");
  CHECK(fields(run_cli({"inspect", dir.file("r.label")}).out, "type").at("type") == "labels");
}

TEST_CASE("exit codes separate usage errors from data errors") {
  EnvGuard env;
  const Worlds& w = worlds();
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"augment", "--bogus"}).code == cli::kExitUsage);
  CHECK(run_cli({"augment", "--world", w.a, "--seed", "abc"}).code == cli::kExitUsage);
  CHECK(run_cli({"augment", "--world", w.a, "--seed", "-4"}).code == cli::kExitUsage);
  CHECK(run_cli({"augment", "--world", w.a, "--seed", "1", "--n-mix", "2"}).code == cli::kExitUsage);
  CHECK(run_cli({"augment", "--world", w.a, "--seed", "1", "--channels-min", "200"}).code == cli::kExitUsage);
  CHECK(run_cli({"render", "--world", w.a, "--preset", "V99"}).code == cli::kExitUsage);
  ::setenv("LIDOMAUG_SEED", "zz", 1);
  CHECK(run_cli({"augment", "--world", w.a, "--n-mix", "1"}).code == cli::kExitUsage);
  ::unsetenv("LIDOMAUG_SEED");

  testing::TempDir dir("cli_exit");
  CHECK(run_cli({"augment", "--world", dir.file("none.world"), "--seed", "1", "--n-mix", "1"}).code == cli::kExitData);
  {
    std::ofstream(dir.file("junk.world")) << "not a world";
  }
  CHECK(run_cli({"augment", "--world", dir.file("junk.world"), "--seed", "1", "--n-mix", "1"}).code == cli::kExitData);
  CHECK(run_cli({"inspect", dir.file("none.bin")}).code == cli::kExitData);
}
