#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "lidomaug/error.hpp"
#include "lidomaug/synthetic.hpp"
#include "lidomaug/world_model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lidomaug;
using namespace oracle;

namespace {

std::vector<Pose> line_poses(const std::vector<double>& xs) {
  std::vector<Pose> poses;
  for (double x : xs) poses.push_back(Pose::from_translation(Vec3(x, 0, 0)));
  return poses;
}

}  // namespace

TEST_CASE("adjacency picks the nearest centers on a line") {
  const auto poses = line_poses({0, 1, 5, 6});
  CHECK(select_adjacent(poses, 0, 2) == std::vector<std::int64_t>{0, 1});
  CHECK(select_adjacent(poses, 0, 4) == std::vector<std::int64_t>{0, 1, 2, 3});
  CHECK(select_adjacent(poses, 2, 2) == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("adjacency is geometric, not temporal") {
  const auto poses = line_poses({0, 10, 0.2});
  CHECK(select_adjacent(poses, 0, 2) == std::vector<std::int64_t>{0, 2});
}

TEST_CASE("adjacency ties prefer the smaller offset magnitude, then the negative side") {
  const auto poses = line_poses({-1, 0, 1});
  CHECK(select_adjacent(poses, 1, 2) == std::vector<std::int64_t>{-1, 0});
  const auto far = line_poses({-2, -1, 0, 1, 2});
  CHECK(select_adjacent(far, 2, 4) == std::vector<std::int64_t>{-2, -1, 0, 1});
}

TEST_CASE("adjacency rejects bad arguments") {
  const std::vector<Pose> none;
  CHECK_THROWS_AS(select_adjacent(none, 0, 1), Error);
  const auto poses = line_poses({0, 1});
  CHECK_THROWS_AS(select_adjacent(poses, 0, 3), Error);
  CHECK_THROWS_AS(select_adjacent(poses, 2, 1), Error);
}

TEST_CASE("adjacency matches the rank oracle and the exhaustive minimum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    std::vector<Pose> poses;
    for (std::size_t i = 0; i < n; ++i) {
      // Quantized translations make exact distance ties common.
      Pose p = random_pose(rng, 5);
      const Vec3 t = p.translation().array().round();
      poses.push_back(Pose(p.rotation(), t));
    }
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t count = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    const auto got = select_adjacent(poses, t, count);
    CHECK(got == rank_oracle(poses, t, count));
    double sum = 0;
    for (auto k : got) sum += (frame_center(poses[t + k]) - frame_center(poses[t])).norm();
    CHECK(sum == doctest::Approx(exhaustive_min_sum(poses, t, count)).epsilon(1e-12));
  }
}

TEST_CASE("aggregating only the reference frame returns it unchanged") {
  std::mt19937_64 rng(12);
  const PointCloud cloud = testing::random_cloud(rng, 500, 20);
  std::vector<LabeledFrame> frames{frame_with(cloud, random_pose(rng, 10), 0),
                                   frame_with(cloud, random_pose(rng, 10), 1)};
  const std::vector<std::int64_t> k{0};
  const WorldModel w = aggregate_static(frames, 1, k);
  CHECK(w.cloud.points == cloud.points);
  CHECK(w.cloud.labels == cloud.labels);
  CHECK(w.cloud.intensity == cloud.intensity);
  CHECK(std::all_of(w.cloud.sources.begin(), w.cloud.sources.end(), [](std::uint32_t s) { return s == 1; }));
}

TEST_CASE("aggregation matches homogeneous matrix composition") {
  std::mt19937_64 rng(13);
  std::vector<LabeledFrame> frames;
  for (int n = 0; n < 5; ++n) frames.push_back(frame_with(testing::random_cloud(rng, 50, 15), random_pose(rng, 20), n));
  const std::vector<std::int64_t> k{-2, -1, 0, 2};
  const std::size_t t = 2;
  const WorldModel w = aggregate_static(frames, t, k);

  std::size_t expected = 0;
  for (auto o : k) expected += frames[t + o].cloud.size();
  REQUIRE(w.size() == expected);

  std::size_t i = 0;
  for (auto o : k) {
    const auto& f = frames[t + o];
    const Eigen::Matrix4d m = frames[t].pose.homogeneous().inverse() * f.pose.homogeneous();
    for (std::size_t j = 0; j < f.cloud.size(); ++j, ++i) {
      const Eigen::Vector4d h = m * f.cloud.points[j].homogeneous();
      CHECK((w.cloud.points[i] - h.head<3>()).norm() <= 1e-9);
      CHECK(w.cloud.labels[i] == f.cloud.labels[j]);
      CHECK(w.cloud.sources[i] == t + o);
    }
  }
}

TEST_CASE("pure translation between frames shifts points by the rotated offset") {
  const Pose a = Pose::from_yaw(0.5, Vec3(3, 4, 0));
  const Vec3 d(2, -1, 0.5);
  const Pose b = Pose(a.rotation(), a.translation() + d);
  PointCloud c;
  c.push_back(Vec3(1, 1, 1), 0.f, 1, 0);
  std::vector<LabeledFrame> frames{frame_with(c, a, 0), frame_with(c, b, 1)};
  const std::vector<std::int64_t> k{0, 1};
  const WorldModel w = aggregate_static(frames, 0, k);
  const Vec3 expected = Vec3(1, 1, 1) + a.rotation().transpose() * d;
  CHECK((w.cloud.points[1] - expected).norm() <= 1e-12);
}

TEST_CASE("aggregation is invariant under a common rigid transform of all poses") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabeledFrame> frames;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int i = 0; i < n; ++i) frames.push_back(frame_with(testing::random_cloud(rng, 40, 30), random_pose(rng, 50), i));
    const Pose g = random_pose(rng, 100);
    auto moved = frames;
    for (auto& f : moved) f.pose = g.compose(f.pose);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::vector<Pose> poses;
    for (const auto& f : frames) poses.push_back(f.pose);
    const auto k = select_adjacent(poses, t, std::min<std::size_t>(n, 4));
    const WorldModel w1 = aggregate_static(frames, t, k);
    const WorldModel w2 = aggregate_static(moved, t, k);
    REQUIRE(w1.size() == w2.size());
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK((w1.cloud.points[i] - w2.cloud.points[i]).norm() <= 1e-9);
  }
}

TEST_CASE("aggregation rejects offsets without a frame") {
  std::mt19937_64 rng(15);
  std::vector<LabeledFrame> frames{frame_with(testing::random_cloud(rng, 10, 5), Pose(), 0)};
  const std::vector<std::int64_t> k{0, 1};
  CHECK_THROWS_AS(aggregate_static(frames, 0, k), Error);
}

TEST_CASE("single-frame accumulation returns exactly the in-box points") {
  std::mt19937_64 rng(16);
  const MovingObject m = moving_object(1, Pose(), rng);
  const PointCloud acc = accumulate_dynamic(m.frames, m.track);
  REQUIRE(acc.size() == m.body.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CHECK((acc.points[i] - m.frames[0].pose.apply(m.frames[0].cloud.points[i])).norm() == 0.0);
  }
}

TEST_CASE("accumulated points of a translating object collapse onto its first placement") {
  std::mt19937_64 rng(17);
  const MovingObject m = moving_object(3, Pose::from_translation(Vec3(1, 0, 0)), rng);
  const PointCloud acc = accumulate_dynamic(m.frames, m.track);
  REQUIRE(acc.size() == 3 * m.body.size());
  const Pose first = Pose::from_translation(Vec3(10, 3, 0));
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t i = 0; i < m.body.size(); ++i) {
      CHECK((acc.points[n * m.body.size() + i] - first.apply(m.body[i])).norm() <= 1e-9);
      CHECK((acc.points[n * m.body.size() + i] - acc.points[i]).norm() <= 1e-9);
    }
  }
  for (const Vec3& p : acc.points) CHECK((p - Vec3(-40, -40, 0)).norm() > 1.0);
}

TEST_CASE("turning objects collapse too, and placement inverts accumulation") {
  std::mt19937_64 rng(18);
  const MovingObject m = moving_object(6, Pose::from_yaw(0.2, Vec3(0.8, 0.3, 0)), rng);
  const PointCloud acc = accumulate_dynamic(m.frames, m.track);
  REQUIRE(acc.size() == 6 * m.body.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CHECK((acc.points[i] - acc.points[i % m.body.size()]).norm() <= 1e-9);
  }
  for (std::int64_t n = 0; n < 6; ++n) {
    const auto placed = place_object(acc, m.track, n, m.frames[n].pose);
    REQUIRE(placed);
    for (std::size_t i = 0; i < m.body.size(); ++i) {
      CHECK((placed->points[i] - m.frames[n].cloud.points[i]).norm() <= 1e-9);
    }
  }
  CHECK_FALSE(place_object(acc, m.track, 99, Pose()));
}

TEST_CASE("frames missing from the sequence are skipped") {
  std::mt19937_64 rng(19);
  MovingObject m = moving_object(4, Pose::from_translation(Vec3(1, 0, 0)), rng);
  m.frames.erase(m.frames.begin() + 2);
  const PointCloud acc = accumulate_dynamic(m.frames, m.track);
  CHECK(acc.size() == 3 * m.body.size());
}

TEST_CASE("tracks reject zero-volume boxes and gaps") {
  std::mt19937_64 rng(20);
  MovingObject m = moving_object(3, Pose::from_translation(Vec3(1, 0, 0)), rng);
  BoxTrack flat = m.track;
  flat.entries[1].box.half_extents.z() = 0;
  CHECK_THROWS_AS(accumulate_dynamic(m.frames, flat), Error);
  BoxTrack gap = m.track;
  gap.entries[2].frame = 5;
  CHECK_THROWS_AS(accumulate_dynamic(m.frames, gap), Error);
}

TEST_CASE("oriented boxes test containment in their own frame") {
  OrientedBox b;
  b.center = Vec3(5, 5, 0);
  b.half_extents = Vec3(2, 0.5, 1);
  b.yaw = M_PI / 2;
  CHECK(b.contains(Vec3(5, 6.9, 0)));
  CHECK_FALSE(b.contains(Vec3(6.9, 5, 0)));
  CHECK(b.volume() == doctest::Approx(8.0));
}

namespace {

WorldModel world_of(const std::vector<Vec3>& pts, const std::vector<Label>& labels) {
  PointCloud c;
  for (std::size_t i = 0; i < pts.size(); ++i) c.push_back(pts[i], 0.f, labels[i], 0);
  return WorldModel::from_cloud(c);
}

}  // namespace

TEST_CASE("majority vote overwrites the minority") {
  const WorldModel w = world_of({{0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}, {0.03, 0.03, 0.03}}, {10, 10, 40});
  const VoteResult r = vote_and_propagate(w, {});
  CHECK(r.world_labels == std::vector<Label>{10, 10, 10});
}

TEST_CASE("unlabeled points without labeled neighbours stay unlabeled") {
  const WorldModel w = world_of({{0.05, 0.05, 0.05}, {5.05, 5.05, 5.05}}, {10, 0});
  const std::vector<Vec3> extra{{5.06, 5.06, 5.06}, {0.06, 0.06, 0.06}, {9, 9, 9}};
  const VoteResult r = vote_and_propagate(w, extra);
  CHECK(r.world_labels == std::vector<Label>{10, 0});
  CHECK(r.unlabeled_labels == std::vector<Label>{0, 10, 0});
}

TEST_CASE("vote ties go to the smaller class id") {
  const WorldModel w = world_of({{0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}, {0.03, 0.03, 0.03}}, {40, 10, 0});
  const VoteResult r = vote_and_propagate(w, {});
  CHECK(r.world_labels == std::vector<Label>{10, 10, 10});
  CHECK(modal_label(std::vector<Label>{40, 10}) == 10);
  CHECK(modal_label(std::vector<Label>{0, 0, 7}) == 7);
  CHECK(modal_label(std::vector<Label>{0, 0}) == 0);
}

TEST_CASE("voting matches the brute-force voter and is idempotent") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_real_distribution<double> d(-0.35, 0.35);
    std::uniform_int_distribution<int> lab(0, 4);
    std::vector<Vec3> pts;
    std::vector<Label> labels;
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(d(rng), d(rng), d(rng));
      labels.push_back(static_cast<Label>(lab(rng) * 10));
    }
    std::vector<Vec3> extra;
    for (int i = 0; i < 50; ++i) extra.emplace_back(d(rng) * 1.3, d(rng) * 1.3, d(rng) * 1.3);
    const WorldModel w = world_of(pts, labels);
    const VoteResult got = vote_and_propagate(w, extra);
    const VoteResult want = brute_force_vote(w.cloud, extra);
    CHECK(got.world_labels == want.world_labels);
    CHECK(got.unlabeled_labels == want.unlabeled_labels);

    const WorldModel once = apply_votes(w, got);
    const VoteResult again = vote_and_propagate(once, extra);
    CHECK(again.world_labels == got.world_labels);
    CHECK(again.unlabeled_labels == got.unlabeled_labels);
    CHECK(apply_votes(once, again) == once);
  }
}

TEST_CASE("voxel index groups every point into exactly one voxel") {
  std::mt19937_64 rng(22);
  const PointCloud c = testing::random_cloud(rng, 3000, 2);
  const WorldModel w = WorldModel::from_cloud(c);
  std::vector<int> seen(c.size(), 0);
  for (std::size_t v = 0; v < w.voxels.size(); ++v) {
    std::vector<Label> member_labels;
    for (auto m : w.voxels.members(v)) {
      ++seen[m];
      CHECK(w.voxels.key_of(c.points[m]) == w.voxels.key(v));
      member_labels.push_back(c.labels[m]);
    }
    CHECK(w.voxels.representative(v) == modal_label(member_labels));
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("labeled density counts labeled points per labeled voxel") {
  const WorldModel w =
      world_of({{0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}, {0.03, 0.03, 0.03}, {1.05, 0, 0}, {2.05, 0, 0}}, {10, 10, 0, 40, 0});
  CHECK(w.labeled_density() == doctest::Approx(1.5));
}

TEST_CASE("world construction with a temporal window and box tracks") {
  std::mt19937_64 rng(23);
  MovingObject m = moving_object(5, Pose::from_translation(Vec3(1, 0, 0)), rng);
  AggregationOptions options;
  options.count = 5;
  AggregationStats stats;
  const std::vector<BoxTrack> tracks{m.track};
  const WorldModel w = build_world(m.frames, 2, options, tracks, &stats);
  CHECK(stats.frames_used == 5);
  CHECK(stats.static_points == 5);  // clutter only; object points belong to the track
  CHECK(stats.object_points == 5 * m.body.size());
  CHECK(w.size() == stats.static_points + stats.object_points);

  // Object points sit at the frame-2 placement in frame-2 sensor coordinates.
  std::size_t near = 0;
  for (const Vec3& p : w.cloud.points) {
    for (const Vec3& q : m.frames[2].cloud.points) {
      if ((p - q).norm() <= 1e-9) {
        ++near;
        break;
      }
    }
  }
  CHECK(near >= 5 * m.body.size());

  AggregationOptions windowed;
  windowed.count = 5;
  windowed.dynamic_window = 2;
  AggregationStats wstats;
  build_world(m.frames, 2, windowed, {}, &wstats);
  CHECK(wstats.dynamic_points == 3 * m.body.size());
  CHECK(wstats.static_points == 5);
}

TEST_CASE("synthetic sequences aggregate to the sum of their frames") {
  const auto frames = synthetic_sequence(3, 400, 5);
  AggregationOptions options;
  options.count = 3;
  options.vote = false;
  AggregationStats stats;
  const WorldModel w = build_world(frames, 1, options, {}, &stats);
  CHECK(w.size() == 3 * 400);
  CHECK(stats.frames_used == 3);
}
