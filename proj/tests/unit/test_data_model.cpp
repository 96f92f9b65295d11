#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "omnitraj/config.hpp"
#include "omnitraj/dataset_io.hpp"
#include "omnitraj/error.hpp"
#include "omnitraj/generator.hpp"
#include "omnitraj/modality.hpp"
#include "omnitraj/network.hpp"
#include "omnitraj/pipeline.hpp"
#include "omnitraj/preprocess.hpp"
#include "omnitraj/random.hpp"
#include "oracles.hpp"

using namespace omnitraj;
namespace fs = std::filesystem;

namespace {

std::vector<Point> random_walk(Rng& rng, int n, double step = 1.0) {
  std::vector<Point> pts{{rng.uniform(-5, 5), rng.uniform(-5, 5)}};
  for (int i = 1; i < n; ++i)
    pts.push_back({pts.back().x + rng.uniform(-step, step), pts.back().y + rng.uniform(-step, step)});
  return pts;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("omnitraj_dm_" + name); }

}  // namespace

TEST_CASE("lattice networks have the expected edge counts") {
  const auto a = generate_network(1, 4, 4, 0.0);
  CHECK(a.node_count() == 16);
  CHECK(a.segment_count() == 24);
  const auto b = generate_network(1, 2, 2, 0.0);
  CHECK(b.node_count() == 4);
  CHECK(b.segment_count() == 4);
  CHECK(a.is_connected());
}

TEST_CASE("network generation is deterministic and validates arguments") {
  CHECK(generate_network(7, 8, 8, 0.2) == generate_network(7, 8, 8, 0.2));
  CHECK_FALSE(generate_network(7, 8, 8, 0.2) == generate_network(8, 8, 8, 0.2));
  CHECK_THROWS_AS(generate_network(1, 1, 4, 0.0), ParameterError);
  CHECK_THROWS_AS(generate_network(1, 4, 4, 0.5), ParameterError);
}

TEST_CASE("network file round trip") {
  const auto net = generate_network(3, 5, 6, 0.25);
  const auto path = temp_file("net.jsonl");
  net.save(path);
  CHECK(RoadNetwork::load(path) == net);
  fs::remove(path);
}

TEST_CASE("disconnected networks are rejected by the walker") {
  RoadNetwork net({{0, 0}, {1, 0}, {5, 5}, {6, 5}}, {{0, 1}, {2, 3}});
  CHECK_FALSE(net.is_connected());
  CHECK_THROWS_AS(generate_trajectories(net, 3, 1, 3, 5), GenerationError);
}

TEST_CASE("generated trajectories meet the contract") {
  const auto net = generate_network(1, 4, 4, 0.0);
  const auto walks = generate_trajectories(net, 10, 3, 5, 10);
  REQUIRE(walks.size() == 10);
  for (const auto& w : walks) {
    CHECK(w.trajectory.size() >= 20);
    CHECK(w.road.trajectory_id == w.trajectory.id);
    CHECK(w.road.segment_ids.size() >= 5);
    CHECK(w.road.segment_ids.size() <= 10);
    for (std::size_t i = 1; i < w.road.segment_ids.size(); ++i)
      CHECK(w.road.segment_ids[i] != w.road.segment_ids[i - 1]);
  }
  const auto again = generate_trajectories(net, 10, 3, 5, 10);
  for (std::size_t i = 0; i < walks.size(); ++i) {
    CHECK(walks[i].trajectory == again[i].trajectory);
    CHECK(walks[i].road == again[i].road);
  }
  CHECK_THROWS_AS(generate_trajectories(net, 10, 3, 2, 10), ParameterError);
}

TEST_CASE("mean road length of a large corpus sits inside the hop range") {
  const auto net = generate_network(5, 8, 8, 0.2);
  const auto walks = generate_trajectories(net, 2000, 5, 8, 20);
  double total = 0;
  for (const auto& w : walks) total += static_cast<double>(w.road.segment_ids.size());
  const double mean = total / 2000.0;
  CHECK(mean >= 8.0);
  CHECK(mean <= 20.0);
}

TEST_CASE("replayed road walks stay within the noise bound of the trajectory") {
  const auto net = generate_network(2, 6, 6, 0.2);
  WalkOptions opts;
  const auto walks = generate_trajectories(net, 50, 9, opts);
  for (const auto& w : walks) {
    const auto line = replay_road_walk(net, w.road);
    for (const auto& p : w.trajectory.points) {
      double best = 1e9;
      for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, oracle::point_segment(p, line[i], line[i + 1]));
      // Per-coordinate noise of at most `noise` is at most noise * sqrt(2) away.
      CHECK(best <= opts.noise * std::sqrt(2.0) + 1e-12);
    }
  }
}

TEST_CASE("normalize examples") {
  const auto a = normalize({1, {{0, 0}, {2, 0}}});
  CHECK(a.points == std::vector<Point>{{-1, 0}, {1, 0}});
  const auto b = normalize({2, {{5, 5}, {5, 7}}});
  CHECK(b.points == std::vector<Point>{{0, -1}, {0, 1}});
  CHECK_THROWS_AS(normalize({3, {{1, 1}, {1, 1}}}), DegenerateInputError);
}

TEST_CASE("normalize reaches unit extent and is idempotent") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory t{trial, random_walk(rng, 30)};
    const auto n = normalize(t);
    double cx = 0, cy = 0;
    for (const auto& p : t.points) cx += p.x, cy += p.y;
    cx /= 30, cy /= 30;
    double extent = 0;
    for (const auto& p : t.points) extent = std::max({extent, std::abs(p.x - cx), std::abs(p.y - cy)});
    double max_abs = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(n.points[i].x == doctest::Approx((t.points[i].x - cx) / extent).epsilon(1e-12));
      max_abs = std::max({max_abs, std::abs(n.points[i].x), std::abs(n.points[i].y)});
    }
    CHECK(max_abs == doctest::Approx(1.0).epsilon(1e-15));
    const auto twice = normalize(n);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(std::abs(twice.points[i].x - n.points[i].x) <= 1e-12);
      CHECK(std::abs(twice.points[i].y - n.points[i].y) <= 1e-12);
    }
  }
}

TEST_CASE("resample linear fallback on a collinear pair") {
  const auto r = resample({0, {{0, 0}, {3, 0}}}, 4);
  REQUIRE(r.size() == 4);
  const std::vector<Point> want{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.points[i].x == doctest::Approx(want[i].x).epsilon(1e-12));
    CHECK(r.points[i].y == doctest::Approx(want[i].y).epsilon(1e-12));
  }
}

TEST_CASE("resample keeps endpoints and count on uniformly spaced input") {
  std::vector<Point> pts;
  for (int i = 0; i < 16; ++i) pts.push_back({0.5 * i, 0.0});
  const auto r = resample({0, pts}, 16);
  REQUIRE(r.size() == 16);
  CHECK(r.points.front() == pts.front());
  CHECK(r.points.back() == pts.back());
  for (int i = 0; i < 16; ++i) CHECK(std::abs(r.points[i].x - pts[i].x) <= 1e-9);
}

TEST_CASE("resample on a curve matches an independent natural spline") {
  const Trajectory t{0, {{0, 0}, {1, 0.8}, {2.2, 1.1}, {3, 0.2}, {4.1, -0.6}}};
  const auto plan = resample_plan(t, 50);
  REQUIRE(plan.spline);
  // Knots: normalized cumulative chord length, computed here from scratch.
  std::vector<double> knots{0.0};
  for (std::size_t i = 1; i < t.points.size(); ++i) knots.push_back(knots.back() + oracle::dist(t.points[i - 1], t.points[i]));
  for (auto& k : knots) k /= knots.back();
  REQUIRE(plan.knots.size() == knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) CHECK(std::abs(plan.knots[i] - knots[i]) <= 1e-15);

  std::vector<double> xs, ys;
  for (const auto& p : t.points) xs.push_back(p.x), ys.push_back(p.y);
  const auto r = resample(t, 50);
  REQUIRE(r.size() == 50);
  REQUIRE(plan.parameters.size() == 50);
  CHECK(plan.parameters.front() == 0.0);
  CHECK(plan.parameters.back() == 1.0);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(std::abs(r.points[i].x - oracle::natural_spline(knots, xs, plan.parameters[i])) <= 1e-9);
    CHECK(std::abs(r.points[i].y - oracle::natural_spline(knots, ys, plan.parameters[i])) <= 1e-9);
  }
  CHECK(r.points.front() == t.points.front());
  CHECK(r.points.back() == t.points.back());

  // Output spacing is even along the curve.
  double lo = 1e9, hi = 0;
  for (std::size_t i = 1; i < 50; ++i) {
    const double c = oracle::dist(r.points[i - 1], r.points[i]);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi - lo <= 1e-9);
}

TEST_CASE("resample is idempotent") {
  // Generated walks, the input distribution the encoders see.
  const auto net = generate_network(3, 6, 6, 0.2);
  const auto walks = generate_trajectories(net, 40, 17, 8, 20);
  // Smooth curved paths with a few hundred points.
  Rng rng(5);
  std::vector<Trajectory> inputs;
  for (const auto& w : walks) inputs.push_back(w.trajectory);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.5, 2.0), b = rng.uniform(0.5, 3.0), ph = rng.uniform(0, 6);
    Trajectory t{100 + trial, {}};
    for (int i = 0; i < 200; ++i) {
      const double s = i / 199.0;
      t.points.push_back({4 * s + 0.3 * std::sin(a * 6 * s + ph), std::cos(b * 4 * s) + 0.2 * std::sin(9 * s)});
    }
    inputs.push_back(t);
  }
  for (const auto& t : inputs)
    for (int L : {32, 64}) {
      const auto once = resample(t, L);
      const auto twice = resample(once, L);
      for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(std::abs(once.points[i].x - twice.points[i].x) <= 1e-9);
        CHECK(std::abs(once.points[i].y - twice.points[i].y) <= 1e-9);
      }
    }
}

TEST_CASE("resample stays well formed on zig-zag input it cannot space evenly") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory t{trial, random_walk(rng, 25)};
    const auto once = resample(t, 64);
    REQUIRE(once.size() == 64);
    CHECK(once.points.front() == t.points.front());
    CHECK(once.points.back() == t.points.back());
    const auto plan = resample_plan(t, 64);
    for (std::size_t i = 1; i < 64; ++i) CHECK(plan.parameters[i] > plan.parameters[i - 1]);
    const auto twice = resample(once, 64);
    for (std::size_t i = 0; i < 64; ++i) CHECK(distance(once.points[i], twice.points[i]) <= 1e-9);
  }
}

TEST_CASE("topology examples") {
  CHECK(extract_topology({0, {{0, 0}, {1, 0}, {2, 0}}}, 0.01, 0.2).points == std::vector<Point>{{0, 0}, {2, 0}});
  CHECK(extract_topology({0, {{0, 0}, {1, 0}, {1, 1}}}, 0.01, std::numbers::pi / 6).points ==
        std::vector<Point>{{0, 0}, {1, 0}, {1, 1}});
}

TEST_CASE("topology of a noisy L-shaped walk matches a recursive oracle") {
  Rng rng(13);
  std::vector<Point> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({i / 99.0 * 4.0 + rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)});
  for (int i = 1; i <= 100; ++i) pts.push_back({4.0 + rng.uniform(-0.01, 0.01), i / 100.0 * 4.0 + rng.uniform(-0.01, 0.01)});
  const Trajectory t{0, pts};
  const TopologyOptions opts;
  const auto topo = topology_view(t, opts);

  const auto normalized = normalize(t);
  const auto dp = oracle::douglas_peucker(normalized.points, opts.epsilon);
  std::vector<Point> want{t.points[dp.front()]};
  for (std::size_t j = 1; j + 1 < dp.size(); ++j) {
    const auto& a = normalized.points[dp[j - 1]];
    const auto& b = normalized.points[dp[j]];
    const auto& c = normalized.points[dp[j + 1]];
    const double cosv = ((b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y)) / (oracle::dist(a, b) * oracle::dist(b, c));
    if (std::acos(std::clamp(cosv, -1.0, 1.0)) >= opts.angle_min) want.push_back(t.points[dp[j]]);
  }
  want.push_back(t.points[dp.back()]);
  CHECK(topo.points == want);
  CHECK(topo.points.size() >= 3);
  CHECK(topo.points.size() <= 15);
}

TEST_CASE("topology output is an ordered subsequence with both endpoints") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Trajectory t{trial, random_walk(rng, 40)};
    const auto topo = topology_view(t);
    REQUIRE(topo.points.size() >= 2);
    CHECK(topo.points.front() == t.points.front());
    CHECK(topo.points.back() == t.points.back());
    std::size_t at = 0;
    for (const auto& p : topo.points) {
      while (at < t.points.size() && !(t.points[at] == p)) ++at;
      CHECK(at < t.points.size());
      ++at;
    }
  }
}

TEST_CASE("grid cells and region extraction") {
  const GridSpec grid({0, 0, 16, 16}, 16, 16);
  CHECK(extract_regions({0, {{0.5, 0.5}}}, grid).region_ids == std::vector<RegionId>{0});
  CHECK(extract_regions({0, {{0.5, 0.5}, {1.5, 0.5}, {2.5, 0.5}}}, grid).region_ids ==
        std::vector<RegionId>{0, 1, 2});
  // Shared boundaries go to the lower-index cell; the outer border clamps.
  CHECK(grid.cell_of({1.0, 0.5}) == 0);
  CHECK(grid.cell_of({0.5, 1.0}) == 0);
  CHECK(grid.cell_of({16.0, 16.0}) == 255);
  CHECK(grid.cell_of({0.0, 0.0}) == 0);
  CHECK(grid.cell_of({-3.0, 20.0}) == 15 * 16);
  CHECK_THROWS_AS(extract_regions({0, {}}, grid), ParameterError);
}

TEST_CASE("region extraction matches a per-point brute force") {
  const GridSpec grid({-2, -3, 6, 5}, 16, 16);
  Rng rng(3);
  const double cw = 8.0 / 16, ch = 8.0 / 16;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(-2, 6), rng.uniform(-3, 5)});
    std::vector<RegionId> want;
    for (const auto& p : pts) {
      int col = std::clamp(static_cast<int>(std::ceil((p.x + 2) / cw)) - 1, 0, 15);
      int row = std::clamp(static_cast<int>(std::ceil((p.y + 3) / ch)) - 1, 0, 15);
      const RegionId id = row * 16 + col;
      if (std::find(want.begin(), want.end(), id) == want.end()) want.push_back(id);
    }
    CHECK(extract_regions({trial, pts}, grid).region_ids == want);
  }
}

TEST_CASE("densifying a polyline never loses regions") {
  const GridSpec grid({0, 0, 8, 8}, 16, 16);
  Rng rng(12);
  std::vector<Point> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({rng.uniform(0, 8), rng.uniform(0, 8)});
  std::vector<Point> dense;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    for (int s = 0; s < 10; ++s) {
      const double f = s / 10.0;
      dense.push_back({pts[i].x + f * (pts[i + 1].x - pts[i].x), pts[i].y + f * (pts[i + 1].y - pts[i].y)});
    }
  dense.push_back(pts.back());
  const auto coarse = extract_regions({0, pts}, grid).region_ids;
  const auto fine = extract_regions({0, dense}, grid).region_ids;
  for (auto id : coarse) CHECK(std::find(fine.begin(), fine.end(), id) != fine.end());
  // Every added cell is crossed by the polyline: it contains a dense sample.
  for (auto id : fine) {
    const auto box = grid.cell_box(id);
    bool hit = false;
    for (const auto& p : dense) hit = hit || box.contains(p);
    CHECK(hit);
  }
}

TEST_CASE("dataset file round trip and view extraction") {
  CorpusOptions opts;
  opts.train = 30;
  opts.test = 5;
  const auto corpus = generate_corpus(opts);
  REQUIRE(corpus.train.size() == 30);
  REQUIRE(corpus.test.size() == 5);
  CHECK(corpus.test.front().trajectory.id == 30);
  for (const auto& r : corpus.train) {
    REQUIRE(r.road.has_value());
    REQUIRE(r.region.has_value());
    REQUIRE(r.topology.has_value());
    CHECK(r.region->region_ids == extract_regions(r.trajectory, corpus.grid).region_ids);
    CHECK(*r.topology == topology_view(r.trajectory));
    for (const auto& p : r.trajectory.points) CHECK(corpus.grid.box().contains(p));
  }
  const auto path = temp_file("data.jsonl");
  save_dataset(path, corpus.train);
  CHECK(load_dataset(path) == corpus.train);
  fs::remove(path);
  CHECK_THROWS_AS(decode_record("{\"id\": 1}"), DataError);
  CHECK_THROWS_AS(decode_record("not json"), DataError);
}

TEST_CASE("key-value config parsing and canonical serialization") {
  const auto kv = KeyValueConfig::parse("# comment\n b = 2\na=hello world\n\nc = 0.25\n");
  CHECK(kv.get_string("a", "") == "hello world");
  CHECK(kv.get_int("b", 0) == 2);
  CHECK(kv.get_double("c", 0) == 0.25);
  CHECK(kv.serialize() == "a = hello world\nb = 2\nc = 0.25\n");
  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(kv.get_int("a", 0), ConfigError);
}
