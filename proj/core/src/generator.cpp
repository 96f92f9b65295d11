#include "omnitraj/generator.hpp"

#include <algorithm>
#include <cmath>

#include "omnitraj/error.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj {

std::vector<GeneratedTrajectory> generate_trajectories(const RoadNetwork& net, int count,
                                                       std::uint64_t seed, int min_hops,
                                                       int max_hops) {
  WalkOptions opts;
  opts.min_hops = min_hops;
  opts.max_hops = max_hops;
  return generate_trajectories(net, count, seed, opts);
}

std::vector<GeneratedTrajectory> generate_trajectories(const RoadNetwork& net, int count,
                                                       std::uint64_t seed, const WalkOptions& opts,
                                                       TrajectoryId first_id) {
  require(opts.min_hops >= 3, "min_hops must be >= 3");
  require(opts.max_hops >= opts.min_hops, "max_hops must be >= min_hops");
  require(count >= 1, "count must be >= 1");
  require(opts.noise >= 0.0, "noise must be non-negative");
  if (net.segment_count() == 0 || !net.is_connected())
    throw GenerationError("road network is disconnected");

  Rng rng(seed);
  std::vector<GeneratedTrajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  const auto span = static_cast<std::uint64_t>(opts.max_hops - opts.min_hops + 1);

  for (int t = 0; t < count; ++t) {
    const int hops = opts.min_hops + static_cast<int>(rng.below(span));
    std::int32_t node = static_cast<std::int32_t>(rng.below(net.node_count()));
    std::int32_t previous = -1;
    std::vector<std::int32_t> path{node};
    std::vector<SegmentId> walk;
    for (int h = 0; h < hops; ++h) {
      const auto& inc = net.incident(node);
      std::vector<RoadNetwork::Incidence> options;
      for (const auto& e : inc)
        if (e.neighbor != previous) options.push_back(e);
      if (options.empty()) options = inc;
      const auto& pick = options[rng.below(options.size())];
      previous = node;
      node = pick.neighbor;
      path.push_back(node);
      walk.push_back(pick.segment);
    }

    // Evenly spaced samples per segment; endpoint appended once at the end.
    const int per_segment = std::max(2, static_cast<int>(std::ceil(
                                            static_cast<double>(opts.min_points) / hops)));
    Trajectory traj;
    traj.id = first_id + t;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      const Point& a = net.nodes()[path[s]];
      const Point& b = net.nodes()[path[s + 1]];
      for (int k = 0; k < per_segment; ++k) {
        const double f = static_cast<double>(k) / per_segment;
        traj.points.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
      }
    }
    traj.points.push_back(net.nodes()[path.back()]);
    for (auto& p : traj.points) {
      p.x += rng.uniform(-opts.noise, opts.noise);
      p.y += rng.uniform(-opts.noise, opts.noise);
    }

    RoadSeq road;
    road.trajectory_id = traj.id;
    for (auto id : walk)
      if (road.segment_ids.empty() || road.segment_ids.back() != id) road.segment_ids.push_back(id);
    out.push_back({std::move(traj), std::move(road)});
  }
  return out;
}

std::vector<Point> replay_road_walk(const RoadNetwork& net, const RoadSeq& road) {
  require(!road.segment_ids.empty(), "empty road sequence");
  const auto& segs = net.segments();
  for (auto id : road.segment_ids)
    if (id < 0 || static_cast<std::size_t>(id) >= segs.size())
      throw VocabularyError("segment id " + std::to_string(id) + " not in network");

  const auto& first = segs[road.segment_ids[0]];
  std::int32_t start = first.node_a;
  if (road.segment_ids.size() > 1) {
    const auto& second = segs[road.segment_ids[1]];
    if (first.node_a == second.node_a || first.node_a == second.node_b) start = first.node_b;
  }
  std::vector<Point> out{net.nodes()[start]};
  std::int32_t at = start;
  for (auto id : road.segment_ids) {
    const auto& s = segs[id];
    at = s.node_a == at ? s.node_b : s.node_a;
    out.push_back(net.nodes()[at]);
  }
  return out;
}

}  // namespace omnitraj
