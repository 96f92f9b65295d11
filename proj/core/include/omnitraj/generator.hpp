#pragma once

#include <cstdint>
#include <vector>

#include "omnitraj/geometry.hpp"
#include "omnitraj/network.hpp"

namespace omnitraj {

struct WalkOptions {
  int min_hops = 8;
  int max_hops = 20;
  int min_points = 20;
  // Half-width of the uniform per-coordinate noise added to every point.
  double noise = 0.02;
};

struct GeneratedTrajectory {
  Trajectory trajectory;
  RoadSeq road;
};

/// Random walks over `net` (no immediate U-turns unless at a dead end),
/// densified along each segment and perturbed by bounded uniform noise.
/// Trajectory ids run from `first_id` upward. Deterministic per seed.
std::vector<GeneratedTrajectory> generate_trajectories(const RoadNetwork& net, int count,
                                                       std::uint64_t seed, int min_hops,
                                                       int max_hops);
std::vector<GeneratedTrajectory> generate_trajectories(const RoadNetwork& net, int count,
                                                       std::uint64_t seed, const WalkOptions& opts,
                                                       TrajectoryId first_id = 0);

// Noise-free polyline traced by a segment walk, starting from the endpoint
// that is not shared with the second segment.
std::vector<Point> replay_road_walk(const RoadNetwork& net, const RoadSeq& road);

}  // namespace omnitraj
