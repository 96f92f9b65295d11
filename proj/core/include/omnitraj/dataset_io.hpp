#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omnitraj/geometry.hpp"
#include "omnitraj/network.hpp"

namespace omnitraj {

struct TrajectoryRecord {
  Trajectory trajectory;
  std::optional<RoadSeq> road;
  std::optional<RegionSeq> region;
  std::optional<TopologySeq> topology;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

using Dataset = std::vector<TrajectoryRecord>;

// One JSON object per line: {"id", "points": [x0, y0, x1, y1, ...],
// optional "road", "region", "topology"}.
std::string encode_record(const TrajectoryRecord& record);
TrajectoryRecord decode_record(const std::string& line);

void save_dataset(const std::filesystem::path& path, const Dataset& records);
Dataset load_dataset(const std::filesystem::path& path);

/// Grid covering the network bounding box padded by half a lattice spacing,
/// so that every noisy trajectory point falls inside.
GridSpec grid_for_network(const RoadNetwork& net, int rows = 16, int cols = 16);

struct ExtractOptions {
  double topology_epsilon = 0.02;
  double topology_angle_min = 0.2617993877991494;
  bool overwrite = false;
};

/// Fills missing topology and region views (road views cannot be derived
/// without map matching and are left as given).
void extract_views(Dataset& records, const GridSpec& grid, const ExtractOptions& opts = {});

}  // namespace omnitraj
