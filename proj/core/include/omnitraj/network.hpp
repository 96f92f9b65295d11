#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "omnitraj/geometry.hpp"

namespace omnitraj {

struct RoadSegment {
  std::int32_t node_a = 0;
  std::int32_t node_b = 0;

  friend bool operator==(const RoadSegment&, const RoadSegment&) = default;
};

/// Undirected road graph. Segment ids are dense and equal to their index.
class RoadNetwork {
 public:
  struct Incidence {
    std::int32_t neighbor;
    SegmentId segment;
  };

  RoadNetwork() = default;
  RoadNetwork(std::vector<Point> nodes, std::vector<RoadSegment> segments);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<RoadSegment>& segments() const { return segments_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t segment_count() const { return segments_.size(); }
  const std::vector<Incidence>& incident(std::int32_t node) const { return adjacency_[node]; }
  const BoundingBox& box() const { return box_; }

  bool is_connected() const;

  // Writes/reads the line-delimited network file.
  void save(const std::filesystem::path& path) const;
  static RoadNetwork load(const std::filesystem::path& path);

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b) {
    return a.nodes_ == b.nodes_ && a.segments_ == b.segments_;
  }

 private:
  std::vector<Point> nodes_;
  std::vector<RoadSegment> segments_;
  std::vector<std::vector<Incidence>> adjacency_;
  BoundingBox box_;
};

/// Jittered rows x cols lattice with unit spacing. Horizontal segments come
/// first (row-major), then vertical ones (row-major). Jitter is a fraction of
/// the spacing applied to each node coordinate.
RoadNetwork generate_network(std::uint64_t seed, int rows, int cols, double jitter);

}  // namespace omnitraj
