#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace omnitraj {

using TrajectoryId = std::int64_t;
using SegmentId = std::int32_t;
using RegionId = std::int32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(const Point& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox bounding_box(std::span<const Point> points);

/// Ordered 2-D point sequence. Coordinates are abstract map units.
struct Trajectory {
  TrajectoryId id = 0;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Key points of a trajectory: an order-preserving subsequence of its points
/// that always contains both endpoints.
struct TopologySeq {
  TrajectoryId trajectory_id = 0;
  std::vector<Point> points;

  friend bool operator==(const TopologySeq&, const TopologySeq&) = default;
};

/// Road segments traversed, consecutive duplicates collapsed.
struct RoadSeq {
  TrajectoryId trajectory_id = 0;
  std::vector<SegmentId> segment_ids;

  friend bool operator==(const RoadSeq&, const RoadSeq&) = default;
};

/// Grid cells visited, first-visit order, no duplicates.
struct RegionSeq {
  TrajectoryId trajectory_id = 0;
  std::vector<RegionId> region_ids;

  friend bool operator==(const RegionSeq&, const RegionSeq&) = default;
};

/// Uniform rows x cols partition of a bounding box. Cell id = row * cols + col,
/// rows counted along y and cols along x. A point on a shared boundary belongs
/// to the lower-index cell.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(BoundingBox box, int rows, int cols);

  const BoundingBox& box() const { return box_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int cell_count() const { return rows_ * cols_; }

  // Points outside the box are clamped to the border cells.
  RegionId cell_of(const Point& p) const;
  BoundingBox cell_box(RegionId id) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  BoundingBox box_{0, 0, 1, 1};
  int rows_ = 16;
  int cols_ = 16;
};

}  // namespace omnitraj
