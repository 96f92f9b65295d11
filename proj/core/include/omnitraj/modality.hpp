#pragma once

#include <span>
#include <vector>

#include "omnitraj/geometry.hpp"

namespace omnitraj {

/// Indices kept by Douglas-Peucker at tolerance `epsilon` (point-to-segment
/// distance, split when strictly greater), endpoints included, ascending.
std::vector<std::size_t> douglas_peucker(std::span<const Point> points, double epsilon);

/// Turning angle in radians at `b` for the path a -> b -> c; 0 for a straight
/// continuation, pi for a full reversal. Zero-length legs count as no turn.
double turning_angle(const Point& a, const Point& b, const Point& c);

/// Douglas-Peucker survivors whose turning angle (against their neighbours in
/// the simplified sequence) is at least `angle_min`; endpoints always kept.
std::vector<std::size_t> topology_indices(std::span<const Point> points, double epsilon,
                                          double angle_min);

TopologySeq extract_topology(const Trajectory& t, double epsilon, double angle_min);

struct TopologyOptions {
  double epsilon = 0.02;         // in normalized units
  double angle_min = 0.2617993877991494;  // 15 degrees
};

/// Runs extraction on the normalized trajectory and returns the selected
/// points in the trajectory's original coordinates.
TopologySeq topology_view(const Trajectory& t, const TopologyOptions& opts = {});

RegionSeq extract_regions(const Trajectory& t, const GridSpec& grid);

/// First-occurrence order dedup.
template <typename T>
std::vector<T> dedup_first_visit(std::span<const T> ids) {
  std::vector<T> out;
  for (const auto& v : ids) {
    bool seen = false;
    for (const auto& o : out)
      if (o == v) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(v);
  }
  return out;
}

}  // namespace omnitraj
