#include "omnitraj/modality.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "omnitraj/error.hpp"
#include "omnitraj/preprocess.hpp"

namespace omnitraj {
namespace {

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double f = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  f = std::clamp(f, 0.0, 1.0);
  return std::hypot(p.x - (a.x + f * dx), p.y - (a.y + f * dy));
}

}  // namespace

std::vector<std::size_t> douglas_peucker(std::span<const Point> points, double epsilon) {
  require(epsilon >= 0.0, "epsilon must be non-negative");
  const std::size_t n = points.size();
  if (n <= 2) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::vector<char> keep(n, 0);
  keep[0] = keep[n - 1] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi <= lo + 1) continue;
    double best = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = segment_distance(points[i], points[lo], points[hi]);
      if (d > best) {
        best = d;
        at = i;
      }
    }
    if (best > epsilon) {
      keep[at] = 1;
      stack.push_back({lo, at});
      stack.push_back({at, hi});
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

double turning_angle(const Point& a, const Point& b, const Point& c) {
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double vx = c.x - b.x, vy = c.y - b.y;
  const double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::acos(std::clamp((ux * vx + uy * vy) / (nu * nv), -1.0, 1.0));
}

std::vector<std::size_t> topology_indices(std::span<const Point> points, double epsilon,
                                          double angle_min) {
  const auto simplified = douglas_peucker(points, epsilon);
  if (simplified.size() <= 2) return simplified;
  std::vector<std::size_t> out{simplified.front()};
  for (std::size_t j = 1; j + 1 < simplified.size(); ++j) {
    const double angle =
        turning_angle(points[simplified[j - 1]], points[simplified[j]], points[simplified[j + 1]]);
    if (angle >= angle_min) out.push_back(simplified[j]);
  }
  out.push_back(simplified.back());
  return out;
}

TopologySeq extract_topology(const Trajectory& t, double epsilon, double angle_min) {
  require(t.points.size() >= 2, "topology extraction needs at least 2 points");
  TopologySeq out{t.id, {}};
  for (auto i : topology_indices(t.points, epsilon, angle_min)) out.points.push_back(t.points[i]);
  return out;
}

TopologySeq topology_view(const Trajectory& t, const TopologyOptions& opts) {
  const auto normalized = normalize(t);
  TopologySeq out{t.id, {}};
  for (auto i : topology_indices(normalized.points, opts.epsilon, opts.angle_min))
    out.points.push_back(t.points[i]);
  return out;
}

RegionSeq extract_regions(const Trajectory& t, const GridSpec& grid) {
  require(!t.points.empty(), "region extraction needs a non-empty trajectory");
  RegionSeq out{t.id, {}};
  std::vector<char> seen(static_cast<std::size_t>(grid.cell_count()), 0);
  for (const auto& p : t.points) {
    const auto id = grid.cell_of(p);
    if (!seen[id]) {
      seen[id] = 1;
      out.region_ids.push_back(id);
    }
  }
  return out;
}

}  // namespace omnitraj
