#include "omnitraj/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "omnitraj/error.hpp"

namespace omnitraj {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

BoundingBox bounding_box(std::span<const Point> points) {
  require(!points.empty(), "bounding box of an empty point set");
  BoundingBox box{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const auto& p : points) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

GridSpec::GridSpec(BoundingBox box, int rows, int cols) : box_(box), rows_(rows), cols_(cols) {
  require(rows >= 1 && cols >= 1, "grid needs at least one row and one column");
  require(box.max_x > box.min_x && box.max_y > box.min_y, "grid bounding box is degenerate");
}

namespace {

// Index of the cell containing `v` along one axis. Exact boundaries go to
// the lower index: ceil(f) - 1, with f == 0 mapping to cell 0.
int axis_cell(double v, double lo, double hi, int n) {
  const double f = (v - lo) / (hi - lo) * n;
  int idx = static_cast<int>(std::ceil(f)) - 1;
  return std::clamp(idx, 0, n - 1);
}

}  // namespace

RegionId GridSpec::cell_of(const Point& p) const {
  const int col = axis_cell(p.x, box_.min_x, box_.max_x, cols_);
  const int row = axis_cell(p.y, box_.min_y, box_.max_y, rows_);
  return row * cols_ + col;
}

BoundingBox GridSpec::cell_box(RegionId id) const {
  require(id >= 0 && id < cell_count(), "cell id out of range");
  const int row = id / cols_;
  const int col = id % cols_;
  const double w = box_.width() / cols_;
  const double h = box_.height() / rows_;
  return {box_.min_x + col * w, box_.min_y + row * h, box_.min_x + (col + 1) * w,
          box_.min_y + (row + 1) * h};
}

}  // namespace omnitraj
