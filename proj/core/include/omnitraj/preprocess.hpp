#pragma once

#include <span>
#include <vector>

#include "omnitraj/geometry.hpp"

namespace omnitraj {

/// Translates by the centroid and divides by the largest absolute coordinate
/// offset, one scale for both axes. Output lies in [-1, 1].
/// Throws DegenerateInputError when every point is identical.
Trajectory normalize(const Trajectory& t);

/// Same transform as `normalize`, exposed so other views of the trajectory
/// (e.g. its topology points) can be mapped into the same frame.
struct LocalFrame {
  Point center;
  double scale = 1.0;

  Point apply(const Point& p) const { return {(p.x - center.x) / scale, (p.y - center.y) / scale}; }
};
LocalFrame local_frame(std::span<const Point> points);

/// Natural cubic spline through (knots[i], values[i]); knots strictly increasing.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::vector<double> knots, std::vector<double> values);

  double operator()(double u) const;
  double derivative(double u) const;
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> second_;  // second derivatives at the knots
};

struct ResamplePlan {
  // Evaluation parameters in [0, 1] along the normalized arc-length knot
  // parameterization of the (deduplicated) input.
  std::vector<double> parameters;
  // Knot parameters of the deduplicated input points.
  std::vector<double> knots;
  std::vector<Point> knot_points;
  bool spline = false;
};

/// Resamples to exactly `length` points spaced evenly along the curve.
/// With >= 4 distinct points the curve is a natural cubic spline against the
/// normalized cumulative chord-length parameter; below that it is the input
/// polyline. Output chords are equal to within roundoff, which makes the
/// operation idempotent. Endpoints are copied exactly.
Trajectory resample(const Trajectory& t, int length);

// The parameters `resample` evaluates at; exposed for verification.
ResamplePlan resample_plan(const Trajectory& t, int length);

}  // namespace omnitraj
