#include "omnitraj/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "omnitraj/error.hpp"

namespace omnitraj {

LocalFrame local_frame(std::span<const Point> points) {
  require(points.size() >= 2, "normalize needs at least 2 points");
  Point c;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ParameterError("non-finite coordinate");
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(points.size());
  c.y /= static_cast<double>(points.size());
  double extent = 0.0;
  for (const auto& p : points) extent = std::max({extent, std::abs(p.x - c.x), std::abs(p.y - c.y)});
  if (!(extent > 0.0)) throw DegenerateInputError("all trajectory points are identical");
  return {c, extent};
}

Trajectory normalize(const Trajectory& t) {
  const auto frame = local_frame(t.points);
  Trajectory out{t.id, {}};
  out.points.reserve(t.points.size());
  for (const auto& p : t.points) out.points.push_back(frame.apply(p));
  return out;
}

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  const std::size_t n = knots_.size();
  require(n >= 2 && values_.size() == n, "spline needs matching knots and values");
  for (std::size_t i = 1; i < n; ++i)
    require(knots_[i] > knots_[i - 1], "spline knots must be strictly increasing");
  second_.assign(n, 0.0);
  if (n < 3) return;

  // Thomas algorithm on the interior equations; natural ends fix M0 = Mn-1 = 0.
  const std::size_t m = n - 2;
  std::vector<double> diag(m), upper(m), rhs(m);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1];
    const double h1 = knots_[i + 1] - knots_[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < m; ++i) {
    const double lower = knots_[i + 1] - knots_[i];
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  second_[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) second_[i + 1] = (rhs[i] - upper[i] * second_[i + 2]) / diag[i];
}

double NaturalCubicSpline::operator()(double u) const {
  const std::size_t n = knots_.size();
  std::size_t i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), u) - knots_.begin());
  i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - u) / h;
  const double b = (u - knots_[i]) / h;
  return a * values_[i] + b * values_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double NaturalCubicSpline::derivative(double u) const {
  const std::size_t n = knots_.size();
  std::size_t i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), u) - knots_.begin());
  i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - u) / h;
  const double b = (u - knots_[i]) / h;
  return (values_[i + 1] - values_[i]) / h +
         ((1.0 - 3.0 * a * a) * second_[i] + (3.0 * b * b - 1.0) * second_[i + 1]) * h / 6.0;
}

namespace {

struct Curve {
  std::vector<double> knots;
  std::vector<Point> points;
  std::optional<NaturalCubicSpline> sx, sy;

  Point at(double u) const {
    if (sx) return {(*sx)(u), (*sy)(u)};
    std::size_t i = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), u) - knots.begin());
    i = std::clamp<std::size_t>(i, 1, knots.size() - 1) - 1;
    const double f = (u - knots[i]) / (knots[i + 1] - knots[i]);
    return {points[i].x + f * (points[i + 1].x - points[i].x),
            points[i].y + f * (points[i + 1].y - points[i].y)};
  }

  Point tangent(double u) const { return {sx->derivative(u), sy->derivative(u)}; }
};

// Normalized cumulative chord lengths of `pts`; empty when the total is zero.
std::vector<double> chord_parameters(std::span<const Point> pts) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = s.back();
  if (!(total > 0.0)) return {};
  for (auto& v : s) v /= total;
  s.back() = 1.0;
  return s;
}

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  i = std::clamp<std::size_t>(i, 1, xs.size() - 1) - 1;
  const double dx = xs[i + 1] - xs[i];
  if (!(dx > 0.0)) return ys[i];
  return ys[i] + (x - xs[i]) / dx * (ys[i + 1] - ys[i]);
}

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

// Parameters that split the curve into equal arc lengths, measured on a
// dense polyline.
std::vector<double> equal_arc_parameters(const Curve& curve, std::size_t count) {
  const std::size_t m = std::max<std::size_t>(1024, 16 * curve.knots.size());
  std::vector<double> u(m + 1), s(m + 1, 0.0);
  Point prev = curve.at(0.0);
  for (std::size_t i = 1; i <= m; ++i) {
    u[i] = static_cast<double>(i) / static_cast<double>(m);
    const Point p = curve.at(u[i]);
    s[i] = s[i - 1] + distance(prev, p);
    prev = p;
  }
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j)
    out[j] = interpolate(s, u, s.back() * static_cast<double>(j) / static_cast<double>(count - 1));
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

// Chord residuals |C(u_j) - C(u_j-1)|^2 - c^2.
// Returns the sum of squared residuals.
double chord_residuals(const Curve& curve, const std::vector<double>& u, double c, std::vector<Point>& pts,
                       std::vector<double>& f) {
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) pts[j] = curve.at(u[j]);
  for (std::size_t j = 1; j < u.size(); ++j) {
    const Point d{pts[j].x - pts[j - 1].x, pts[j].y - pts[j - 1].y};
    f[j] = dot(d, d) - c * c;
    sum += f[j] * f[j];
  }
  return sum;
}

// Steps from u = 0 with chord `c`, each step taking the first parameter whose
// point lies at distance c from the previous point. `miss` is the signed
// mismatch at the far end: u_last - 1 when every step fits, otherwise the
// (positive) number of steps left over.
struct March {
  std::vector<double> u;
  double miss = 0.0;
};

March march(const Curve& curve, const std::vector<double>& su, const std::vector<Point>& sp, std::size_t steps,
            double c) {
  March m;
  m.u.push_back(0.0);
  Point from = sp.front();
  std::size_t i = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    const double u0 = m.u.back();
    while (i < su.size() && (su[i] <= u0 || distance(sp[i], from) < c)) ++i;
    if (i == su.size()) {
      m.miss = static_cast<double>(steps - step) - distance(sp.back(), from) / c;
      return m;
    }
    double lo = std::max(u0, su[i - 1]), hi = su[i];
    for (int it = 0; it < 60 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      (distance(curve.at(mid), from) < c ? lo : hi) = mid;
    }
    m.u.push_back(hi);
    from = curve.at(hi);
  }
  m.miss = m.u.back() - 1.0;
  return m;
}

// Root of the march mismatch in c by regula falsi (Illinois variant) with
// bisection fallback. Returns an empty vector when no exact root is found.
std::vector<double> march_parameters(const Curve& curve, std::size_t count) {
  const std::size_t steps = count - 1;
  const std::size_t dense = std::max<std::size_t>(1024, 16 * curve.knots.size());
  std::vector<double> su(dense + 1);
  std::vector<Point> sp(dense + 1);
  double length = 0.0;
  for (std::size_t i = 0; i <= dense; ++i) {
    su[i] = static_cast<double>(i) / static_cast<double>(dense);
    sp[i] = curve.at(su[i]);
    if (i > 0) length += distance(sp[i - 1], sp[i]);
  }
  double lo = 1e-3 * length / static_cast<double>(steps), hi = 1.01 * length / static_cast<double>(steps);
  double f_lo = march(curve, su, sp, steps, lo).miss, f_hi = march(curve, su, sp, steps, hi).miss;
  if (!(f_lo < 0.0 && f_hi > 0.0)) return {};
  int side = 0;
  for (int iter = 0; iter < 300; ++iter) {
    double c = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
    const auto m = march(curve, su, sp, steps, c);
    if (m.u.size() == count && std::abs(m.miss) <= 1e-14) {
      auto u = m.u;
      u.back() = 1.0;
      return u;
    }
    if (m.miss < 0.0) {
      lo = c, f_lo = m.miss;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = c, f_hi = m.miss;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-16 * hi) break;
  }
  return {};
}

// Parameters of `count` points on a spline curve with equal chords between
// neighbours, first at u = 0 and last at u = 1. Newton's method on the
// chord equations from an equal-arc-length start; the Jacobian is lower
// bidiagonal plus one column for the chord length, so each step is linear.
// If Newton does not converge the chord march is tried, and if that finds
// no root either the equal-arc-length start is returned.
std::vector<double> equal_chord_parameters(const Curve& curve, std::size_t count) {
  const std::size_t m = count - 1;
  auto u = equal_arc_parameters(curve, count);
  std::vector<Point> pts(count);
  std::vector<double> f(count), p(count), q(count), trial_u(count), trial_f(count);
  double c = 0.0;
  for (std::size_t j = 0; j < count; ++j) pts[j] = curve.at(u[j]);
  for (std::size_t j = 1; j < count; ++j) c += distance(pts[j - 1], pts[j]);
  c /= static_cast<double>(m);
  const auto start = u;
  if (m < 2 || !(c > 0.0)) return start;

  const double tol = 1e-26 * c * c * c * c;
  double worst = chord_residuals(curve, u, c, pts, f);
  for (int iter = 0; iter < 200 && worst > tol; ++iter) {
    // Forward substitution expressing each du_j as p_j + q_j * dc.
    bool singular = false;
    for (std::size_t j = 1; j < m; ++j) {
      const Point d{pts[j].x - pts[j - 1].x, pts[j].y - pts[j - 1].y};
      const double b = 2.0 * dot(d, curve.tangent(u[j]));
      const double a = j > 1 ? -2.0 * dot(d, curve.tangent(u[j - 1])) : 0.0;
      if (std::abs(b) < 1e-300) {
        singular = true;
        break;
      }
      const double prev_p = j > 1 ? p[j - 1] : 0.0, prev_q = j > 1 ? q[j - 1] : 0.0;
      p[j] = (-f[j] - a * prev_p) / b;
      q[j] = (2.0 * c - a * prev_q) / b;
    }
    if (singular) break;
    const Point d{pts[m].x - pts[m - 1].x, pts[m].y - pts[m - 1].y};
    const double a = -2.0 * dot(d, curve.tangent(u[m - 1]));
    const double denom = a * q[m - 1] - 2.0 * c;
    if (!(std::abs(denom) > 1e-300)) break;
    const double dc = (-f[m] - a * p[m - 1]) / denom;

    // Backtracking: keep parameters increasing and the residual shrinking.
    bool accepted = false;
    for (double step = 1.0; step > 1e-10; step *= 0.5) {
      trial_u.front() = 0.0;
      trial_u.back() = 1.0;
      bool monotone = true;
      for (std::size_t j = 1; j < m; ++j) {
        trial_u[j] = u[j] + step * (p[j] + q[j] * dc);
        monotone = monotone && trial_u[j] > trial_u[j - 1];
      }
      monotone = monotone && trial_u[m] > trial_u[m - 1];
      const double trial_c = c + step * dc;
      if (!monotone || !(trial_c > 0.0)) continue;
      std::vector<Point> trial_pts(count);
      const double trial_worst = chord_residuals(curve, trial_u, trial_c, trial_pts, trial_f);
      if (trial_worst < worst) {
        u.swap(trial_u);
        f.swap(trial_f);
        pts.swap(trial_pts);
        c = trial_c;
        worst = trial_worst;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (worst <= 1e-24 * c * c * c * c) return u;
  auto marched = march_parameters(curve, count);
  return marched.empty() ? start : marched;
}

}  // namespace

ResamplePlan resample_plan(const Trajectory& t, int length) {
  require(t.points.size() >= 2, "resample needs at least 2 points");
  require(length >= 2, "resample length must be >= 2");

  ResamplePlan plan;
  for (const auto& p : t.points)
    if (plan.knot_points.empty() || !(plan.knot_points.back() == p)) plan.knot_points.push_back(p);

  const auto L = static_cast<std::size_t>(length);
  plan.parameters.resize(L);
  for (std::size_t j = 0; j < L; ++j) plan.parameters[j] = static_cast<double>(j) / static_cast<double>(L - 1);
  if (plan.knot_points.size() < 2) return plan;  // all points identical

  plan.knots = chord_parameters(plan.knot_points);
  plan.spline = plan.knot_points.size() >= 4;
  if (!plan.spline) return plan;

  Curve curve;
  curve.knots = plan.knots;
  curve.points = plan.knot_points;
  if (plan.spline) {
    std::vector<double> xs, ys;
    for (const auto& p : plan.knot_points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    curve.sx.emplace(plan.knots, xs);
    curve.sy.emplace(plan.knots, ys);
  }

  // Input that already has `length` distinct points is its own resampling.
  // For output of an earlier call this is exact when the chords came out
  // equal, and it keeps the fallback spacing stable when they could not.
  if (plan.knot_points.size() == L && t.points.size() == L) {
    plan.parameters = plan.knots;
    return plan;
  }

  plan.parameters = equal_chord_parameters(curve, L);
  return plan;
}

Trajectory resample(const Trajectory& t, int length) {
  const auto plan = resample_plan(t, length);
  Trajectory out{t.id, {}};
  out.points.reserve(plan.parameters.size());
  if (plan.knot_points.size() < 2) {
    out.points.assign(plan.parameters.size(), t.points.front());
    return out;
  }
  Curve curve;
  curve.knots = plan.knots;
  curve.points = plan.knot_points;
  if (plan.spline) {
    std::vector<double> xs, ys;
    for (const auto& p : plan.knot_points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    curve.sx.emplace(plan.knots, xs);
    curve.sy.emplace(plan.knots, ys);
  }
  for (double u : plan.parameters) out.points.push_back(curve.at(u));
  out.points.front() = t.points.front();
  out.points.back() = t.points.back();
  return out;
}

}  // namespace omnitraj
