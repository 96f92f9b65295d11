#pragma once

// Straightforward reference implementations used only by the tests. They
// trade speed for obviousness and share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "omnitraj/geometry.hpp"

namespace oracle {

using omnitraj::Point;

inline double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Memoized recursion over prefix pairs: cost(i, j) of aligning a[0..i] with
// b[0..j].
inline double dtw(const std::vector<Point>& a, const std::vector<Point>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> double {
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best;
    if (i == 0 && j == 0) best = 0.0;
    else if (i == 0) best = go(0, j - 1);
    else if (j == 0) best = go(i - 1, 0);
    else best = std::min({go(i - 1, j - 1), go(i - 1, j), go(i, j - 1)});
    return memo[key] = dist(a[i], b[j]) + best;
  };
  return go(a.size() - 1, b.size() - 1);
}

inline int edr(const std::vector<Point>& a, const std::vector<Point>& b, double eps) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const bool match = std::abs(a[i].x - b[j].x) <= eps && std::abs(a[i].y - b[j].y) <= eps;
    const int r = std::min({go(i + 1, j + 1) + (match ? 0 : 1), go(i + 1, j) + 1, go(i, j + 1) + 1});
    return memo[key] = r;
  };
  return go(0, 0);
}

inline double hausdorff(const std::vector<Point>& a, const std::vector<Point>& b) {
  auto directed = [](const std::vector<Point>& p, const std::vector<Point>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q) best = std::min(best, dist(x, y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

inline double frechet(const std::vector<Point>& a, const std::vector<Point>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> double {
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double d = dist(a[i], b[j]);
    double r;
    if (i == 0 && j == 0) r = d;
    else if (i == 0) r = std::max(go(0, j - 1), d);
    else if (j == 0) r = std::max(go(i - 1, 0), d);
    else r = std::max(std::min({go(i - 1, j), go(i - 1, j - 1), go(i, j - 1)}), d);
    return memo[key] = r;
  };
  return go(a.size() - 1, b.size() - 1);
}

// Natural cubic spline through (t, y), solved as a dense linear system for the
// second derivatives, evaluated at u.
inline double natural_spline(const std::vector<double>& t, const std::vector<double>& y, double u) {
  const std::size_t n = t.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  m[0][0] = 1.0;
  m[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    m[i][i - 1] = h0;
    m[i][i] = 2.0 * (h0 + h1);
    m[i][i + 1] = h1;
    m[i][n] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t c = 0; c < n; ++c) {  // Gauss-Jordan with partial pivoting
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = m[i][n] / m[i][i];
  std::size_t seg = 0;
  while (seg + 2 < n && u > t[seg + 1]) ++seg;
  const double h = t[seg + 1] - t[seg];
  const double A = (t[seg + 1] - u) / h, B = (u - t[seg]) / h;
  return A * y[seg] + B * y[seg + 1] + ((A * A * A - A) * s[seg] + (B * B * B - B) * s[seg + 1]) * h * h / 6.0;
}

inline double point_segment(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return dist(p, a);
  const double u = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return dist(p, {a.x + u * dx, a.y + u * dy});
}

// Textbook recursive Douglas-Peucker returning kept indices.
inline void dp_recurse(const std::vector<Point>& p, std::size_t lo, std::size_t hi, double eps,
                       std::vector<std::size_t>& keep) {
  if (hi <= lo + 1) return;
  double best = -1.0;
  std::size_t at = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment(p[i], p[lo], p[hi]);
    if (d > best) {
      best = d;
      at = i;
    }
  }
  if (best > eps) {
    dp_recurse(p, lo, at, eps, keep);
    keep.push_back(at);
    dp_recurse(p, at, hi, eps, keep);
  }
}

inline std::vector<std::size_t> douglas_peucker(const std::vector<Point>& p, double eps) {
  std::vector<std::size_t> keep{0};
  dp_recurse(p, 0, p.size() - 1, eps, keep);
  keep.push_back(p.size() - 1);
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace oracle
