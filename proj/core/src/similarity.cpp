#include "omnitraj/similarity.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "omnitraj/error.hpp"

namespace omnitraj {
namespace {

void check_inputs(std::span<const Point> a, std::span<const Point> b) {
  require(!a.empty() && !b.empty(), "distance measures need non-empty sequences");
}

double directed_hausdorff(std::span<const Point> from, std::span<const Point> to) {
  double worst = 0.0;
  for (const auto& p : from) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& q : to) nearest = std::min(nearest, distance(p, q));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

double dtw(std::span<const Point> a, std::span<const Point> b) {
  check_inputs(a, b);
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = distance(a[i - 1], b[j - 1]) + std::min({prev[j - 1], prev[j], cur[j - 1]});
    std::swap(prev, cur);
  }
  return prev[m];
}

int edr(std::span<const Point> a, std::span<const Point> b, double eps) {
  check_inputs(a, b);
  require(eps >= 0.0, "EDR eps must be non-negative");
  const std::size_t m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = std::abs(a[i - 1].x - b[j - 1].x) <= eps && std::abs(a[i - 1].y - b[j - 1].y) <= eps;
      cur[j] = std::min({prev[j - 1] + (match ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double hausdorff(std::span<const Point> a, std::span<const Point> b) {
  check_inputs(a, b);
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double frechet(std::span<const Point> a, std::span<const Point> b) {
  check_inputs(a, b);
  const std::size_t m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = distance(a[i], b[j]);
      if (i == 0 && j == 0) cur[j] = d;
      else if (i == 0) cur[j] = std::max(d, cur[j - 1]);
      else if (j == 0) cur[j] = std::max(d, prev[0]);
      else cur[j] = std::max(d, std::min({prev[j], prev[j - 1], cur[j - 1]}));
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::dtw: return "dtw";
    case Measure::edr: return "edr";
    case Measure::hausdorff: return "hausdorff";
    case Measure::frechet: return "frechet";
  }
  return "unknown";
}

Measure parse_measure(std::string_view name) {
  for (auto m : {Measure::dtw, Measure::edr, Measure::hausdorff, Measure::frechet})
    if (measure_name(m) == name) return m;
  throw ParameterError("unknown measure: " + std::string(name));
}

double evaluate_measure(Measure m, std::span<const Point> a, std::span<const Point> b, double edr_eps) {
  switch (m) {
    case Measure::dtw: return dtw(a, b);
    case Measure::edr: return edr(a, b, edr_eps);
    case Measure::hausdorff: return hausdorff(a, b);
    case Measure::frechet: return frechet(a, b);
  }
  throw ParameterError("unknown measure");
}

}  // namespace omnitraj
