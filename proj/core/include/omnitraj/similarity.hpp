#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "omnitraj/geometry.hpp"

namespace omnitraj {

// Classical trajectory distances, O(|a| * |b|) dynamic programs with a
// Euclidean ground distance. All throw ParameterError on empty input.

double dtw(std::span<const Point> a, std::span<const Point> b);

// Edit distance on real sequences: two points match when both coordinate
// differences are within eps.
int edr(std::span<const Point> a, std::span<const Point> b, double eps);

double hausdorff(std::span<const Point> a, std::span<const Point> b);

// Discrete Frechet distance.
double frechet(std::span<const Point> a, std::span<const Point> b);

enum class Measure : std::uint32_t { dtw = 1, edr = 2, hausdorff = 3, frechet = 4 };

std::string_view measure_name(Measure m);
Measure parse_measure(std::string_view name);

// Evaluates `m`; `edr_eps` is only used by EDR.
double evaluate_measure(Measure m, std::span<const Point> a, std::span<const Point> b,
                        double edr_eps = 0.25);

struct DistanceMatrixRow {
  TrajectoryId query_id = 0;
  std::vector<std::pair<TrajectoryId, double>> distances;
};

/// Dense distance matrix with the binary dump layout: 16-byte header
/// ("OTDM", rows u32, cols u32, measure u32), then row-major little-endian f32.
struct DistanceMatrix {
  Measure measure = Measure::dtw;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;

  float at(std::uint32_t r, std::uint32_t c) const { return values[static_cast<std::size_t>(r) * cols + c]; }

  void save(const std::filesystem::path& path) const;
  static DistanceMatrix load(const std::filesystem::path& path);
};

}  // namespace omnitraj
