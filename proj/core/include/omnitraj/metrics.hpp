#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace omnitraj {

double mean_rank(std::span<const std::size_t> ranks);
double mrr(std::span<const std::size_t> ranks);
double hit_rate(std::span<const std::size_t> ranks, std::size_t k);

/// Fraction of query elements found in the union of the retrieved element
/// lists (pass the top-k lists).
double coverage_rate(std::span<const std::int32_t> query, const std::vector<std::vector<std::int32_t>>& retrieved);

/// Per-result variant: mean over the retrieved lists of the fraction of query
/// elements each one contains on its own.
double averaged_coverage_rate(std::span<const std::int32_t> query,
                              const std::vector<std::vector<std::int32_t>>& retrieved);

}  // namespace omnitraj
