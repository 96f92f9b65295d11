#include "omnitraj/metrics.hpp"

#include <algorithm>
#include <unordered_set>

#include "omnitraj/error.hpp"

namespace omnitraj {

namespace {

void check_ranks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ParameterError("rank list is empty");
  for (auto r : ranks)
    if (r < 1) throw ParameterError("ranks are 1-based");
}

std::unordered_set<std::int32_t> distinct(std::span<const std::int32_t> query) {
  if (query.empty()) throw ParameterError("query element set is empty");
  return {query.begin(), query.end()};
}

}  // namespace

double mean_rank(std::span<const std::size_t> ranks) {
  check_ranks(ranks);
  double sum = 0.0;
  for (auto r : ranks) sum += static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double mrr(std::span<const std::size_t> ranks) {
  check_ranks(ranks);
  double sum = 0.0;
  for (auto r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double hit_rate(std::span<const std::size_t> ranks, std::size_t k) {
  check_ranks(ranks);
  if (k < 1) throw ParameterError("k must be >= 1");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double coverage_rate(std::span<const std::int32_t> query, const std::vector<std::vector<std::int32_t>>& retrieved) {
  const auto wanted = distinct(query);
  std::unordered_set<std::int32_t> seen;
  for (const auto& list : retrieved)
    for (auto e : list)
      if (wanted.count(e)) seen.insert(e);
  return static_cast<double>(seen.size()) / static_cast<double>(wanted.size());
}

double averaged_coverage_rate(std::span<const std::int32_t> query,
                              const std::vector<std::vector<std::int32_t>>& retrieved) {
  distinct(query);
  if (retrieved.empty()) throw ParameterError("no retrieved results");
  double sum = 0.0;
  for (const auto& list : retrieved) sum += coverage_rate(query, {list});
  return sum / static_cast<double>(retrieved.size());
}

}  // namespace omnitraj
