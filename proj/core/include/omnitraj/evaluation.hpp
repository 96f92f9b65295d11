#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "omnitraj/retrieval.hpp"
#include "omnitraj/similarity.hpp"

namespace omnitraj {

/// Run metadata copied into every report.
struct ReportContext {
  std::string config_text;  // key = value snapshot
  std::uint64_t seed = 0;
  std::string fingerprint;  // checkpoint fingerprint, hex
};

struct RankingReport {
  std::string label;  // query modality or heuristic measure name
  std::vector<std::size_t> ranks;
  double mr = 0.0, mrr = 0.0, hr1 = 0.0, hr5 = 0.0, hr10 = 0.0;
  std::optional<std::size_t> coarse_subset;
  ReportContext context;

  // Recomputes the aggregates from `ranks`.
  void finalize();
  std::string to_json_line() const;
};

struct CoverageReport {
  ModalityMask modality = kRoad;
  std::size_t condition_length = 0;  // 0 = full id lists
  std::vector<double> cr1_per_query, cr5_per_query;
  double cr1 = 0.0, cr5 = 0.0;
  double cr5_averaged = 0.0;  // per-result averaging instead of the union
  std::vector<std::pair<std::size_t, double>> cr_at;  // extra k values of a sweep
  ReportContext context;

  std::string to_json_line() const;
};

std::string format_ranking_table(const std::vector<RankingReport>& reports);
std::string format_coverage_table(const std::vector<CoverageReport>& reports);

struct CoarseStage {
  const EmbeddingStore* store = nullptr;  // candidate embeddings of the coarse modality
  ModalityMask query = kRoad;             // how the query's coarse view is encoded
  std::size_t subset = 200;
};

/// Self-retrieval: each test sample's `query` view is ranked against
/// `targets`; the rank of its own id is recorded. With a coarse stage, a
/// target filtered out in stage one gets rank |D|.
RankingReport run_similarity_eval(const OmniModel& model, const EmbeddingStore& targets,
                                  const std::vector<PreparedSample>& tests, ModalityMask query,
                                  const std::optional<CoarseStage>& coarse = std::nullopt,
                                  const ReportContext& context = {});

/// Element lists (road or region ids) of every candidate, used to score
/// coverage of retrieved trajectories.
using ElementIndex = std::unordered_map<TrajectoryId, std::vector<std::int32_t>>;
ElementIndex element_index(const std::vector<PreparedSample>& samples, ModalityMask modality);

/// Condition retrieval: each test sample's road (or region) list, optionally
/// cut to its first `condition_length` ids, is the query; CR@1 and CR@5 are
/// measured over the retrieved trajectories' element lists. `extra_k` adds
/// union CR values for a breadth sweep.
CoverageReport run_condition_eval(const OmniModel& model, const EmbeddingStore& targets,
                                  const ElementIndex& elements, const std::vector<PreparedSample>& tests,
                                  ModalityMask modality, std::size_t condition_length = 0,
                                  const std::vector<std::size_t>& extra_k = {}, const ReportContext& context = {});

/// Classical-measure self-retrieval: the first `queries` test trajectories'
/// topology points are ranked against the raw candidate trajectories. Ties
/// go to the smaller id. Candidate rows fan out over `threads`.
RankingReport run_heuristic_eval(Measure measure, const std::vector<Trajectory>& candidates,
                                 const std::vector<Trajectory>& query_topologies, std::size_t queries,
                                 double edr_eps = 0.25, unsigned threads = 1, const ReportContext& context = {});

}  // namespace omnitraj
