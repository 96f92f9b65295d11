#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omnitraj/embedding_store.hpp"

namespace omnitraj {

struct Hit {
  TrajectoryId id = 0;
  double score = 0.0;
  friend bool operator==(const Hit&, const Hit&) = default;
};

struct Provenance {
  ModalityMask query = kTraj;  // modality subset the query was encoded with
  bool two_stage = false;
  ModalityMask coarse = 0;     // coarse store modality when two_stage
  std::size_t subset = 0;      // S when two_stage
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct RetrievalResult {
  std::vector<Hit> hits;  // best first
  Provenance provenance;
};

// Float dot product with a fixed summation order; shared by every scan so
// that single and batched queries agree bit for bit.
double dot(std::span<const float> a, std::span<const float> b);

/// Exact top-k by cosine over the whole store. Ties go to the smaller id.
RetrievalResult topk(const EmbeddingStore& store, std::span<const float> q, std::size_t k);

/// Same as topk, restricted to the given row indices.
RetrievalResult topk_rows(const EmbeddingStore& store, std::span<const float> q, std::size_t k,
                          std::span<const std::size_t> rows);

/// Exact top-k for many queries (row-major [count, width]). Work is split by
/// query, so results do not depend on `threads`.
std::vector<RetrievalResult> topk_batch(const EmbeddingStore& store, std::span<const float> queries, std::size_t k,
                                        unsigned threads = 1);

/// 1-based rank of `target` for query q under the store's ordering rule.
std::size_t rank_of(const EmbeddingStore& store, std::span<const float> q, TrajectoryId target);

/// Coarse filter to the top-S ids of `coarse`, then exact top-k over those ids
/// in `fine`. Both stores must cover the same ids.
RetrievalResult two_stage(const EmbeddingStore& coarse, const EmbeddingStore& fine, std::span<const float> q_coarse,
                          std::span<const float> q_fine, std::size_t subset, std::size_t k);

struct QuerySpec {
  std::optional<std::vector<Point>> trajectory;  // raw points, data coordinates
  std::optional<std::vector<Point>> topology;    // data coordinates
  std::optional<std::vector<SegmentId>> road;
  std::optional<std::vector<RegionId>> region;
  std::size_t k = 10;
  struct Coarse {
    ModalityMask modality = kRoad;  // kRoad or kRegion
    std::size_t subset = 200;
  };
  std::optional<Coarse> coarse;

  ModalityMask modalities() const;
  void validate() const;
};

// Stores keyed by modality mask. Condition queries rank against the kTraj
// store; a two-stage query also needs the store of its coarse modality.
using StoreSet = std::map<ModalityMask, EmbeddingStore>;

/// Encodes the payloads (fusing several through the matching projector) and
/// ranks trajectories.
RetrievalResult condition_query(const StoreSet& stores, const QuerySpec& spec, const OmniModel& model);

}  // namespace omnitraj
