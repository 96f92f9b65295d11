#include "omnitraj/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "omnitraj/error.hpp"
#include "omnitraj/preprocess.hpp"

namespace omnitraj {

namespace {

// True when a ranks ahead of b.
bool better(const Hit& a, const Hit& b) { return a.score > b.score || (a.score == b.score && a.id < b.id); }

// Keeps the k best hits seen so far; the worst of them sits at the heap top.
class Selector {
 public:
  explicit Selector(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(const Hit& h) {
    if (heap_.size() < k_) {
      heap_.push_back(h);
      std::push_heap(heap_.begin(), heap_.end(), better);
    } else if (better(h, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.back() = h;
      std::push_heap(heap_.begin(), heap_.end(), better);
    }
  }

  std::vector<Hit> finish() {
    std::sort_heap(heap_.begin(), heap_.end(), better);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Hit> heap_;
};

void check_query(const EmbeddingStore& store, std::span<const float> q, std::size_t k, std::size_t available) {
  if (q.size() != store.width())
    throw ShapeError("query width " + std::to_string(q.size()) + " does not match store width " +
                     std::to_string(store.width()));
  if (k < 1) throw ParameterError("k must be >= 1");
  if (k > available)
    throw ParameterError("k = " + std::to_string(k) + " exceeds the " + std::to_string(available) + " candidates");
  double norm = 0.0;
  for (float v : q) norm += static_cast<double>(v) * v;
  if (std::abs(std::sqrt(norm) - 1.0) > 1e-3) throw ParameterError("query vector is not unit norm");
}

std::vector<Hit> scan(const EmbeddingStore& store, std::span<const float> q, std::size_t k) {
  Selector sel(k);
  const auto& ids = store.ids();
  for (std::size_t r = 0; r < store.size(); ++r) sel.offer({ids[r], dot(store.row(r), q)});
  return sel.finish();
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) {
  // Eight independent lanes vectorize without reassociating any single sum.
  float lanes[8] = {};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  for (std::size_t l = 0; i < n; ++i, ++l) lanes[l] += a[i] * b[i];
  float total = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  return static_cast<double>(total);
}

RetrievalResult topk(const EmbeddingStore& store, std::span<const float> q, std::size_t k) {
  check_query(store, q, k, store.size());
  RetrievalResult out;
  out.hits = scan(store, q, k);
  out.provenance.query = store.modality();
  return out;
}

RetrievalResult topk_rows(const EmbeddingStore& store, std::span<const float> q, std::size_t k,
                          std::span<const std::size_t> rows) {
  check_query(store, q, k, rows.size());
  Selector sel(k);
  for (auto r : rows) {
    if (r >= store.size()) throw ParameterError("row index out of range");
    sel.offer({store.ids()[r], dot(store.row(r), q)});
  }
  RetrievalResult out;
  out.hits = sel.finish();
  out.provenance.query = store.modality();
  return out;
}

std::vector<RetrievalResult> topk_batch(const EmbeddingStore& store, std::span<const float> queries, std::size_t k,
                                        unsigned threads) {
  const std::size_t w = store.width();
  if (w == 0 || queries.size() % w != 0) throw ShapeError("query batch is not a whole number of rows");
  const std::size_t count = queries.size() / w;
  for (std::size_t i = 0; i < count; ++i) check_query(store, queries.subspan(i * w, w), k, store.size());

  std::vector<RetrievalResult> out(count);
  // Walk the store in blocks small enough to stay cached while every query in
  // the range visits them; each selector still sees rows in ascending order.
  const std::size_t block = std::max<std::size_t>(64, (256 * 1024) / (w * sizeof(float)));
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<Selector> sel(end - begin, Selector(k));
    const auto& ids = store.ids();
    for (std::size_t r0 = 0; r0 < store.size(); r0 += block) {
      const std::size_t r1 = std::min(store.size(), r0 + block);
      for (std::size_t i = begin; i < end; ++i) {
        const auto q = queries.subspan(i * w, w);
        auto& s = sel[i - begin];
        for (std::size_t r = r0; r < r1; ++r) s.offer({ids[r], dot(store.row(r), q)});
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      out[i].hits = sel[i - begin].finish();
      out[i].provenance.query = store.modality();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    work(0, count);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(count, t * chunk);
    pool.emplace_back(work, begin, std::min(count, begin + chunk));
  }
  for (auto& th : pool) th.join();
  return out;
}

std::size_t rank_of(const EmbeddingStore& store, std::span<const float> q, TrajectoryId target) {
  check_query(store, q, 1, store.size());
  const auto row = store.index_of(target);
  if (!row) throw DataError("trajectory " + std::to_string(target) + " is not in the store");
  const Hit own{target, dot(store.row(*row), q)};
  std::size_t rank = 1;
  for (std::size_t r = 0; r < store.size(); ++r)
    if (r != *row && better({store.ids()[r], dot(store.row(r), q)}, own)) ++rank;
  return rank;
}

RetrievalResult two_stage(const EmbeddingStore& coarse, const EmbeddingStore& fine, std::span<const float> q_coarse,
                          std::span<const float> q_fine, std::size_t subset, std::size_t k) {
  if (subset < k) throw ParameterError("subset size S must be >= k");
  if (coarse.size() != fine.size()) throw ConfigError("coarse and fine stores cover different trajectories");
  for (auto id : coarse.ids())
    if (!fine.index_of(id)) throw ConfigError("trajectory " + std::to_string(id) + " missing from the fine store");

  // A subset larger than the store keeps every candidate.
  const auto survivors = topk(coarse, q_coarse, std::min(subset, coarse.size())).hits;
  std::vector<std::size_t> rows;
  rows.reserve(survivors.size());
  for (const auto& h : survivors) rows.push_back(*fine.index_of(h.id));
  auto out = topk_rows(fine, q_fine, k, rows);
  out.provenance.two_stage = true;
  out.provenance.coarse = coarse.modality();
  out.provenance.subset = subset;
  return out;
}

ModalityMask QuerySpec::modalities() const {
  ModalityMask m = 0;
  if (trajectory) m |= kTraj;
  if (topology) m |= kTopology;
  if (road) m |= kRoad;
  if (region) m |= kRegion;
  return m;
}

void QuerySpec::validate() const {
  if (modalities() == 0) throw ParameterError("query needs at least one modality payload");
  if (k < 1) throw ParameterError("k must be >= 1");
  if ((trajectory && trajectory->empty()) || (topology && topology->empty()) || (road && road->empty()) ||
      (region && region->empty()))
    throw ParameterError("query payloads must be non-empty");
  if (coarse) {
    if (coarse->modality != kRoad && coarse->modality != kRegion)
      throw ParameterError("coarse stage must use road or region");
    if (coarse->subset < k) throw ParameterError("subset size S must be >= k");
    if (!(modalities() & coarse->modality))
      throw ParameterError("coarse stage needs a " + modality_name(coarse->modality) + " payload");
  }
}

RetrievalResult condition_query(const StoreSet& stores, const QuerySpec& spec, const OmniModel& model) {
  spec.validate();
  const auto target = stores.find(kTraj);
  if (target == stores.end()) throw ConfigError("no trajectory store loaded");

  PreparedSample sample;
  sample.id = -1;
  if (spec.trajectory) {
    const Trajectory t{-1, *spec.trajectory};
    if (t.points.size() < 2) throw ParameterError("trajectory payload needs at least two points");
    sample.resampled = resample(Trajectory{-1, model.to_frame(t.points, t.points)}, model.config().length).points;
  }
  if (spec.topology) {
    const auto& reference = spec.trajectory ? *spec.trajectory : *spec.topology;
    sample.topology = model.to_frame(*spec.topology, reference);
  }
  if (spec.road) sample.road = *spec.road;
  if (spec.region) sample.region = *spec.region;

  const ModalityMask mask = spec.modalities();
  std::vector<float> q;
  try {
    q = model.embed_vector(mask, sample);
  } catch (const VocabularyError& e) {
    throw ParameterError(e.what());
  }

  RetrievalResult out;
  if (spec.coarse) {
    const auto coarse_store = stores.find(spec.coarse->modality);
    if (coarse_store == stores.end())
      throw ConfigError("no " + modality_name(spec.coarse->modality) + " store loaded for the coarse stage");
    const auto qc = model.embed_vector(spec.coarse->modality, sample);
    out = two_stage(coarse_store->second, target->second, qc, q, spec.coarse->subset, spec.k);
  } else {
    out = topk(target->second, q, spec.k);
  }
  out.provenance.query = mask;
  return out;
}

}  // namespace omnitraj
