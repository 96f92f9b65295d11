#include "omnitraj/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "omnitraj/error.hpp"
#include "omnitraj/metrics.hpp"

namespace omnitraj {

namespace {

nlohmann::json context_json(const ReportContext& c) {
  nlohmann::json cfg = nlohmann::json::object();
  const auto parsed = KeyValueConfig::parse(c.config_text);
  for (const auto& [k, v] : parsed.entries()) cfg[k] = v;
  return {{"config", cfg}, {"seed", c.seed}, {"fingerprint", c.fingerprint}};
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

const std::vector<std::int32_t>& view_of(const PreparedSample& s, ModalityMask modality) {
  if (modality == kRoad) {
    if (s.road.empty()) throw DataError("trajectory " + std::to_string(s.id) + " has no road view");
    return s.road;
  }
  if (modality == kRegion) {
    if (s.region.empty()) throw DataError("trajectory " + std::to_string(s.id) + " has no region view");
    return s.region;
  }
  throw ParameterError("condition modality must be road or region");
}

}  // namespace

void RankingReport::finalize() {
  mr = mean_rank(ranks);
  mrr = omnitraj::mrr(ranks);
  hr1 = hit_rate(ranks, 1);
  hr5 = hit_rate(ranks, 5);
  hr10 = hit_rate(ranks, 10);
}

std::string RankingReport::to_json_line() const {
  nlohmann::json j = context_json(context);
  j["report"] = "ranking";
  j["query"] = label;
  j["queries"] = ranks.size();
  j["MR"] = mr;
  j["MRR"] = mrr;
  j["HR@1"] = hr1;
  j["HR@5"] = hr5;
  j["HR@10"] = hr10;
  if (coarse_subset) j["coarse_subset"] = *coarse_subset;
  j["ranks"] = ranks;
  return j.dump();
}

std::string CoverageReport::to_json_line() const {
  nlohmann::json j = context_json(context);
  j["report"] = "coverage";
  j["condition"] = modality_name(modality);
  j["condition_length"] = condition_length;
  j["queries"] = cr1_per_query.size();
  j["CR@1"] = cr1;
  j["CR@5"] = cr5;
  j["CR@5_averaged"] = cr5_averaged;
  for (const auto& [k, v] : cr_at) j["CR@" + std::to_string(k)] = v;
  j["cr1_per_query"] = cr1_per_query;
  j["cr5_per_query"] = cr5_per_query;
  return j.dump();
}

std::string format_ranking_table(const std::vector<RankingReport>& reports) {
  std::ostringstream out;
  out << "query            |Q|      MR     MRR    HR@1    HR@5   HR@10\n";
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %5zu %7.3f %7.4f %7.4f %7.4f %7.4f\n", r.label.c_str(), r.ranks.size(),
                  r.mr, r.mrr, r.hr1, r.hr5, r.hr10);
    out << line;
  }
  return out.str();
}

std::string format_coverage_table(const std::vector<CoverageReport>& reports) {
  std::ostringstream out;
  out << "condition  length   |Q|    CR@1    CR@5  CR@5avg  extra\n";
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %7s %5zu %7.4f %7.4f %8.4f ", modality_name(r.modality).c_str(),
                  r.condition_length == 0 ? "full" : std::to_string(r.condition_length).c_str(),
                  r.cr1_per_query.size(), r.cr1, r.cr5, r.cr5_averaged);
    out << line;
    for (const auto& [k, v] : r.cr_at) out << " CR@" << k << '=' << fixed(v);
    out << '\n';
  }
  return out.str();
}

RankingReport run_similarity_eval(const OmniModel& model, const EmbeddingStore& targets,
                                  const std::vector<PreparedSample>& tests, ModalityMask query,
                                  const std::optional<CoarseStage>& coarse, const ReportContext& context) {
  if (tests.empty()) throw ParameterError("no test trajectories");
  RankingReport report;
  report.label = modality_name(query);
  report.context = context;
  if (coarse) {
    if (!coarse->store) throw ParameterError("coarse stage has no store");
    report.coarse_subset = coarse->subset;
  }
  report.ranks.reserve(tests.size());
  for (const auto& s : tests) {
    if (!targets.index_of(s.id)) throw DataError("test trajectory " + std::to_string(s.id) + " is not in the store");
    const auto q = model.embed_vector(query, s);
    if (!coarse) {
      report.ranks.push_back(rank_of(targets, q, s.id));
      continue;
    }
    const auto qc = model.embed_vector(coarse->query, s);
    const auto subset = std::min(coarse->subset, targets.size());
    const auto result = two_stage(*coarse->store, targets, qc, q, subset, subset);
    std::size_t rank = targets.size();
    for (std::size_t i = 0; i < result.hits.size(); ++i)
      if (result.hits[i].id == s.id) rank = i + 1;
    report.ranks.push_back(rank);
  }
  report.finalize();
  return report;
}

ElementIndex element_index(const std::vector<PreparedSample>& samples, ModalityMask modality) {
  ElementIndex index;
  index.reserve(samples.size());
  for (const auto& s : samples) index.emplace(s.id, view_of(s, modality));
  return index;
}

CoverageReport run_condition_eval(const OmniModel& model, const EmbeddingStore& targets,
                                  const ElementIndex& elements, const std::vector<PreparedSample>& tests,
                                  ModalityMask modality, std::size_t condition_length,
                                  const std::vector<std::size_t>& extra_k, const ReportContext& context) {
  if (tests.empty()) throw ParameterError("no test trajectories");
  CoverageReport report;
  report.modality = modality;
  report.condition_length = condition_length;
  report.context = context;

  std::size_t k_max = 5;
  for (auto k : extra_k) k_max = std::max(k_max, k);
  k_max = std::min(k_max, targets.size());
  std::vector<std::vector<double>> extra(extra_k.size());
  std::vector<double> averaged;

  for (const auto& s : tests) {
    const auto& full = view_of(s, modality);
    const std::size_t n = condition_length == 0 ? full.size() : std::min(condition_length, full.size());
    const std::vector<std::int32_t> condition(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));

    PreparedSample probe;
    probe.id = s.id;
    (modality == kRoad ? probe.road : probe.region) = condition;
    const auto q = model.embed_vector(modality, probe);
    const auto result = topk(targets, q, k_max);

    std::vector<std::vector<std::int32_t>> lists;
    for (const auto& h : result.hits) {
      const auto it = elements.find(h.id);
      if (it == elements.end()) throw DataError("no element list for trajectory " + std::to_string(h.id));
      lists.push_back(it->second);
    }
    auto first = [&](std::size_t k) {
      return std::vector<std::vector<std::int32_t>>(lists.begin(),
                                                    lists.begin() + static_cast<std::ptrdiff_t>(std::min(k, lists.size())));
    };
    report.cr1_per_query.push_back(coverage_rate(condition, first(1)));
    report.cr5_per_query.push_back(coverage_rate(condition, first(5)));
    averaged.push_back(averaged_coverage_rate(condition, first(5)));
    for (std::size_t e = 0; e < extra_k.size(); ++e) extra[e].push_back(coverage_rate(condition, first(extra_k[e])));
  }
  report.cr1 = mean(report.cr1_per_query);
  report.cr5 = mean(report.cr5_per_query);
  report.cr5_averaged = mean(averaged);
  for (std::size_t e = 0; e < extra_k.size(); ++e) report.cr_at.emplace_back(extra_k[e], mean(extra[e]));
  return report;
}

RankingReport run_heuristic_eval(Measure measure, const std::vector<Trajectory>& candidates,
                                 const std::vector<Trajectory>& query_topologies, std::size_t queries,
                                 double edr_eps, unsigned threads, const ReportContext& context) {
  const std::size_t count = std::min(queries, query_topologies.size());
  if (count == 0) throw ParameterError("no heuristic queries");
  std::unordered_map<TrajectoryId, std::size_t> position;
  for (std::size_t i = 0; i < candidates.size(); ++i) position.emplace(candidates[i].id, i);

  RankingReport report;
  report.label = std::string(measure_name(measure));
  report.context = context;
  report.ranks.assign(count, 0);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> dist(candidates.size());
    for (std::size_t qi = begin; qi < end; ++qi) {
      const auto& q = query_topologies[qi];
      const auto own = position.find(q.id);
      if (own == position.end()) throw DataError("query " + std::to_string(q.id) + " has no candidate");
      for (std::size_t c = 0; c < candidates.size(); ++c)
        dist[c] = evaluate_measure(measure, q.points, candidates[c].points, edr_eps);
      const double mine = dist[own->second];
      std::size_t rank = 1;
      for (std::size_t c = 0; c < candidates.size(); ++c)
        if (c != own->second && (dist[c] < mine || (dist[c] == mine && candidates[c].id < q.id))) ++rank;
      report.ranks[qi] = rank;
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    work(0, count);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(std::min(count, t * chunk), std::min(count, (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  report.finalize();
  return report;
}

}  // namespace omnitraj
