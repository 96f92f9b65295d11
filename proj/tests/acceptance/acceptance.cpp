// Acceptance run: one PASS/FAIL line per criterion, thresholds fixed below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "grad_suite.hpp"
#include "omnitraj/evaluation.hpp"
#include "omnitraj/pipeline.hpp"
#include "omnitraj/random.hpp"
#include "omnitraj/similarity.hpp"
#include "omnitraj/trainer.hpp"
#include "oracles.hpp"

using namespace omnitraj;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kOracleSeconds = 30.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr double kRopeNormTolerance = 1e-12;
constexpr double kRopeRelativeTolerance = 1e-9;
constexpr double kPermutationTolerance = 1e-9;
constexpr double kTopkScoreTolerance = 1e-6;
constexpr double kMinHr10 = 0.80;
constexpr double kMinMrr = 0.5;
constexpr double kTrainSeconds = 600.0;
constexpr double kMinCr1 = 0.7;
constexpr double kTwoStageGap = 0.05;
constexpr double kRoadTopSlack = 0.02;
constexpr double kScaleLow = 5.0, kScaleHigh = 15.0;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<Point> random_points(Rng& rng, std::size_t n) {
  std::vector<Point> p(n);
  for (auto& q : p) q = {rng.uniform(0, 1), rng.uniform(0, 1)};
  return p;
}

std::vector<float> unit_vector(Rng& rng, std::size_t w) {
  std::vector<double> v(w);
  double s = 0;
  for (auto& e : v) {
    e = rng.normal();
    s += e * e;
  }
  std::vector<float> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(s));
  return out;
}

EmbeddingStore random_store(Rng& rng, std::size_t n, std::size_t w) {
  std::vector<TrajectoryId> ids(n);
  std::vector<float> m;
  m.reserve(n * w);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<TrajectoryId>(i);
    const auto v = unit_vector(rng, w);
    m.insert(m.end(), v.begin(), v.end());
  }
  return EmbeddingStore(kTraj, static_cast<std::uint32_t>(w), {}, std::move(ids), std::move(m));
}

void oracle_equivalence() {
  Rng rng(2024);
  const auto t0 = Clock::now();
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto a = random_points(rng, 1 + rng.below(30));
    const auto b = random_points(rng, 1 + rng.below(30));
    mismatches += dtw(a, b) != oracle::dtw(a, b);
    mismatches += edr(a, b, 0.25) != oracle::edr(a, b, 0.25);
    mismatches += hausdorff(a, b) != oracle::hausdorff(a, b);
    mismatches += frechet(a, b) != oracle::frechet(a, b);
  }
  const double secs = seconds_since(t0);
  report(mismatches == 0 && secs < kOracleSeconds, "oracle-equivalence",
         fmt("%d mismatches over 200 pairs x 4 measures, %.2f s", mismatches, secs));
}

void gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_name;
  std::size_t checks = 0;
  for (const auto& suite : {gradsuite::run_layer_checks(), gradsuite::run_encoder_checks()})
    for (const auto& r : suite) {
      ++checks;
      if (r.error > worst) worst = r.error, worst_name = r.name;
    }
  const double secs = seconds_since(t0);
  report(worst < kGradTolerance && secs < kGradSeconds, "gradient-suite",
         fmt("%zu checks, max rel err %.2e (%s), %.1f s", checks, worst, worst_name.c_str(), secs));
}

void rope_properties() {
  Rng rng(31);
  const auto e = gradsuite::random_tensor(rng, 1, 16);
  const bool identity = nn::rope_rotate(e, std::vector<double>{0.0}) == e;
  double norm_err = 0, rel_err = 0;
  for (int t = 0; t < 20; ++t) {
    const auto u = gradsuite::random_tensor(rng, 1, 16), v = gradsuite::random_tensor(rng, 1, 16);
    const double i = static_cast<double>(rng.below(64)), j = static_cast<double>(rng.below(64));
    const double shift = static_cast<double>(rng.below(128));
    auto dot_at = [&](double pi, double pj) {
      const auto a = nn::rope_rotate(u, std::vector<double>{pi});
      const auto b = nn::rope_rotate(v, std::vector<double>{pj});
      double s = 0;
      for (int k = 0; k < 16; ++k) s += a(0, k) * b(0, k);
      return s;
    };
    rel_err = std::max(rel_err, std::abs(dot_at(i, j) - dot_at(i + shift, j + shift)));
    const auto ru = nn::rope_rotate(u, std::vector<double>{i});
    for (int k = 0; k < 8; ++k)
      norm_err = std::max(norm_err, std::abs(std::hypot(u(0, k), u(0, k + 8)) - std::hypot(ru(0, k), ru(0, k + 8))));
  }
  report(identity && norm_err <= kRopeNormTolerance && rel_err <= kRopeRelativeTolerance, "rope-properties",
         fmt("identity at 0: %s, plane norm err %.2e, relative-offset err %.2e", identity ? "yes" : "no", norm_err,
             rel_err));
}

void region_permutation(const OmniModel& model) {
  std::vector<RegionId> ids{3, 250, 17, 88, 120, 5, 64, 199, 31, 42};
  const auto base = model.embed_region(ids).value();
  Rng rng(77);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    rng.shuffle(ids.begin(), ids.end());
    const auto e = model.embed_region(ids).value();
    for (std::size_t c = 0; c < e.cols(); ++c) worst = std::max(worst, std::abs(e(0, c) - base(0, c)));
  }
  report(worst <= kPermutationTolerance, "region-permutation", fmt("max deviation %.2e over 50 permutations", worst));
}

void topk_exactness() {
  Rng rng(4242);
  const auto store = random_store(rng, 1000, 32);
  int id_mismatch = 0;
  double score_err = 0;
  for (int t = 0; t < 50; ++t) {
    const auto q = unit_vector(rng, 32);
    std::vector<Hit> all;
    for (std::size_t r = 0; r < store.size(); ++r) {
      double d = 0;
      for (std::size_t c = 0; c < 32; ++c) d += static_cast<double>(store.row(r)[c]) * q[c];
      all.push_back({store.ids()[r], d});
    }
    std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
      return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    const auto got = topk(store, q, 10).hits;
    for (std::size_t i = 0; i < 10; ++i) {
      id_mismatch += got[i].id != all[i].id;
      score_err = std::max(score_err, std::abs(got[i].score - all[i].score));
    }
  }
  report(id_mismatch == 0 && score_err <= kTopkScoreTolerance, "topk-exactness",
         fmt("%d id mismatches, max score err %.2e over 50 queries", id_mismatch, score_err));
}

void scan_scaling() {
  Rng rng(99);
  std::vector<float> queries;
  for (int i = 0; i < 1000; ++i) {
    const auto q = unit_vector(rng, 64);
    queries.insert(queries.end(), q.begin(), q.end());
  }
  auto timed = [&](std::size_t rows) {
    const auto store = random_store(rng, rows, 64);
    (void)topk_batch(store, std::span<const float>(queries.data(), 64 * 10), 10, 1);  // warm-up
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      const auto r = topk_batch(store, queries, 10, 1);
      best = std::min(best, seconds_since(t0));
      if (r.size() != 1000) return -1.0;
    }
    return best;
  };
  const double small = timed(20000), large = timed(200000);
  const double ratio = large / small;
  report(small > 0 && ratio >= kScaleLow && ratio <= kScaleHigh, "scan-scaling",
         fmt("20k rows %.3f s, 200k rows %.3f s, ratio %.2f", small, large, ratio));
}

struct ToyRun {
  Corpus corpus;
  OmniModel model;
  std::vector<PreparedSample> tests;
  double train_seconds = 0;
  double final_loss = 0, first_loss = 0;
};

ToyRun toy_training() {
  CorpusOptions copts;  // 2000 train / 200 test on an 8 x 8 lattice, seed 1
  auto corpus = generate_corpus(copts);
  auto cfg = encoder_config_for(corpus.network, corpus.grid);  // d=32, h=64, N=2
  OmniModel model(cfg);
  const auto train_samples = prepare_samples(model, corpus.train, corpus.grid);
  TrainOptions opts;  // B=64, 30 epochs, seed 1
  const auto t0 = Clock::now();
  const auto result = train(model, train_samples, opts, [](const EpochRecord& e) {
    std::printf("  epoch %2d  loss %.4f  %.1f s\n", e.epoch, e.total, e.seconds);
    std::fflush(stdout);
  });
  const double secs = seconds_since(t0);
  auto tests = prepare_samples(model, corpus.test, corpus.grid);
  return {std::move(corpus), std::move(model), std::move(tests), secs, result.curve.back().total,
          result.curve.front().total};
}

void toy_criteria(const ToyRun& run) {
  const auto traj = build_store(run.model, run.tests, kTraj);
  const auto top = run_similarity_eval(run.model, traj, run.tests, kTopology);
  report(top.hr10 >= kMinHr10 && top.mrr >= kMinMrr && run.train_seconds <= kTrainSeconds, "toy-training",
         fmt("HR@10 %.3f, MRR %.3f, HR@1 %.3f, MR %.2f, training %.0f s (loss %.3f -> %.3f)", top.hr10, top.mrr,
             top.hr1, top.mr, run.train_seconds, run.first_loss, run.final_loss));

  const auto road_elems = element_index(run.tests, kRoad);
  const auto reg_elems = element_index(run.tests, kRegion);
  const auto road_cov = run_condition_eval(run.model, traj, road_elems, run.tests, kRoad);
  const auto reg_cov = run_condition_eval(run.model, traj, reg_elems, run.tests, kRegion);
  report(road_cov.cr1 >= kMinCr1 && reg_cov.cr1 >= kMinCr1, "condition-coverage",
         fmt("road CR@1 %.3f CR@5 %.3f, region CR@1 %.3f CR@5 %.3f", road_cov.cr1, road_cov.cr5, reg_cov.cr1,
             reg_cov.cr5));

  const auto roads = build_store(run.model, run.tests, kRoad);
  const std::size_t subset = run.tests.size() / 10;
  const auto two = run_similarity_eval(run.model, traj, run.tests, kTopology, CoarseStage{&roads, kRoad, subset});
  report(std::abs(two.hr10 - top.hr10) <= kTwoStageGap, "two-stage-parity",
         fmt("single HR@10 %.3f, road-filtered S=%zu HR@10 %.3f", top.hr10, subset, two.hr10));

  const auto reg = run_similarity_eval(run.model, traj, run.tests, kRegion);
  const auto road = run_similarity_eval(run.model, traj, run.tests, kRoad);
  const auto road_top =
      run_similarity_eval(run.model, traj, run.tests, static_cast<ModalityMask>(kRoad | kTopology));
  report(top.mrr > reg.mrr && road_top.hr10 >= road.hr10 - kRoadTopSlack, "modality-ordering",
         fmt("MRR top %.3f > reg %.3f; HR@10 road+top %.3f vs road %.3f", top.mrr, reg.mrr, road_top.hr10,
             road.hr10));
  std::printf("%s", format_ranking_table({top, reg, road, road_top, two}).c_str());
}

// Every stage run twice from the same seed must agree bit for bit.
void determinism() {
  CorpusOptions copts;
  copts.train = 150;
  copts.test = 40;
  copts.seed = 9;
  const auto a = generate_corpus(copts), b = generate_corpus(copts);
  bool same_data = a.train == b.train && a.test == b.test && a.network == b.network;

  auto cfg = encoder_config_for(a.network, a.grid);
  TrainOptions opts;
  opts.epochs = 2;
  OmniModel ma(cfg), mb(cfg);
  const auto ra = train(ma, prepare_samples(ma, a.train, a.grid), opts);
  const auto rb = train(mb, prepare_samples(mb, b.train, b.grid), opts);
  bool same_train = ma.checkpoint().serialize() == mb.checkpoint().serialize();
  for (std::size_t e = 0; e < ra.curve.size(); ++e) same_train = same_train && ra.curve[e].total == rb.curve[e].total;

  const auto ta = prepare_samples(ma, a.test, a.grid), tb = prepare_samples(mb, b.test, b.grid);
  bool same_stores = true;
  for (ModalityMask m : {kTraj, kTopology, kRoad, kRegion}) same_stores = same_stores && build_store(ma, ta, m) == build_store(mb, tb, m);

  const auto sa = build_store(ma, ta, kTraj);
  const auto ea = run_similarity_eval(ma, sa, ta, kTopology);
  const auto eb = run_similarity_eval(mb, build_store(mb, tb, kTraj), tb, kTopology);
  const auto ca = run_condition_eval(ma, sa, element_index(ta, kRoad), ta, kRoad);
  const auto cb = run_condition_eval(mb, sa, element_index(tb, kRoad), tb, kRoad);
  std::vector<Trajectory> cand, topo;
  for (const auto& r : a.test) cand.push_back(r.trajectory), topo.push_back({r.trajectory.id, r.topology->points});
  const bool same_eval = ea.ranks == eb.ranks && ca.cr1_per_query == cb.cr1_per_query &&
                         run_heuristic_eval(Measure::dtw, cand, topo, 20).ranks ==
                             run_heuristic_eval(Measure::dtw, cand, topo, 20, 0.25, 1).ranks;
  report(same_data && same_train && same_stores && same_eval, "determinism",
         fmt("data %s, training %s, stores %s, evaluation %s", same_data ? "same" : "DIFFERENT",
             same_train ? "same" : "DIFFERENT", same_stores ? "same" : "DIFFERENT", same_eval ? "same" : "DIFFERENT"));
}

}  // namespace

int main() {
  oracle_equivalence();
  gradient_suite();
  rope_properties();
  topk_exactness();
  scan_scaling();
  determinism();
  const auto run = toy_training();
  region_permutation(run.model);
  toy_criteria(run);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
