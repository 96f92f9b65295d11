#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "omnitraj/augment.hpp"
#include "omnitraj/error.hpp"
#include "omnitraj/loss.hpp"
#include "omnitraj/random.hpp"
#include "omnitraj/trainer.hpp"

using namespace omnitraj;
using nn::Tensor;

namespace {

Tensor unit_rows(Rng& rng, std::size_t n, std::size_t w) {
  Tensor t(n, w);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < w; ++c) {
      t(r, c) = rng.normal();
      s += t(r, c) * t(r, c);
    }
    for (std::size_t c = 0; c < w; ++c) t(r, c) /= std::sqrt(s);
  }
  return t;
}

double loss_of(const Tensor& q, const Tensor& k, double tau) {
  return info_nce(nn::constant(q), nn::constant(k), tau).item();
}

// Direct softmax cross-entropy on the similarity matrix.
double reference_nce(const Tensor& q, const Tensor& k, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<double> s(k.rows());
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      s[j] = dot / tau;
    }
    double z = 0;
    for (double v : s) z += std::exp(v);
    total += -(s[i] - std::log(z));
  }
  return total / static_cast<double>(q.rows());
}

Tensor random_orthogonal(Rng& rng, std::size_t n) {
  Tensor m(n, n);
  for (auto& v : m.values()) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < n; ++c) dot += m(i, c) * m(j, c);
      for (std::size_t c = 0; c < n; ++c) m(i, c) -= dot * m(j, c);
    }
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += m(i, c) * m(i, c);
    for (std::size_t c = 0; c < n; ++c) m(i, c) /= std::sqrt(s);
  }
  return m;
}

Tensor times(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

RoadSeq ten_segments() {
  RoadSeq s{7, {}};
  for (int i = 0; i < 10; ++i) s.segment_ids.push_back(i + 1);
  return s;
}

}  // namespace

TEST_CASE("road augmentation examples") {
  auto none = AugmentationPolicy::identity();
  const RoadSeq s{3, {1, 2, 3}};
  CHECK(augment_road(s, none, 1, 10) == s);
  auto rev = none;
  rev.reverse_prob = 1.0;
  CHECK(augment_road(s, rev, 1, 10).segment_ids == std::vector<SegmentId>{3, 2, 1});

  auto half = none;
  half.keep_min = half.keep_max = 0.5;
  const auto base = ten_segments();
  const auto out = augment_road(base, half, 9, 100);
  CHECK(out == augment_road(base, half, 9, 100));
  CHECK(out.trajectory_id == base.trajectory_id);
  REQUIRE(out.segment_ids.size() == 5);
  // Replay the sampler: one reverse draw, then the window start.
  Rng replay(9);
  (void)replay.uniform();
  const auto start = static_cast<SegmentId>(replay.below(6));
  for (std::size_t i = 0; i < 5; ++i) CHECK(out.segment_ids[i] == base.segment_ids[start + i]);

  auto tiny = none;
  tiny.keep_min = tiny.keep_max = 0.01;
  CHECK(augment_road(base, tiny, 2, 100).segment_ids.size() == 1);

  const auto defaults = AugmentationPolicy{};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = augment_road(base, defaults, seed, 50);
    CHECK_FALSE(a.segment_ids.empty());
    CHECK(a.trajectory_id == base.trajectory_id);
    for (auto id : a.segment_ids) CHECK((id >= 0 && id <= 50));
  }
}

TEST_CASE("region augmentation examples") {
  const RegionSeq s{4, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  CHECK(augment_region(s, AugmentationPolicy::identity(), 3) == s);
  auto shuffle = AugmentationPolicy::identity();
  shuffle.region_shuffle = true;
  auto perm = augment_region(s, shuffle, 3).region_ids;
  CHECK(perm != s.region_ids);
  std::sort(perm.begin(), perm.end());
  CHECK(perm == s.region_ids);

  auto drop = AugmentationPolicy::identity();
  drop.region_drop_prob = 0.3;
  double total = 0;
  const int replays = 1000;
  for (int i = 0; i < replays; ++i) total += static_cast<double>(augment_region(s, drop, mix_seed(4, i)).region_ids.size());
  // Binomial(10, 0.7): standard error of the mean is sqrt(2.1 / 1000).
  CHECK(std::abs(total / replays - 7.0) <= 4.0 * std::sqrt(2.1 / replays));

  auto all = AugmentationPolicy::identity();
  all.region_drop_prob = 1.0;
  CHECK(augment_region(s, all, 1).region_ids.size() == 1);
}

TEST_CASE("augmentation policy validation") {
  AugmentationPolicy p;
  CHECK_NOTHROW(p.validate());
  p.keep_min = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.shuffle_window = 1;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.replace_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  KeyValueConfig kv;
  AugmentationPolicy q;
  q.reverse_prob = 0.4;
  q.write(kv);
  CHECK(AugmentationPolicy::from_kv(kv).reverse_prob == 0.4);
}

TEST_CASE("info_nce examples") {
  CHECK(std::abs(loss_of(Tensor{{1.0, 0.0}}, Tensor{{0.0, 1.0}}, 0.07)) <= 1e-15);
  const Tensor same{{1.0, 0.0}, {1.0, 0.0}};
  CHECK(std::abs(loss_of(same, same, 0.5) - std::log(2.0)) <= 1e-12);

  Rng rng(6);
  const auto q = unit_rows(rng, 3, 5);
  const auto k = unit_rows(rng, 3, 5);
  CHECK(std::abs(loss_of(q, k, 0.1) - reference_nce(q, k, 0.1)) <= 1e-9);
  CHECK(loss_of(q, k, 0.1) >= 0.0);
  CHECK_THROWS_AS(info_nce(nn::constant(q), nn::constant(k), 0.0), ParameterError);
  CHECK_THROWS_AS(info_nce(nn::constant(q), nn::constant(k), -1.0), ParameterError);
}

TEST_CASE("info_nce is invariant under a common rotation") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = unit_rows(rng, 6, 8);
    const auto k = unit_rows(rng, 6, 8);
    const auto rot = random_orthogonal(rng, 8);
    CHECK(std::abs(loss_of(q, k, 0.07) - loss_of(times(q, rot), times(k, rot), 0.07)) <= 1e-9);
  }
}

TEST_CASE("bidirectional loss") {
  const Tensor e{{1.0, 0.0}, {0.0, 1.0}};
  std::vector<std::pair<ModalityMask, nn::Var>> batch{
      {kTraj, nn::constant(e)}, {kTopology, nn::constant(e)}, {kRoad, nn::constant(e)}, {kRegion, nn::constant(e)}};
  const auto report = bidirectional_loss(batch, 1.0);
  const double expected = 6.0 * -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  CHECK(std::abs(report.total_value() - expected) <= 1e-12);
  CHECK(report.terms.size() == 3);
  double sum = 0;
  for (const auto& t : report.terms) {
    CHECK(t.traj_to_modality == doctest::Approx(t.modality_to_traj));
    sum += t.traj_to_modality + t.modality_to_traj;
  }
  CHECK(std::abs(sum - report.total_value()) <= 1e-12);
  CHECK(report.tau == 1.0);

  CHECK_THROWS_AS(bidirectional_loss({{kRoad, nn::constant(e)}, {kRegion, nn::constant(e)}}, 1.0), ParameterError);
  CHECK_THROWS_AS(bidirectional_loss({{kTraj, nn::constant(e)}}, 1.0), ParameterError);
}

TEST_CASE("halving the temperature keeps the softmax argmax") {
  Rng rng(8);
  const auto q = unit_rows(rng, 1, 6);
  const auto k = unit_rows(rng, 7, 6);
  auto argmax = [&](double tau) {
    std::size_t best = 0;
    double top = -1e300;
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < 6; ++c) dot += q(0, c) * k(j, c);
      if (dot / tau > top) top = dot / tau, best = j;
    }
    return best;
  };
  CHECK(argmax(0.07) == argmax(0.035));
}

TEST_CASE("training is deterministic per seed and epochs=0 keeps the initialization") {
  const auto corpus = fixture::tiny_corpus();
  const auto cfg = fixture::tiny_config(corpus);
  TrainOptions opts;
  opts.epochs = 2;
  opts.batch_size = 8;
  opts.seed = 3;

  OmniModel a(cfg), b(cfg);
  const auto samples = prepare_samples(a, corpus.train, corpus.grid);
  const auto init = a.checkpoint().fingerprint();
  const auto ra = train(a, samples, opts);
  const auto rb = train(b, samples, opts);
  REQUIRE(ra.curve.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(ra.curve[e].total == rb.curve[e].total);
    CHECK(ra.curve[e].modality_loss == rb.curve[e].modality_loss);
    CHECK(ra.curve[e].epoch == static_cast<int>(e) + 1);
  }
  CHECK(a.checkpoint().fingerprint() == b.checkpoint().fingerprint());
  CHECK_FALSE(a.checkpoint().fingerprint() == init);
  CHECK(ra.steps == 6);

  OmniModel c(cfg);
  opts.epochs = 0;
  const auto rc = train(c, samples, opts);
  CHECK(rc.curve.empty());
  CHECK(c.checkpoint().fingerprint() == init);

  const auto line = ra.curve[0].to_json_line();
  CHECK(line.find("\"epoch\":1") != std::string::npos);
  CHECK(line.find("\"total\"") != std::string::npos);
}

TEST_CASE("training options round trip") {
  TrainOptions o;
  o.epochs = 7;
  o.tau = 0.1;
  o.modalities = {kRoad, static_cast<ModalityMask>(kRoad | kTopology)};
  KeyValueConfig kv;
  o.write(kv);
  const auto back = TrainOptions::from_kv(kv);
  CHECK(back.epochs == 7);
  CHECK(back.tau == 0.1);
  CHECK(back.modalities == o.modalities);
}
