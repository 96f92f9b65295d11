#include "omnitraj/augment.hpp"

#include <algorithm>
#include <cmath>

#include "omnitraj/error.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj {

void AugmentationPolicy::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(reverse_prob) && prob(shuffle_prob) && prob(replace_prob) && prob(region_drop_prob),
          "augmentation probabilities must lie in [0, 1]");
  require(keep_min > 0.0 && keep_min <= keep_max && keep_max <= 1.0, "keep fraction range must lie in (0, 1]");
  require(shuffle_window >= 2, "shuffle window must be >= 2");
}

AugmentationPolicy AugmentationPolicy::identity() {
  AugmentationPolicy p;
  p.reverse_prob = 0.0;
  p.keep_min = p.keep_max = 1.0;
  p.shuffle_prob = 0.0;
  p.replace_prob = 0.0;
  p.region_shuffle = false;
  p.region_drop_prob = 0.0;
  return p;
}

void AugmentationPolicy::write(KeyValueConfig& kv) const {
  kv.set("augment.reverse_prob", reverse_prob);
  kv.set("augment.keep_min", keep_min);
  kv.set("augment.keep_max", keep_max);
  kv.set("augment.shuffle_prob", shuffle_prob);
  kv.set("augment.shuffle_window", shuffle_window);
  kv.set("augment.replace_prob", replace_prob);
  kv.set("augment.region_shuffle", region_shuffle);
  kv.set("augment.region_drop_prob", region_drop_prob);
}

AugmentationPolicy AugmentationPolicy::from_kv(const KeyValueConfig& kv) {
  AugmentationPolicy p;
  p.reverse_prob = kv.get_double("augment.reverse_prob", p.reverse_prob);
  p.keep_min = kv.get_double("augment.keep_min", p.keep_min);
  p.keep_max = kv.get_double("augment.keep_max", p.keep_max);
  p.shuffle_prob = kv.get_double("augment.shuffle_prob", p.shuffle_prob);
  p.shuffle_window = static_cast<int>(kv.get_int("augment.shuffle_window", p.shuffle_window));
  p.replace_prob = kv.get_double("augment.replace_prob", p.replace_prob);
  p.region_shuffle = kv.get_bool("augment.region_shuffle", p.region_shuffle);
  p.region_drop_prob = kv.get_double("augment.region_drop_prob", p.region_drop_prob);
  p.validate();
  return p;
}

RoadSeq augment_road(const RoadSeq& s, const AugmentationPolicy& policy, std::uint64_t seed, int vocab) {
  require(!s.segment_ids.empty(), "cannot augment an empty road sequence");
  Rng rng(seed);
  auto ids = s.segment_ids;

  if (rng.bernoulli(policy.reverse_prob)) std::reverse(ids.begin(), ids.end());

  const double keep = policy.keep_min == policy.keep_max ? policy.keep_min
                                                         : rng.uniform(policy.keep_min, policy.keep_max);
  const auto n = ids.size();
  const auto kept = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(keep * static_cast<double>(n))), 1, n);
  if (kept < n) {
    const auto start = static_cast<std::ptrdiff_t>(rng.below(n - kept + 1));
    ids = std::vector<SegmentId>(ids.begin() + start, ids.begin() + start + static_cast<std::ptrdiff_t>(kept));
  }

  if (rng.bernoulli(policy.shuffle_prob)) {
    const auto w = static_cast<std::size_t>(policy.shuffle_window);
    for (std::size_t b = 0; b < ids.size(); b += w) {
      const auto e = std::min(ids.size(), b + w);
      rng.shuffle(ids.begin() + static_cast<std::ptrdiff_t>(b), ids.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }

  if (policy.replace_prob > 0.0 && vocab > 0) {
    for (auto& id : ids)
      if (rng.bernoulli(policy.replace_prob)) id = static_cast<SegmentId>(rng.below(static_cast<std::uint64_t>(vocab)));
  }
  return {s.trajectory_id, std::move(ids)};
}

RegionSeq augment_region(const RegionSeq& s, const AugmentationPolicy& policy, std::uint64_t seed) {
  require(!s.region_ids.empty(), "cannot augment an empty region sequence");
  Rng rng(seed);
  auto ids = s.region_ids;
  if (policy.region_shuffle) rng.shuffle(ids.begin(), ids.end());
  if (policy.region_drop_prob > 0.0) {
    std::vector<RegionId> kept;
    for (auto id : ids)
      if (!rng.bernoulli(policy.region_drop_prob)) kept.push_back(id);
    if (kept.empty()) kept.push_back(ids[rng.below(ids.size())]);
    ids = std::move(kept);
  }
  return {s.trajectory_id, std::move(ids)};
}

}  // namespace omnitraj
