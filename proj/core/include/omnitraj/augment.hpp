#pragma once

#include <cstdint>

#include "omnitraj/config.hpp"
#include "omnitraj/geometry.hpp"

namespace omnitraj {

struct AugmentationPolicy {
  double reverse_prob = 0.3;
  double keep_min = 0.5;   // contiguous window keeps a uniform fraction
  double keep_max = 1.0;   // in [keep_min, keep_max] of the segments
  double shuffle_prob = 0.3;
  int shuffle_window = 3;
  double replace_prob = 0.1;  // per segment
  bool region_shuffle = true;
  double region_drop_prob = 0.2;  // per region id

  void validate() const;
  static AugmentationPolicy identity();

  void write(KeyValueConfig& kv) const;
  static AugmentationPolicy from_kv(const KeyValueConfig& kv);
};

/// Reverse, contiguous truncation, windowed shuffle and random replacement,
/// in that order, each drawn independently. Never returns an empty sequence.
/// `vocab` bounds replacement ids. Deterministic per seed.
RoadSeq augment_road(const RoadSeq& s, const AugmentationPolicy& policy, std::uint64_t seed, int vocab);

/// Optional full shuffle followed by independent per-id removal; keeps at
/// least one id. Deterministic per seed.
RegionSeq augment_region(const RegionSeq& s, const AugmentationPolicy& policy, std::uint64_t seed);

}  // namespace omnitraj
