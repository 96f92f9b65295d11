#pragma once

#include <cstdint>
#include <vector>

#include "omnitraj/config.hpp"
#include "omnitraj/dataset_io.hpp"
#include "omnitraj/generator.hpp"
#include "omnitraj/model.hpp"

namespace omnitraj {

struct CorpusOptions {
  std::uint64_t seed = 1;
  int rows = 8;
  int cols = 8;
  double jitter = 0.2;
  int train = 2000;
  int test = 200;
  WalkOptions walk;

  void write(KeyValueConfig& kv) const;  // "data.*" keys plus "seed"
  static CorpusOptions from_kv(const KeyValueConfig& kv);
};

struct Corpus {
  RoadNetwork network;
  GridSpec grid;
  Dataset train;  // ids 0 .. train-1
  Dataset test;   // ids train .. train+test-1
};

/// Network, walks and every derived view (road, topology, region).
Corpus generate_corpus(const CorpusOptions& opts);

/// Encoder defaults sized to the network's road vocabulary and the grid.
EncoderConfig encoder_config_for(const RoadNetwork& net, const GridSpec& grid);

std::vector<PreparedSample> prepare_samples(const OmniModel& model, const Dataset& records, const GridSpec& grid);

}  // namespace omnitraj
