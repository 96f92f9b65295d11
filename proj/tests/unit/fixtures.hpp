#pragma once

#include "omnitraj/model.hpp"
#include "omnitraj/pipeline.hpp"

namespace fixture {

// A small lattice corpus and a narrow model that trains in well under a second.
inline omnitraj::Corpus tiny_corpus(std::uint64_t seed = 5, int train = 24, int test = 8) {
  omnitraj::CorpusOptions opts;
  opts.seed = seed;
  opts.rows = 4;
  opts.cols = 4;
  opts.train = train;
  opts.test = test;
  return omnitraj::generate_corpus(opts);
}

inline omnitraj::EncoderConfig tiny_config(const omnitraj::Corpus& c) {
  auto cfg = omnitraj::encoder_config_for(c.network, c.grid);
  cfg.d = 8;
  cfg.h = 8;
  cfg.blocks = 1;
  cfg.heads = 2;
  cfg.length = 16;
  cfg.patch = 4;
  return cfg;
}

}  // namespace fixture
