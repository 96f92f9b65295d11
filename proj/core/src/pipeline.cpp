#include "omnitraj/pipeline.hpp"

#include "omnitraj/error.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj {

void CorpusOptions::write(KeyValueConfig& kv) const {
  kv.set("seed", static_cast<std::int64_t>(seed));
  kv.set("data.rows", rows);
  kv.set("data.cols", cols);
  kv.set("data.jitter", jitter);
  kv.set("data.train", train);
  kv.set("data.test", test);
  kv.set("data.min_hops", walk.min_hops);
  kv.set("data.max_hops", walk.max_hops);
  kv.set("data.min_points", walk.min_points);
  kv.set("data.noise", walk.noise);
}

CorpusOptions CorpusOptions::from_kv(const KeyValueConfig& kv) {
  CorpusOptions o;
  o.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(o.seed)));
  o.rows = static_cast<int>(kv.get_int("data.rows", o.rows));
  o.cols = static_cast<int>(kv.get_int("data.cols", o.cols));
  o.jitter = kv.get_double("data.jitter", o.jitter);
  o.train = static_cast<int>(kv.get_int("data.train", o.train));
  o.test = static_cast<int>(kv.get_int("data.test", o.test));
  o.walk.min_hops = static_cast<int>(kv.get_int("data.min_hops", o.walk.min_hops));
  o.walk.max_hops = static_cast<int>(kv.get_int("data.max_hops", o.walk.max_hops));
  o.walk.min_points = static_cast<int>(kv.get_int("data.min_points", o.walk.min_points));
  o.walk.noise = kv.get_double("data.noise", o.walk.noise);
  if (o.train < 0 || o.test < 0 || o.train + o.test < 1) throw ConfigError("need at least one trajectory");
  return o;
}

Corpus generate_corpus(const CorpusOptions& opts) {
  Corpus c;
  c.network = generate_network(mix_seed(opts.seed, 1), opts.rows, opts.cols, opts.jitter);
  c.grid = grid_for_network(c.network);
  auto walks = generate_trajectories(c.network, opts.train + opts.test, mix_seed(opts.seed, 2), opts.walk);
  Dataset all;
  all.reserve(walks.size());
  for (auto& w : walks) all.push_back({std::move(w.trajectory), std::move(w.road), std::nullopt, std::nullopt});
  extract_views(all, c.grid);
  c.train.assign(all.begin(), all.begin() + opts.train);
  c.test.assign(all.begin() + opts.train, all.end());
  return c;
}

EncoderConfig encoder_config_for(const RoadNetwork& net, const GridSpec& grid) {
  EncoderConfig cfg;
  cfg.road_vocab = static_cast<int>(net.segment_count());
  cfg.region_vocab = grid.cell_count();
  cfg.frame_box = grid.box();
  return cfg;
}

std::vector<PreparedSample> prepare_samples(const OmniModel& model, const Dataset& records, const GridSpec& grid) {
  std::vector<PreparedSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(model.prepare(r, &grid));
  return out;
}

}  // namespace omnitraj
