#include "omnitraj/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "omnitraj/error.hpp"
#include "omnitraj/modality.hpp"

namespace omnitraj {

using nn::Tensor;
using nn::Var;

std::string_view pooling_name(Pooling p) {
  switch (p) {
    case Pooling::cls: return "cls";
    case Pooling::bos: return "bos";
    case Pooling::mean: return "mean";
  }
  return "cls";
}

Pooling parse_pooling(std::string_view s) {
  if (s == "cls") return Pooling::cls;
  if (s == "bos") return Pooling::bos;
  if (s == "mean") return Pooling::mean;
  throw ConfigError("unknown pooling mode: " + std::string(s));
}

void EncoderConfig::validate() const {
  if (d <= 0 || h <= 0 || blocks < 0 || heads <= 0) throw ConfigError("encoder widths must be positive");
  if (d % heads != 0) throw ConfigError("d must be divisible by the head count");
  if ((d / heads) % 2 != 0) throw ConfigError("head width must be even for rotary embeddings");
  if (patch <= 0 || length < 2 || length / patch < 1) throw ConfigError("need floor(L / P) >= 1 patches");
  if (max_topology < 1 || max_road < 1 || max_region < 1) throw ConfigError("max sequence lengths must be >= 1");
  if (road_vocab < 1) throw ConfigError("road vocabulary size must be >= 1");
  if (region_vocab < 1) throw ConfigError("region vocabulary size must be >= 1");
  if (frame == FrameMode::global && !(frame_box.max_x > frame_box.min_x && frame_box.max_y > frame_box.min_y))
    throw ConfigError("global frame needs a non-degenerate bounding box");
}

KeyValueConfig EncoderConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("encoder.d", d);
  kv.set("encoder.h", h);
  kv.set("encoder.blocks", blocks);
  kv.set("encoder.heads", heads);
  kv.set("encoder.patch", patch);
  kv.set("encoder.length", length);
  kv.set("encoder.max_topology", max_topology);
  kv.set("encoder.max_road", max_road);
  kv.set("encoder.max_region", max_region);
  kv.set("encoder.road_vocab", road_vocab);
  kv.set("encoder.region_vocab", region_vocab);
  kv.set("encoder.rope_base", rope_base);
  kv.set("encoder.pooling.traj", std::string(pooling_name(traj_pooling)));
  kv.set("encoder.pooling.topology", std::string(pooling_name(topology_pooling)));
  kv.set("encoder.pooling.road", std::string(pooling_name(road_pooling)));
  kv.set("encoder.pooling.region", std::string(pooling_name(region_pooling)));
  kv.set("encoder.head_activation", head_activation == HeadActivation::gelu ? "gelu" : "identity");
  kv.set("encoder.frame", frame == FrameMode::global ? "global" : "local");
  kv.set("encoder.frame.min_x", frame_box.min_x);
  kv.set("encoder.frame.min_y", frame_box.min_y);
  kv.set("encoder.frame.max_x", frame_box.max_x);
  kv.set("encoder.frame.max_y", frame_box.max_y);
  kv.set("encoder.seed", static_cast<std::int64_t>(seed));
  return kv;
}

EncoderConfig EncoderConfig::from_kv(const KeyValueConfig& kv) {
  EncoderConfig c;
  c.d = static_cast<int>(kv.get_int("encoder.d", c.d));
  c.h = static_cast<int>(kv.get_int("encoder.h", c.h));
  c.blocks = static_cast<int>(kv.get_int("encoder.blocks", c.blocks));
  c.heads = static_cast<int>(kv.get_int("encoder.heads", c.heads));
  c.patch = static_cast<int>(kv.get_int("encoder.patch", c.patch));
  c.length = static_cast<int>(kv.get_int("encoder.length", c.length));
  c.max_topology = static_cast<int>(kv.get_int("encoder.max_topology", c.max_topology));
  c.max_road = static_cast<int>(kv.get_int("encoder.max_road", c.max_road));
  c.max_region = static_cast<int>(kv.get_int("encoder.max_region", c.max_region));
  c.road_vocab = static_cast<int>(kv.get_int("encoder.road_vocab", c.road_vocab));
  c.region_vocab = static_cast<int>(kv.get_int("encoder.region_vocab", c.region_vocab));
  c.rope_base = kv.get_double("encoder.rope_base", c.rope_base);
  c.traj_pooling = parse_pooling(kv.get_string("encoder.pooling.traj", "cls"));
  c.topology_pooling = parse_pooling(kv.get_string("encoder.pooling.topology", "cls"));
  c.road_pooling = parse_pooling(kv.get_string("encoder.pooling.road", "bos"));
  c.region_pooling = parse_pooling(kv.get_string("encoder.pooling.region", "cls"));
  const auto act = kv.get_string("encoder.head_activation", "gelu");
  if (act != "gelu" && act != "identity") throw ConfigError("unknown head activation: " + act);
  c.head_activation = act == "gelu" ? HeadActivation::gelu : HeadActivation::identity;
  const auto frame = kv.get_string("encoder.frame", "global");
  if (frame != "global" && frame != "local") throw ConfigError("unknown frame mode: " + frame);
  c.frame = frame == "global" ? FrameMode::global : FrameMode::local;
  c.frame_box.min_x = kv.get_double("encoder.frame.min_x", c.frame_box.min_x);
  c.frame_box.min_y = kv.get_double("encoder.frame.min_y", c.frame_box.min_y);
  c.frame_box.max_x = kv.get_double("encoder.frame.max_x", c.frame_box.max_x);
  c.frame_box.max_y = kv.get_double("encoder.frame.max_y", c.frame_box.max_y);
  c.seed = static_cast<std::uint64_t>(kv.get_int("encoder.seed", static_cast<std::int64_t>(c.seed)));
  return c;
}

Tensor patchify(std::span<const Point> points, int patch) {
  require(patch >= 1, "patch size must be >= 1");
  const auto L = static_cast<int>(points.size());
  if (patch > L) throw ParameterError("patch size exceeds trajectory length");
  const int count = L / patch;
  Tensor out(static_cast<std::size_t>(count), static_cast<std::size_t>(2 * patch));
  for (int p = 0; p < count; ++p) {
    for (int k = 0; k < patch; ++k) {
      const auto& pt = points[static_cast<std::size_t>(p * patch + k)];
      out(p, 2 * k) = pt.x;
      out(p, 2 * k + 1) = pt.y;
    }
  }
  return out;
}

namespace {

constexpr double kTokenInitStd = 0.02;

std::vector<nn::TransformerBlock> make_blocks(const EncoderConfig& cfg, Rng& rng) {
  std::vector<nn::TransformerBlock> blocks;
  for (int i = 0; i < cfg.blocks; ++i)
    blocks.emplace_back(static_cast<std::size_t>(cfg.d), static_cast<std::size_t>(cfg.heads), rng);
  return blocks;
}

void register_blocks(const std::string& prefix, const std::vector<nn::TransformerBlock>& blocks,
                     nn::ParameterSet& set) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    blocks[i].register_parameters(prefix + ".block" + std::to_string(i), set);
}

// Pools rows [first, rows) by mean, or returns row `special_row`.
Var pool_rows(const Var& hidden, Pooling pooling, std::size_t special_row) {
  if (pooling == Pooling::mean && hidden.rows() > special_row + 1) {
    const Var tokens = nn::slice_rows(hidden, special_row + 1, hidden.rows());
    const Var ones = nn::constant(Tensor(1, tokens.rows(), 1.0 / static_cast<double>(tokens.rows())));
    return nn::matmul(ones, tokens);
  }
  return nn::slice_rows(hidden, special_row, special_row + 1);
}

}  // namespace

SequenceTrunk::SequenceTrunk(const EncoderConfig& cfg, Pooling pool, bool use_rope, Rng& rng)
    : special(nn::parameter(nn::normal_init(rng, 1, static_cast<std::size_t>(cfg.d), kTokenInitStd))),
      blocks(make_blocks(cfg, rng)),
      final_norm(static_cast<std::size_t>(cfg.d)),
      pooling(pool),
      rope(use_rope),
      rope_base(cfg.rope_base) {}

Var SequenceTrunk::hidden(const Var& tokens, std::size_t left_pad, double position_offset,
                          std::vector<std::vector<Tensor>>* attention) const {
  if (tokens.rows() <= left_pad) throw ParameterError("sequence has no tokens");
  Var x;
  if (left_pad == 0) {
    x = nn::concat_rows({special, tokens});
  } else {
    x = nn::concat_rows({nn::slice_rows(tokens, 0, left_pad), special,
                         nn::slice_rows(tokens, left_pad, tokens.rows())});
  }
  std::vector<char> mask;
  if (left_pad > 0) {
    mask.assign(x.rows(), 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(left_pad), 1);
  }
  if (attention) attention->clear();
  for (const auto& block : blocks) {
    std::vector<Tensor> weights;
    nn::AttentionOptions opts;
    opts.rope = rope;
    opts.rope_base = rope_base;
    opts.position_offset = position_offset;
    opts.key_mask = mask;
    opts.attention_out = attention ? &weights : nullptr;
    x = block.forward(x, opts);
    if (attention) attention->push_back(std::move(weights));
  }
  return final_norm.forward(x);
}

Var SequenceTrunk::pool(const Var& hidden, std::size_t left_pad) const {
  return pool_rows(hidden, pooling, left_pad);
}

void SequenceTrunk::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  set.add(prefix + ".special", special);
  register_blocks(prefix, blocks, set);
  final_norm.register_parameters(prefix + ".final_norm", set);
}

TrajectoryEncoder::TrajectoryEncoder(const EncoderConfig& cfg, Rng& rng)
    : patch_projection(static_cast<std::size_t>(2 * cfg.patch), static_cast<std::size_t>(cfg.d), rng),
      cls(nn::parameter(nn::normal_init(rng, 1, static_cast<std::size_t>(cfg.d), kTokenInitStd))),
      positions(nn::parameter(nn::normal_init(rng, static_cast<std::size_t>(cfg.patch_count() + 1),
                                              static_cast<std::size_t>(cfg.d), kTokenInitStd))),
      blocks(make_blocks(cfg, rng)),
      final_norm(static_cast<std::size_t>(cfg.d)),
      length(cfg.length),
      patch(cfg.patch) {}

Var TrajectoryEncoder::forward(std::span<const Point> resampled) const {
  if (static_cast<int>(resampled.size()) != length)
    throw ParameterError("trajectory encoder expects " + std::to_string(length) + " resampled points, got " +
                         std::to_string(resampled.size()));
  const Var patches = nn::constant(patchify(resampled, patch));
  Var x = nn::add(nn::concat_rows({cls, patch_projection.forward(patches)}), positions);
  for (const auto& block : blocks) x = block.forward(x);
  return nn::slice_rows(final_norm.forward(x), 0, 1);
}

void TrajectoryEncoder::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  patch_projection.register_parameters(prefix + ".patch_projection", set);
  set.add(prefix + ".cls", cls);
  set.add(prefix + ".positions", positions);
  register_blocks(prefix, blocks, set);
  final_norm.register_parameters(prefix + ".final_norm", set);
}

TopologyEncoder::TopologyEncoder(const EncoderConfig& cfg, Rng& rng)
    : point_projection(2, static_cast<std::size_t>(cfg.d), rng),
      trunk(cfg, cfg.topology_pooling, true, rng),
      max_length(cfg.max_topology) {}

Var TopologyEncoder::tokens(std::span<const Point> points) const {
  if (points.empty()) throw ParameterError("topology sequence is empty");
  const auto kept = head_truncate(points, max_length);
  Tensor coords(kept.size(), 2);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    coords(i, 0) = kept[i].x;
    coords(i, 1) = kept[i].y;
  }
  return point_projection.forward(nn::constant(std::move(coords)));
}

Var TopologyEncoder::forward(std::span<const Point> points) const {
  return trunk.pool(trunk.hidden(tokens(points)));
}

void TopologyEncoder::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  point_projection.register_parameters(prefix + ".point_projection", set);
  trunk.register_parameters(prefix, set);
}

RoadEncoder::RoadEncoder(const EncoderConfig& cfg, Rng& rng)
    : table(nn::parameter(nn::normal_init(rng, static_cast<std::size_t>(cfg.road_vocab),
                                          static_cast<std::size_t>(cfg.d), 1.0))),
      trunk(cfg, cfg.road_pooling, true, rng),
      max_length(cfg.max_road) {}

Var RoadEncoder::forward(std::span<const SegmentId> ids) const {
  if (ids.empty()) throw ParameterError("road sequence is empty");
  for (auto id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
      throw VocabularyError("road segment id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(table.rows()));
  const auto kept = head_truncate(ids, max_length);
  return trunk.pool(trunk.hidden(nn::gather_rows(table, kept)));
}

void RoadEncoder::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  set.add(prefix + ".table", table);
  trunk.register_parameters(prefix, set);
}

RegionEncoder::RegionEncoder(const EncoderConfig& cfg, Rng& rng)
    : table(nn::parameter(nn::normal_init(rng, static_cast<std::size_t>(cfg.region_vocab),
                                          static_cast<std::size_t>(cfg.d), 1.0))),
      trunk(cfg, cfg.region_pooling, false, rng),
      max_length(cfg.max_region) {}

Var RegionEncoder::forward(std::span<const RegionId> ids) const {
  if (ids.empty()) throw ParameterError("region sequence is empty");
  for (auto id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
      throw VocabularyError("region id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(table.rows()));
  const auto unique = dedup_first_visit(ids);
  const auto kept = head_truncate(std::span<const RegionId>(unique), max_length);
  return trunk.pool(trunk.hidden(nn::gather_rows(table, kept)));
}

void RegionEncoder::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  set.add(prefix + ".table", table);
  trunk.register_parameters(prefix, set);
}

ProjectionHead::ProjectionHead(std::size_t d, std::size_t h, HeadActivation act, Rng& rng)
    : first(d, h, rng), second(h, h, rng), activation(act) {}

Var ProjectionHead::forward(const Var& z) const {
  if (z.cols() != first.in_features())
    throw ShapeError("projection head expects width " + std::to_string(first.in_features()) + ", got " +
                     std::to_string(z.cols()));
  Var hidden = first.forward(z);
  if (activation == HeadActivation::gelu) hidden = nn::gelu(hidden);
  return nn::l2_normalize_rows(second.forward(hidden));
}

void ProjectionHead::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  first.register_parameters(prefix + ".first", set);
  second.register_parameters(prefix + ".second", set);
}

Var project_to_shared(const Var& z, const ProjectionHead& head) { return head.forward(z); }

FusionProjector::FusionProjector(std::size_t inputs, std::size_t h, Rng& rng) : projection(inputs * h, h, rng) {}

Var FusionProjector::forward(const std::vector<Var>& parts) const {
  if (parts.size() < 2) throw ParameterError("fusion needs at least two embeddings");
  std::size_t width = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts[0].cols()) throw ParameterError("fusion inputs have mixed widths");
    width += p.cols();
  }
  if (width != projection.in_features())
    throw ParameterError("fusion projector expects total width " + std::to_string(projection.in_features()));
  return nn::l2_normalize_rows(projection.forward(nn::concat_cols(parts)));
}

void FusionProjector::register_parameters(const std::string& prefix, nn::ParameterSet& set) const {
  projection.register_parameters(prefix + ".projection", set);
}

}  // namespace omnitraj
