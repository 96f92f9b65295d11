#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "omnitraj/config.hpp"
#include "omnitraj/geometry.hpp"
#include "omnitraj/nn/layers.hpp"

namespace omnitraj {

enum class Pooling { cls, bos, mean };
std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view s);

enum class HeadActivation { gelu, identity };

/// Coordinate frame the point-based encoders see.
///  local:  per-trajectory centroid / max-extent normalization.
///  global: the grid bounding box mapped onto [-1, 1] with one shared scale.
enum class FrameMode { local, global };

struct EncoderConfig {
  int d = 32;             // model width
  int h = 64;             // shared embedding width
  int blocks = 2;
  int heads = 4;
  int patch = 8;          // trajectory patch size P
  int length = 64;        // resample length L
  int max_topology = 128;
  int max_road = 128;
  int max_region = 64;
  int road_vocab = 0;     // |r|
  int region_vocab = 256; // G * G
  double rope_base = 10000.0;
  Pooling traj_pooling = Pooling::cls;
  Pooling topology_pooling = Pooling::cls;
  Pooling road_pooling = Pooling::bos;
  Pooling region_pooling = Pooling::cls;
  HeadActivation head_activation = HeadActivation::gelu;
  FrameMode frame = FrameMode::global;
  BoundingBox frame_box{0, 0, 1, 1};  // used by FrameMode::global
  std::uint64_t seed = 17;

  int patch_count() const { return length / patch; }
  void validate() const;

  KeyValueConfig to_kv() const;
  static EncoderConfig from_kv(const KeyValueConfig& kv);
};

// Head-truncation to at most `max_len` tokens.
template <typename T>
std::vector<T> head_truncate(std::span<const T> items, int max_len) {
  const auto n = std::min(items.size(), static_cast<std::size_t>(max_len));
  return std::vector<T>(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
}

/// [N_p, 2P] flattened coordinate windows; the trailing L mod P points are dropped.
nn::Tensor patchify(std::span<const Point> points, int patch);

/// Shared machinery of the sequence encoders: a learned special token
/// (CLS/BOS) at row 0, N pre-norm blocks, a final layer norm and pooling.
struct SequenceTrunk {
  nn::Var special;  // [1, d]
  std::vector<nn::TransformerBlock> blocks;
  nn::LayerNorm final_norm;
  Pooling pooling = Pooling::cls;
  bool rope = false;
  double rope_base = 10000.0;

  SequenceTrunk() = default;
  SequenceTrunk(const EncoderConfig& cfg, Pooling pooling, bool rope, Rng& rng);

  // tokens [k, d] -> hidden states [k + 1, d] with the special token prepended.
  // `left_pad` masked rows may be prepended to tokens by the caller for
  // padding tests; they are excluded from attention keys and pooling.
  nn::Var hidden(const nn::Var& tokens, std::size_t left_pad = 0, double position_offset = 0.0,
                 std::vector<std::vector<nn::Tensor>>* attention = nullptr) const;
  nn::Var pool(const nn::Var& hidden, std::size_t left_pad = 0) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

/// Patch projection + CLS + learned absolute positions; no RoPE.
struct TrajectoryEncoder {
  nn::Linear patch_projection;  // 2P -> d
  nn::Var cls;                  // [1, d]
  nn::Var positions;            // [N_p + 1, d]
  std::vector<nn::TransformerBlock> blocks;
  nn::LayerNorm final_norm;
  int length = 0;
  int patch = 0;

  TrajectoryEncoder() = default;
  TrajectoryEncoder(const EncoderConfig& cfg, Rng& rng);

  // `resampled` must hold exactly L points already in the encoding frame.
  nn::Var forward(std::span<const Point> resampled) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

/// Per-point linear embedding, CLS, RoPE attention.
struct TopologyEncoder {
  nn::Linear point_projection;  // 2 -> d
  SequenceTrunk trunk;
  int max_length = 128;

  TopologyEncoder() = default;
  TopologyEncoder(const EncoderConfig& cfg, Rng& rng);

  nn::Var tokens(std::span<const Point> points) const;
  nn::Var forward(std::span<const Point> points) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

/// Segment-id lookup table, BOS token, RoPE attention.
struct RoadEncoder {
  nn::Var table;  // [|r|, d]
  SequenceTrunk trunk;
  int max_length = 128;

  RoadEncoder() = default;
  RoadEncoder(const EncoderConfig& cfg, Rng& rng);

  nn::Var forward(std::span<const SegmentId> ids) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

/// Region-id lookup table, CLS token, attention without any positional signal.
/// Duplicate ids are removed (first occurrence kept) before encoding.
struct RegionEncoder {
  nn::Var table;  // [G*G, d]
  SequenceTrunk trunk;
  int max_length = 64;

  RegionEncoder() = default;
  RegionEncoder(const EncoderConfig& cfg, Rng& rng);

  nn::Var forward(std::span<const RegionId> ids) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

/// linear -> activation -> linear -> L2 normalize, [*, d] -> [*, h].
struct ProjectionHead {
  nn::Linear first;   // d -> h
  nn::Linear second;  // h -> h
  HeadActivation activation = HeadActivation::gelu;

  ProjectionHead() = default;
  ProjectionHead(std::size_t d, std::size_t h, HeadActivation act, Rng& rng);

  nn::Var forward(const nn::Var& z) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

nn::Var project_to_shared(const nn::Var& z, const ProjectionHead& head);

/// Concatenation of unit embeddings -> linear -> L2 normalize.
struct FusionProjector {
  nn::Linear projection;  // (count * h) -> h

  FusionProjector() = default;
  FusionProjector(std::size_t inputs, std::size_t h, Rng& rng);

  // `parts` must already be in canonical modality order.
  nn::Var forward(const std::vector<nn::Var>& parts) const;
  void register_parameters(const std::string& prefix, nn::ParameterSet& set) const;
};

}  // namespace omnitraj
