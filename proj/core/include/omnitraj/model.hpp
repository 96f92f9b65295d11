#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omnitraj/dataset_io.hpp"
#include "omnitraj/encoders.hpp"
#include "omnitraj/nn/checkpoint.hpp"

namespace omnitraj {

/// Modality flags. A single flag names one encoder; an OR of several flags
/// names a fused embedding.
enum ModalityBit : std::uint8_t {
  kTraj = 1,
  kTopology = 2,
  kRoad = 4,
  kRegion = 8,
};

using ModalityMask = std::uint8_t;

std::string modality_name(ModalityMask m);        // e.g. "traj", "top", "road+top"
ModalityMask parse_modality(std::string_view s);  // accepts "reg+top", "top+road", ...
bool is_single_modality(ModalityMask m);

// Modality subsets that have a trained fusion projector.
const std::vector<ModalityMask>& fusion_subsets();
std::string supported_subsets_text();

/// Views of one trajectory as the encoders consume them.
struct PreparedSample {
  TrajectoryId id = 0;
  std::vector<Point> resampled;  // L points in the encoding frame
  std::vector<Point> topology;   // topology points in the encoding frame
  std::vector<SegmentId> road;
  std::vector<RegionId> region;
};

class OmniModel {
 public:
  explicit OmniModel(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }

  /// Maps a record into encoder inputs; missing topology/region views are
  /// extracted with default options on the fly (regions need `grid`).
  PreparedSample prepare(const TrajectoryRecord& record, const GridSpec* grid = nullptr) const;
  std::vector<Point> to_frame(std::span<const Point> points, std::span<const Point> reference) const;

  // Unit-norm [1, h] embeddings.
  nn::Var embed_trajectory(std::span<const Point> resampled) const;
  nn::Var embed_topology(std::span<const Point> points) const;
  nn::Var embed_road(std::span<const SegmentId> ids) const;
  nn::Var embed_region(std::span<const RegionId> ids) const;
  nn::Var embed(ModalityMask m, const PreparedSample& s) const;

  // Fuses already-computed single-modality embeddings; `parts` pairs each
  // modality with its embedding in any order.
  nn::Var fuse(const std::vector<std::pair<ModalityMask, nn::Var>>& parts) const;

  // Inference helper: unit vector as floats, computed without graph recording.
  std::vector<float> embed_vector(ModalityMask m, const PreparedSample& s) const;

  nn::Checkpoint checkpoint() const;
  void load(const nn::Checkpoint& ckpt);  // config must match
  static OmniModel from_checkpoint(const nn::Checkpoint& ckpt);

  TrajectoryEncoder trajectory_encoder;
  TopologyEncoder topology_encoder;
  RoadEncoder road_encoder;
  RegionEncoder region_encoder;
  ProjectionHead traj_head, topology_head, road_head, region_head;
  std::vector<std::pair<ModalityMask, FusionProjector>> fusion;

 private:
  EncoderConfig cfg_;
  nn::ParameterSet params_;
};

}  // namespace omnitraj
