#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omnitraj/augment.hpp"
#include "omnitraj/model.hpp"

namespace omnitraj {

struct TrainOptions {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double tau = 0.07;
  std::uint64_t seed = 1;
  AugmentationPolicy policy;
  // Modalities aligned against the trajectory embedding; fused subsets
  // train their projectors.
  std::vector<ModalityMask> modalities{kTopology, kRoad, kRegion,
                                       static_cast<ModalityMask>(kTopology | kRegion),
                                       static_cast<ModalityMask>(kTopology | kRoad),
                                       static_cast<ModalityMask>(kTopology | kRoad | kRegion)};

  void write(KeyValueConfig& kv) const;
  static TrainOptions from_kv(const KeyValueConfig& kv);
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  // Per-modality mean over batches of (traj->m + m->traj).
  std::vector<std::pair<ModalityMask, double>> modality_loss;
  double total = 0.0;  // mean over batches of the summed loss
  double seconds = 0.0;

  std::string to_json_line() const;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
  std::uint64_t steps = 0;
};

/// Contrastive alignment of every configured modality with the trajectory
/// embedding. Augmentations are redrawn for every epoch. On a non-finite
/// loss the model is restored to the parameters at the start of the failing
/// epoch and NumericError propagates.
TrainResult train(OmniModel& model, const std::vector<PreparedSample>& data, const TrainOptions& opts,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace omnitraj
