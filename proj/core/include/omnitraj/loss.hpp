#pragma once

#include <vector>

#include "omnitraj/model.hpp"
#include "omnitraj/nn/autograd.hpp"

namespace omnitraj {

/// Mean cross-entropy of each query row against all key rows, with the
/// matching row as the target; similarities are dot products scaled by 1/tau.
nn::Var info_nce(const nn::Var& queries, const nn::Var& keys, double tau);

struct DirectionalLoss {
  ModalityMask modality = 0;
  double traj_to_modality = 0.0;
  double modality_to_traj = 0.0;
};

struct LossReport {
  std::vector<DirectionalLoss> terms;
  double tau = 0.07;
  nn::Var total;  // differentiable sum of every directional term

  double total_value() const { return total.item(); }
};

/// Sums info_nce(traj, m) + info_nce(m, traj) over every non-trajectory entry.
/// Throws ParameterError when the trajectory entry is missing or nothing else
/// is present.
LossReport bidirectional_loss(const std::vector<std::pair<ModalityMask, nn::Var>>& batch, double tau);

}  // namespace omnitraj
