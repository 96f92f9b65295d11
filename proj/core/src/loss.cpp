#include "omnitraj/loss.hpp"

#include "omnitraj/error.hpp"

namespace omnitraj {

nn::Var info_nce(const nn::Var& queries, const nn::Var& keys, double tau) {
  require(tau > 0.0, "temperature must be positive");
  if (queries.rows() != keys.rows() || queries.cols() != keys.cols())
    throw ShapeError("info_nce needs queries and keys of equal shape");
  return nn::cross_entropy_diagonal(nn::scale(nn::matmul_nt(queries, keys), 1.0 / tau));
}

LossReport bidirectional_loss(const std::vector<std::pair<ModalityMask, nn::Var>>& batch, double tau) {
  const nn::Var* traj = nullptr;
  for (const auto& [m, v] : batch)
    if (m == kTraj) traj = &v;
  if (!traj) throw ParameterError("bidirectional loss needs trajectory embeddings");

  LossReport report;
  report.tau = tau;
  std::vector<nn::Var> terms;
  for (const auto& [m, v] : batch) {
    if (m == kTraj) continue;
    const auto forward = info_nce(*traj, v, tau);
    const auto backward = info_nce(v, *traj, tau);
    report.terms.push_back({m, forward.item(), backward.item()});
    terms.push_back(forward);
    terms.push_back(backward);
  }
  if (terms.empty()) throw ParameterError("bidirectional loss needs at least one other modality");
  report.total = nn::sum_all(nn::concat_rows(terms));
  return report;
}

}  // namespace omnitraj
