#include "omnitraj/nn/optimizer.hpp"

#include <cmath>

#include "omnitraj/error.hpp"

namespace omnitraj::nn {

Adam::Adam(std::vector<Var> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  require(opts_.learning_rate > 0.0, "learning rate must be positive");
  for (const auto& p : params_) {
    first_.emplace_back(p.rows(), p.cols());
    second_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step() {
  for (const auto& p : params_)
    if (p.has_grad() && !p.grad().all_finite()) throw NumericError("non-finite gradient");
  ++steps_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto* g = p.grad().data();
    auto* w = p.mutable_value().data();
    auto* m = first_[i].data();
    auto* v = second_[i].data();
    for (std::size_t j = 0; j < first_[i].size(); ++j) {
      m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g[j];
      v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= opts_.learning_rate * mhat / (std::sqrt(vhat) + opts_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace omnitraj::nn
