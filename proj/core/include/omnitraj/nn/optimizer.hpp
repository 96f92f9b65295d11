#pragma once

#include <cstdint>
#include <vector>

#include "omnitraj/nn/autograd.hpp"

namespace omnitraj::nn {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments are shaped like the parameters they track.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions opts = {});

  // Applies one update from the accumulated gradients. Parameters without a
  // gradient are treated as having a zero gradient. Throws NumericError on a
  // non-finite gradient before touching any parameter.
  void step();
  void zero_grad();

  std::uint64_t step_count() const { return steps_; }
  const AdamOptions& options() const { return opts_; }
  void set_learning_rate(double lr) { opts_.learning_rate = lr; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  AdamOptions opts_;
  std::uint64_t steps_ = 0;
};

}  // namespace omnitraj::nn
