#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "omnitraj/nn/autograd.hpp"
#include "omnitraj/random.hpp"

namespace omnitraj::nn {

/// Ordered, named collection of trainable leaves. Names are unique and the
/// order is the registration order, which fixes checkpoint layout.
class ParameterSet {
 public:
  void add(const std::string& name, const Var& v);
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<Var> vars() const;
  Var find(const std::string& name) const;  // throws ParameterError if absent
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

// PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double bound);
Tensor normal_init(Rng& rng, std::size_t rows, std::size_t cols, double stddev);

struct Linear {
  Var weight;  // [in, out]
  Var bias;    // [1, out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
  Var forward(const Var& x) const;
  void register_parameters(const std::string& prefix, ParameterSet& set) const;
};

// x [*, in] * W [in, out] + b
Var linear_forward(const Var& x, const Var& weight, const Var& bias);

struct LayerNorm {
  Var gamma;  // [1, d], ones
  Var beta;   // [1, d], zeros

  LayerNorm() = default;
  explicit LayerNorm(std::size_t d);

  Var forward(const Var& x) const { return layer_norm(x, gamma, beta); }
  void register_parameters(const std::string& prefix, ParameterSet& set) const;
};

struct AttentionOptions {
  bool rope = false;
  double rope_base = 10000.0;
  // Sequence index of row 0; row r sits at position_offset + r.
  double position_offset = 0.0;
  // Non-zero entries mark padded key positions.
  std::span<const char> key_mask;
  // When set, receives one [seq, seq] attention matrix per head.
  std::vector<Tensor>* attention_out = nullptr;
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t d, std::size_t heads, Rng& rng);

  Var forward(const Var& x, const AttentionOptions& opts = {}) const;
  void register_parameters(const std::string& prefix, ParameterSet& set) const;
};

struct FeedForward {
  Linear up, down;  // d -> 4d -> d, GELU in between

  FeedForward() = default;
  FeedForward(std::size_t d, std::size_t hidden, Rng& rng);

  Var forward(const Var& x) const { return down.forward(gelu(up.forward(x))); }
  void register_parameters(const std::string& prefix, ParameterSet& set) const;
};

/// Pre-norm residual block: x + MHSA(LN(x)), then + FFN(LN(.)).
struct TransformerBlock {
  LayerNorm norm1;
  MultiHeadAttention attention;
  LayerNorm norm2;
  FeedForward ffn;

  TransformerBlock() = default;
  TransformerBlock(std::size_t d, std::size_t heads, Rng& rng);

  std::size_t width() const { return norm1.gamma.cols(); }
  Var forward(const Var& x, const AttentionOptions& opts = {}) const;
  void register_parameters(const std::string& prefix, ParameterSet& set) const;

  // Scalar parameters in one block of width d with a 4d feed-forward layer.
  static std::size_t parameter_count(std::size_t d);
};

/// Max relative error between reverse-mode gradients of `f` and central
/// differences with step `step`, over every entry of `params`. The relative
/// error of an entry is |a - n| / max(|a|, |n|, 1e-4).
double grad_check(const std::function<Var()>& f, std::span<Var> params, double step = 1e-5);

}  // namespace omnitraj::nn
