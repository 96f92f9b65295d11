#include "omnitraj/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "omnitraj/error.hpp"

namespace omnitraj::nn {

void ParameterSet::add(const std::string& name, const Var& v) {
  for (const auto& [n, _] : entries_)
    if (n == name) throw ParameterError("duplicate parameter name " + name);
  entries_.emplace_back(name, v);
}

std::vector<Var> ParameterSet::vars() const {
  std::vector<Var> out;
  out.reserve(entries_.size());
  for (const auto& [_, v] : entries_) out.push_back(v);
  return out;
}

Var ParameterSet::find(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw ParameterError("no parameter named " + name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : entries_) n += v.value().size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, v] : entries_) v.zero_grad();
}

Tensor uniform_init(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor normal_init(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = stddev * rng.normal();
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = parameter(uniform_init(rng, in, out, bound));
  bias = parameter(uniform_init(rng, 1, out, bound));
}

Var linear_forward(const Var& x, const Var& weight, const Var& bias) {
  if (x.cols() != weight.rows())
    throw ShapeError("linear input width " + std::to_string(x.cols()) + " does not match weight rows " +
                     std::to_string(weight.rows()));
  if (bias.rows() != 1 || bias.cols() != weight.cols()) throw ShapeError("linear bias shape mismatch");
  return add_row(matmul(x, weight), bias);
}

Var Linear::forward(const Var& x) const { return linear_forward(x, weight, bias); }

void Linear::register_parameters(const std::string& prefix, ParameterSet& set) const {
  set.add(prefix + ".weight", weight);
  set.add(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(std::size_t d) : gamma(parameter(Tensor(1, d, 1.0))), beta(parameter(Tensor(1, d, 0.0))) {}

void LayerNorm::register_parameters(const std::string& prefix, ParameterSet& set) const {
  set.add(prefix + ".gamma", gamma);
  set.add(prefix + ".beta", beta);
}

MultiHeadAttention::MultiHeadAttention(std::size_t d, std::size_t h, Rng& rng)
    : query(d, d, rng), key(d, d, rng), value(d, d, rng), output(d, d, rng), heads(h) {
  if (h == 0 || d % h != 0) throw ParameterError("model width must be divisible by the head count");
}

Var MultiHeadAttention::forward(const Var& x, const AttentionOptions& opts) const {
  const std::size_t d = x.cols();
  const std::size_t seq = x.rows();
  if (seq == 0) throw ParameterError("attention needs at least one token");
  const std::size_t dh = d / heads;
  const Var q = query.forward(x);
  const Var k = key.forward(x);
  const Var v = value.forward(x);

  std::vector<double> positions;
  if (opts.rope) {
    positions.resize(seq);
    for (std::size_t r = 0; r < seq; ++r) positions[r] = opts.position_offset + static_cast<double>(r);
  }
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (opts.attention_out) opts.attention_out->clear();

  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = heads == 1 ? k : slice_cols(k, h * dh, (h + 1) * dh);
    const Var vh = heads == 1 ? v : slice_cols(v, h * dh, (h + 1) * dh);
    if (opts.rope) {
      qh = rope(qh, positions, opts.rope_base);
      kh = rope(kh, positions, opts.rope_base);
    }
    const Var weights = softmax_rows(scale(matmul_nt(qh, kh), inv_scale), opts.key_mask);
    if (opts.attention_out) opts.attention_out->push_back(weights.value());
    outs.push_back(matmul(weights, vh));
  }
  return output.forward(heads == 1 ? outs[0] : concat_cols(outs));
}

void MultiHeadAttention::register_parameters(const std::string& prefix, ParameterSet& set) const {
  query.register_parameters(prefix + ".query", set);
  key.register_parameters(prefix + ".key", set);
  value.register_parameters(prefix + ".value", set);
  output.register_parameters(prefix + ".output", set);
}

FeedForward::FeedForward(std::size_t d, std::size_t hidden, Rng& rng) : up(d, hidden, rng), down(hidden, d, rng) {}

void FeedForward::register_parameters(const std::string& prefix, ParameterSet& set) const {
  up.register_parameters(prefix + ".up", set);
  down.register_parameters(prefix + ".down", set);
}

TransformerBlock::TransformerBlock(std::size_t d, std::size_t heads, Rng& rng)
    : norm1(d), attention(d, heads, rng), norm2(d), ffn(d, 4 * d, rng) {}

Var TransformerBlock::forward(const Var& x, const AttentionOptions& opts) const {
  const Var h = add(x, attention.forward(norm1.forward(x), opts));
  return add(h, ffn.forward(norm2.forward(h)));
}

void TransformerBlock::register_parameters(const std::string& prefix, ParameterSet& set) const {
  norm1.register_parameters(prefix + ".norm1", set);
  attention.register_parameters(prefix + ".attn", set);
  norm2.register_parameters(prefix + ".norm2", set);
  ffn.register_parameters(prefix + ".ffn", set);
}

std::size_t TransformerBlock::parameter_count(std::size_t d) {
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t ffn = (d * 4 * d + 4 * d) + (4 * d * d + d);
  const std::size_t norms = 2 * (2 * d);
  return attention + ffn + norms;
}

double grad_check(const std::function<Var()>& f, std::span<Var> params, double step) {
  for (auto& p : params) p.zero_grad();
  f().backward();
  double worst = 0.0;
  for (auto& p : params) {
    const Tensor analytic = p.has_grad() ? p.grad() : Tensor(p.rows(), p.cols());
    auto& values = p.mutable_value();
    NoGradGuard guard;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values.data()[i];
      values.data()[i] = saved + step;
      const double up = f().item();
      values.data()[i] = saved - step;
      const double down = f().item();
      values.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace omnitraj::nn
