#include "omnitraj/nn/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "omnitraj/error.hpp"

namespace omnitraj::nn {
namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_backward_mark{1};

using NodePtr = std::shared_ptr<Node>;

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

// Builds the result node; records parents and the backward closure only when
// recording is on and some parent needs a gradient.
Var make_result(Tensor value, const char* op, std::vector<NodePtr> parents,
                std::function<void(Node&)> backward) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (needs) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward = std::move(backward);
    }
  }
  return Var::from_node(std::move(node));
}

void shape_check(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_->has_grad()) node_->grad.fill(0.0);
}

double Var::item() const {
  shape_check(node_->value.size() == 1, "item() needs a 1x1 tensor");
  return node_->value(0, 0);
}

void Var::backward() const {
  shape_check(node_->value.size() == 1, "backward() needs a scalar output");
  if (!node_->requires_grad) return;
  const auto mark = g_backward_mark.fetch_add(1);

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  node_->mark = mark;
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && p->mark != mark) {
        p->mark = mark;
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad().fill(0.0);
  node_->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad()) n->backward(*n);
  }
}

Var parameter(Tensor value) { return Var(std::move(value), true); }
Var constant(Tensor value) { return Var(std::move(value), false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Var matmul(const Var& a, const Var& b) {
  shape_check(a.cols() == b.rows(),
              "matmul shape mismatch " + shape_str(a.value()) + " * " + shape_str(b.value()));
  Tensor out;
  gemm(a.value(), b.value(), out, false);
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), "matmul", {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) gemm_nt(self.grad, pb->value, pa->ensure_grad(), true);
    if (pb->requires_grad) gemm_tn(pa->value, self.grad, pb->ensure_grad(), true);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  shape_check(a.cols() == b.cols(),
              "matmul_nt shape mismatch " + shape_str(a.value()) + " * " + shape_str(b.value()) + "^T");
  Tensor out;
  gemm_nt(a.value(), b.value(), out, false);
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), "matmul_nt", {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) gemm(self.grad, pb->value, pa->ensure_grad(), true);
    if (pb->requires_grad) gemm_tn(self.grad, pa->value, pb->ensure_grad(), true);
  });
}

Var add(const Var& a, const Var& b) {
  shape_check(a.value().same_shape(b.value()),
              "add shape mismatch " + shape_str(a.value()) + " + " + shape_str(b.value()));
  Tensor out = a.value();
  out.add_inplace(b.value());
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), "add", {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->ensure_grad().add_inplace(self.grad);
    if (pb->requires_grad) pb->ensure_grad().add_inplace(self.grad);
  });
}

Var add_row(const Var& a, const Var& row) {
  shape_check(row.rows() == 1 && row.cols() == a.cols(),
              "add_row shape mismatch " + shape_str(a.value()) + " + " + shape_str(row.value()));
  Tensor out = a.value();
  const auto r = row.value().row(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += r[j];
  }
  auto pa = a.node(), pr = row.node();
  return make_result(std::move(out), "add_row", {pa, pr}, [pa, pr](Node& self) {
    if (pa->requires_grad) pa->ensure_grad().add_inplace(self.grad);
    if (pr->requires_grad) {
      auto g = pr->ensure_grad().row(0);
      for (std::size_t i = 0; i < self.grad.rows(); ++i) {
        auto src = self.grad.row(i);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  shape_check(a.value().same_shape(b.value()), "mul shape mismatch");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), "mul", {pa, pb}, [pa, pb](Node& self) {
    const std::size_t n = self.grad.size();
    if (pa->requires_grad) {
      auto* g = pa->ensure_grad().data();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad.data()[i] * pb->value.data()[i];
    }
    if (pb->requires_grad) {
      auto* g = pb->ensure_grad().data();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad.data()[i] * pa->value.data()[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  auto pa = a.node();
  return make_result(std::move(out), "scale", {pa}, [pa, s](Node& self) {
    auto* g = pa->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad.data()[i];
  });
}

Var gelu(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  auto pa = a.node();
  return make_result(std::move(out), "gelu", {pa}, [pa](Node& self) {
    auto* g = pa->ensure_grad().data();
    const auto* x = pa->value.data();
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x[i] * M_SQRT1_2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
      g[i] += self.grad.data()[i] * (cdf + x[i] * pdf);
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const std::size_t n = x.cols(), m = x.rows();
  shape_check(gamma.rows() == 1 && gamma.cols() == n && beta.rows() == 1 && beta.cols() == n,
              "layer_norm parameter shape mismatch");
  Tensor out(m, n);
  Tensor xhat(m, n);
  std::vector<double> rstd(m);
  const auto g = gamma.value().row(0);
  const auto b = beta.value().row(0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = x.value().row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    auto xh = xhat.row(i);
    auto o = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (row[j] - mean) * rstd[i];
      o[j] = xh[j] * g[j] + b[j];
    }
  }
  auto px = x.node(), pg = gamma.node(), pb = beta.node();
  return make_result(std::move(out), "layer_norm", {px, pg, pb},
                     [px, pg, pb, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                       const std::size_t m = self.grad.rows(), n = self.grad.cols();
                       const auto gam = pg->value.row(0);
                       if (pg->requires_grad || pb->requires_grad) {
                         auto dg = pg->ensure_grad().row(0);
                         auto db = pb->ensure_grad().row(0);
                         for (std::size_t i = 0; i < m; ++i) {
                           const auto gr = self.grad.row(i);
                           const auto xh = xhat.row(i);
                           for (std::size_t j = 0; j < n; ++j) {
                             dg[j] += gr[j] * xh[j];
                             db[j] += gr[j];
                           }
                         }
                       }
                       if (px->requires_grad) {
                         auto& dx = px->ensure_grad();
                         std::vector<double> dxh(n);
                         for (std::size_t i = 0; i < m; ++i) {
                           const auto gr = self.grad.row(i);
                           const auto xh = xhat.row(i);
                           double mean_d = 0.0, mean_dx = 0.0;
                           for (std::size_t j = 0; j < n; ++j) {
                             dxh[j] = gr[j] * gam[j];
                             mean_d += dxh[j];
                             mean_dx += dxh[j] * xh[j];
                           }
                           mean_d /= static_cast<double>(n);
                           mean_dx /= static_cast<double>(n);
                           auto d = dx.row(i);
                           for (std::size_t j = 0; j < n; ++j)
                             d[j] += rstd[i] * (dxh[j] - mean_d - xh[j] * mean_dx);
                         }
                       }
                     });
}

Var gather_rows(const Var& table, std::span<const std::int32_t> ids) {
  const std::size_t n = table.cols();
  Tensor out(ids.size(), n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows())
      throw ShapeError("gather index " + std::to_string(ids[i]) + " out of range");
    const auto src = table.value().row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  auto pt = table.node();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return make_result(std::move(out), "gather_rows", {pt}, [pt, idx = std::move(idx)](Node& self) {
    auto& g = pt->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = g.row(static_cast<std::size_t>(idx[i]));
      const auto src = self.grad.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  shape_check(!parts.empty(), "concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    shape_check(p.cols() == n, "concat_rows width mismatch");
    m += p.rows();
  }
  Tensor out(m, n);
  std::vector<NodePtr> parents;
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + at * n);
    at += p.rows();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), "concat_rows", parents, [n](Node& self) {
    std::size_t at = 0;
    for (auto& p : self.parents) {
      const std::size_t count = p->value.rows() * n;
      if (p->requires_grad) {
        auto* g = p->ensure_grad().data();
        const auto* src = self.grad.data() + at * n;
        for (std::size_t i = 0; i < count; ++i) g[i] += src[i];
      }
      at += p->value.rows();
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  shape_check(!parts.empty(), "concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    shape_check(p.rows() == m, "concat_cols height mismatch");
    n += p.cols();
  }
  Tensor out(m, n);
  std::vector<NodePtr> parents;
  std::size_t at = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto src = p.value().row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(at));
    }
    at += p.cols();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), "concat_cols", parents, [](Node& self) {
    std::size_t at = 0;
    for (auto& p : self.parents) {
      const std::size_t w = p->value.cols();
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < g.rows(); ++i) {
          auto dst = g.row(i);
          const auto src = self.grad.row(i);
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[at + j];
        }
      }
      at += w;
    }
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  shape_check(begin < end && end <= a.rows(), "slice_rows range out of bounds");
  const std::size_t n = a.cols();
  Tensor out(end - begin, n);
  std::copy(a.value().data() + begin * n, a.value().data() + end * n, out.data());
  auto pa = a.node();
  return make_result(std::move(out), "slice_rows", {pa}, [pa, begin, n](Node& self) {
    auto* g = pa->ensure_grad().data() + begin * n;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad.data()[i];
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  shape_check(begin < end && end <= a.cols(), "slice_cols range out of bounds");
  const std::size_t m = a.rows(), w = end - begin;
  Tensor out(m, w);
  for (std::size_t i = 0; i < m; ++i) {
    const auto src = a.value().row(i);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin), src.begin() + static_cast<std::ptrdiff_t>(end),
              out.row(i).begin());
  }
  auto pa = a.node();
  return make_result(std::move(out), "slice_cols", {pa}, [pa, begin, w](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto dst = g.row(i);
      const auto src = self.grad.row(i);
      for (std::size_t j = 0; j < w; ++j) dst[begin + j] += src[j];
    }
  });
}

Var softmax_rows(const Var& a, std::span<const char> key_mask) {
  const std::size_t m = a.rows(), n = a.cols();
  shape_check(key_mask.empty() || key_mask.size() == n, "softmax mask width mismatch");
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = a.value().row(i);
    auto o = out.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (key_mask.empty() || !key_mask[j]) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx)) throw NumericError("softmax row has no unmasked finite entry");
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = (key_mask.empty() || !key_mask[j]) ? std::exp(row[j] - mx) : 0.0;
      total += o[j];
    }
    for (auto& v : o) v /= total;
  }
  auto pa = a.node();
  return make_result(std::move(out), "softmax_rows", {pa}, [pa](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const auto y = self.value.row(i);
      const auto gy = self.grad.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += gy[j] * y[j];
      auto dst = g.row(i);
      for (std::size_t j = 0; j < y.size(); ++j) dst[j] += y[j] * (gy[j] - dot);
    }
  });
}

namespace {

struct RopeTables {
  std::vector<double> cos, sin;  // rows x half
};

RopeTables rope_tables(std::size_t rows, std::size_t width, std::span<const double> positions, double base) {
  const std::size_t half = width / 2;
  RopeTables t{std::vector<double>(rows * half), std::vector<double>(rows * half)};
  for (std::size_t k = 0; k < half; ++k) {
    const double inv_freq = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(width));
    for (std::size_t r = 0; r < rows; ++r) {
      const double theta = positions[r] * inv_freq;
      t.cos[r * half + k] = std::cos(theta);
      t.sin[r * half + k] = std::sin(theta);
    }
  }
  return t;
}

void check_rope(std::size_t rows, std::size_t width, std::span<const double> positions) {
  shape_check(width % 2 == 0, "rope needs an even width, got " + std::to_string(width));
  shape_check(positions.size() == rows, "rope needs one position per row");
}

}  // namespace

Tensor rope_rotate(const Tensor& e, std::span<const double> positions, double base) {
  check_rope(e.rows(), e.cols(), positions);
  const std::size_t half = e.cols() / 2;
  const auto t = rope_tables(e.rows(), e.cols(), positions, base);
  Tensor out(e.rows(), e.cols());
  for (std::size_t r = 0; r < e.rows(); ++r) {
    for (std::size_t k = 0; k < half; ++k) {
      const double c = t.cos[r * half + k], s = t.sin[r * half + k];
      const double x1 = e(r, k), x2 = e(r, k + half);
      out(r, k) = c * x1 - s * x2;
      out(r, k + half) = s * x1 + c * x2;
    }
  }
  return out;
}

Tensor rope_rotate(const Tensor& e, double base) {
  std::vector<double> pos(e.rows());
  for (std::size_t r = 0; r < pos.size(); ++r) pos[r] = static_cast<double>(r);
  return rope_rotate(e, pos, base);
}

Var rope(const Var& a, std::span<const double> positions, double base) {
  check_rope(a.rows(), a.cols(), positions);
  const std::size_t half = a.cols() / 2;
  auto tables = rope_tables(a.rows(), a.cols(), positions, base);
  Tensor out(a.rows(), a.cols());
  const auto& e = a.value();
  for (std::size_t r = 0; r < e.rows(); ++r) {
    for (std::size_t k = 0; k < half; ++k) {
      const double c = tables.cos[r * half + k], s = tables.sin[r * half + k];
      const double x1 = e(r, k), x2 = e(r, k + half);
      out(r, k) = c * x1 - s * x2;
      out(r, k + half) = s * x1 + c * x2;
    }
  }
  auto pa = a.node();
  return make_result(std::move(out), "rope", {pa}, [pa, half, tables = std::move(tables)](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t k = 0; k < half; ++k) {
        const double c = tables.cos[r * half + k], s = tables.sin[r * half + k];
        const double g1 = self.grad(r, k), g2 = self.grad(r, k + half);
        g(r, k) += c * g1 + s * g2;
        g(r, k + half) += -s * g1 + c * g2;
      }
    }
  });
}

Var l2_normalize_rows(const Var& a) {
  const std::size_t m = a.rows();
  Tensor out = a.value();
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (double v : out.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) throw NumericError("cannot normalize a zero vector");
    for (auto& v : out.row(i)) v /= norms[i];
  }
  auto pa = a.node();
  return make_result(std::move(out), "l2_normalize_rows", {pa}, [pa, norms = std::move(norms)](Node& self) {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const auto y = self.value.row(i);
      const auto gy = self.grad.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += gy[j] * y[j];
      auto dst = g.row(i);
      for (std::size_t j = 0; j < y.size(); ++j) dst[j] += (gy[j] - y[j] * dot) / norms[i];
    }
  });
}

Var cross_entropy_diagonal(const Var& logits) {
  const std::size_t b = logits.rows();
  shape_check(b >= 1 && logits.cols() == b, "cross_entropy_diagonal needs square logits");
  Tensor probs(b, b);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto row = logits.value().row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t j = 0; j < b; ++j) total += std::exp(row[j] - mx);
    const double lse = mx + std::log(total);
    loss += lse - row[i];
    for (std::size_t j = 0; j < b; ++j) probs(i, j) = std::exp(row[j] - lse);
  }
  loss /= static_cast<double>(b);
  auto pa = logits.node();
  return make_result(Tensor(1, 1, loss), "cross_entropy_diagonal", {pa},
                     [pa, probs = std::move(probs)](Node& self) {
                       const double g = self.grad(0, 0) / static_cast<double>(probs.rows());
                       auto& dst = pa->ensure_grad();
                       for (std::size_t i = 0; i < probs.rows(); ++i)
                         for (std::size_t j = 0; j < probs.cols(); ++j)
                           dst(i, j) += g * (probs(i, j) - (i == j ? 1.0 : 0.0));
                     });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  auto pa = a.node();
  return make_result(Tensor(1, 1, s), "sum_all", {pa}, [pa](Node& self) {
    const double g = self.grad(0, 0);
    for (auto& v : pa->ensure_grad().values()) v += g;
  });
}

}  // namespace omnitraj::nn
