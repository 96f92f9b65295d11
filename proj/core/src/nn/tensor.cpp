#include "omnitraj/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "omnitraj/error.hpp"

namespace omnitraj::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols)
    throw ShapeError("tensor value count " + std::to_string(data_.size()) + " does not match shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged tensor literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::add_inplace(const Tensor& o) {
  if (!same_shape(o)) throw ShapeError("add_inplace shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

namespace {

void check_out(Tensor& out, std::size_t r, std::size_t c, bool accumulate) {
  if (accumulate) {
    if (out.rows() != r || out.cols() != c) throw ShapeError("gemm accumulate target has wrong shape");
  } else if (out.rows() != r || out.cols() != c) {
    out = Tensor(r, c);
  } else {
    out.fill(0.0);
  }
}

}  // namespace

void gemm(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul inner dimensions differ: " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  check_out(out, m, n, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt inner dimensions differ");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  check_out(out, m, n, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      C[i * n + j] += s;
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn inner dimensions differ");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  check_out(out, m, n, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = A + p * m;
    const double* brow = B + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* c = C + i * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
}

}  // namespace omnitraj::nn
