#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace omnitraj::nn {

/// Dense row-major matrix of doubles. Vectors are 1 x n rows.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  void fill(double v);
  bool all_finite() const;
  // Accumulates `o` element-wise (shapes must match).
  void add_inplace(const Tensor& o);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out (+)= a * b
void gemm(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
// out (+)= a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
// out (+)= a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);

}  // namespace omnitraj::nn
