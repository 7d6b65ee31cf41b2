#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace torsopose {

// Dense row-major matrix of doubles. This is the only tensor type the
// network layers use; everything stays 64-bit so gradient checks can run at
// tight tolerances.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void add(const Matrix& o);
  void add_scaled(const Matrix& o, double s);
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// out += a * b^T   (a: n x k, b: m x k, out: n x m)
void matmul_nt_accum(const Matrix& a, const Matrix& b, Matrix& out);
// out += a * b     (a: n x k, b: k x m, out: n x m)
void matmul_nn_accum(const Matrix& a, const Matrix& b, Matrix& out);
// out += a^T * b   (a: k x n, b: k x m, out: n x m)
void matmul_tn_accum(const Matrix& a, const Matrix& b, Matrix& out);

Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

void require_shape(const Matrix& m, int rows, int cols, const std::string& what);

}  // namespace torsopose
