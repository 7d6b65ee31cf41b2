#include "torsopose/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace torsopose {

void Matrix::add(const Matrix& o) {
  assert(same_shape(o));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void Matrix::add_scaled(const Matrix& o, double s) {
  assert(same_shape(o));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void matmul_nt_accum(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.cols() && out.rows() == a.rows() && out.cols() == b.rows());
  const int n = a.rows(), m = b.rows(), k = a.cols();
  for (int i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* oi = out.row(i);
    for (int j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      oi[j] += acc;
    }
  }
}

void matmul_nn_accum(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.rows() && out.rows() == a.rows() && out.cols() == b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* oi = out.row(i);
    for (int p = 0; p < k; ++p) {
      const double s = ai[p];
      if (s == 0.0) continue;
      const double* bp = b.row(p);
      for (int j = 0; j < m; ++j) oi[j] += s * bp[j];
    }
  }
}

void matmul_tn_accum(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols());
  const int k = a.rows(), n = a.cols(), m = b.cols();
  for (int p = 0; p < k; ++p) {
    const double* ap = a.row(p);
    const double* bp = b.row(p);
    for (int i = 0; i < n; ++i) {
      const double s = ap[i];
      if (s == 0.0) continue;
      double* oi = out.row(i);
      for (int j = 0; j < m; ++j) oi[j] += s * bp[j];
    }
  }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  matmul_nt_accum(a, b, out);
  return out;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  matmul_nn_accum(a, b, out);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  matmul_tn_accum(a, b, out);
  return out;
}

void require_shape(const Matrix& m, int rows, int cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(what + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
}

}  // namespace torsopose
