#include "pseudocam/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace pseudocam {

void Matrix::set_zero() { std::fill(data.begin(), data.end(), 0.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double l2_norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  assert(x.size() == w.cols && y.size() == w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) y[r] = dot(w.row(r), x);
}

void matvec_transposed_acc(const Matrix& w, std::span<const double> y, std::span<double> x) {
  assert(x.size() == w.cols && y.size() == w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) axpy(y[r], w.row(r), x);
}

Matrix linear_rows(const Matrix& x, const Matrix& w) { return matmul_transposed(x, w); }

void linear_rows_weight_grad(const Matrix& dy, const Matrix& x, Matrix& grad) {
  assert(dy.rows == x.rows && grad.rows == dy.cols && grad.cols == x.cols);
  for (std::size_t t = 0; t < dy.rows; ++t) {
    const auto xr = x.row(t);
    for (std::size_t o = 0; o < dy.cols; ++o) {
      const double g = dy(t, o);
      if (g != 0.0) axpy(g, xr, grad.row(o));
    }
  }
}

Matrix linear_rows_input_grad(const Matrix& dy, const Matrix& w) { return matmul(dy, w); }

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  assert(a.cols == b.cols);
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols == b.rows);
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double v = a(i, k);
      if (v != 0.0) axpy(v, b.row(k), out.row(i));
    }
  return out;
}

Matrix matmul_lhs_transposed(const Matrix& a, const Matrix& b) {
  assert(a.rows == b.rows);
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double v = a(k, i);
      if (v != 0.0) axpy(v, b.row(k), out.row(i));
    }
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace pseudocam
