#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pseudocam {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  void set_zero();

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double l2_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// y = W x, W is (out x in).
void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);

/// x += W^T y.
void matvec_transposed_acc(const Matrix& w, std::span<const double> y, std::span<double> x);

/// Y = X W^T for row-stacked inputs X (T x in) and W (out x in); Y is (T x out).
Matrix linear_rows(const Matrix& x, const Matrix& w);

/// G += dY^T X, the weight gradient of linear_rows.
void linear_rows_weight_grad(const Matrix& dy, const Matrix& x, Matrix& grad);

/// dX = dY W, the input gradient of linear_rows.
Matrix linear_rows_input_grad(const Matrix& dy, const Matrix& w);

/// Y = A B^T.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Y = A B.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Y = A^T B.
Matrix matmul_lhs_transposed(const Matrix& a, const Matrix& b);

void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace pseudocam
