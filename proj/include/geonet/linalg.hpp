#pragma once

#include <cstddef>
#include <vector>

namespace geonet {

using Vector = std::vector<double>;

// Dense row-major matrix. All model quantities live in normalized data space,
// so entries are plain doubles with no unit bookkeeping.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values; // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  Vector col(std::size_t j) const {
    Vector out(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i] = values[i * cols + j];
    return out;
  }

  void set_col(std::size_t j, const Vector& v) {
    for (std::size_t i = 0; i < rows; ++i) values[i * cols + j] = v[i];
  }

  bool all_finite() const;
};

// Sample-mean inner product (1/N) * sum(u_i * v_i). This is the inner product
// used throughout: it keeps norms of [0,1]-normalized targets bounded by 1,
// which makes the angle-constraint margin and RMSE tolerances commensurable.
double mean_inner(const Vector& u, const Vector& v);

// mean_inner(u, u); zero iff u is the zero vector.
double norm_sq(const Vector& u);

// Per-column projection coefficients <E_q, g> / ||g||^2 under the mean inner
// product. Returns all zeros for a zero g (the minimum-norm convention).
Vector projection_coefficients(const Matrix& E, const Vector& g);

// Minimum-norm least-squares solution of min_beta ||F - H*beta|| (Frobenius),
// via a rank-revealing orthogonal decomposition on column-equilibrated data
// with column-norm-relative rank tolerance 1e-10. Single-column H is solved
// with projection_coefficients so the result is bit-identical to the greedy
// per-node coefficient.
Matrix solve_least_squares(const Matrix& H, const Matrix& F);

Matrix matmul(const Matrix& A, const Matrix& B);

// C = A - B, elementwise.
Matrix subtract(const Matrix& A, const Matrix& B);

// Root mean square over all entries: sqrt(sum(E^2) / (rows*cols)).
double rms_entries(const Matrix& E);

} // namespace geonet
