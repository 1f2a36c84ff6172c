#include "geonet/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "geonet/errors.hpp"

namespace geonet {

bool Matrix::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

double mean_inner(const Vector& u, const Vector& v) {
  if (u.empty()) throw DataError("mean_inner: empty input");
  if (u.size() != v.size()) throw DataError("mean_inner: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc / static_cast<double>(u.size());
}

double norm_sq(const Vector& u) { return mean_inner(u, u); }

namespace {
constexpr double kRankTol = 1e-10;
} // namespace

Vector projection_coefficients(const Matrix& E, const Vector& g) {
  if (E.rows != g.size()) throw DataError("projection_coefficients: row mismatch");
  const double g2 = norm_sq(g);
  Vector row(E.cols, 0.0);
  if (g2 == 0.0) return row; // zero column: minimum-norm answer is zero
  for (std::size_t q = 0; q < E.cols; ++q)
    row[q] = mean_inner(E.col(q), g) / g2;
  return row;
}

Matrix solve_least_squares(const Matrix& H, const Matrix& F) {
  if (H.rows == 0 || H.cols == 0) throw DataError("solve_least_squares: empty H");
  if (F.rows != H.rows) throw DataError("solve_least_squares: row count mismatch");
  if (!H.all_finite() || !F.all_finite())
    throw DataError("solve_least_squares: non-finite input");

  Matrix beta(H.cols, F.cols);
  if (H.cols == 1) {
    const Vector row = projection_coefficients(F, H.col(0));
    for (std::size_t q = 0; q < F.cols; ++q) beta(0, q) = row[q];
    return beta;
  }

  // Columns are equilibrated to unit norm so the rank tolerance is relative
  // to each column, not to the largest pivot: a saturated hidden node yields
  // a tiny-norm column whose direction is still informative, and dropping it
  // would break the global-fit-dominates-greedy-fit guarantee.
  Eigen::MatrixXd h(H.rows, H.cols);
  Eigen::VectorXd scale(H.cols);
  for (std::size_t j = 0; j < H.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < H.rows; ++i) s += H(i, j) * H(i, j);
    s = std::sqrt(s);
    scale(static_cast<Eigen::Index>(j)) = s;
    const double inv = s == 0.0 ? 0.0 : 1.0 / s;
    for (std::size_t i = 0; i < H.rows; ++i) h(i, j) = H(i, j) * inv;
  }
  Eigen::MatrixXd f(F.rows, F.cols);
  for (std::size_t i = 0; i < F.rows; ++i)
    for (std::size_t j = 0; j < F.cols; ++j) f(i, j) = F(i, j);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
  cod.setThreshold(kRankTol);
  const Eigen::MatrixXd b = cod.solve(f);

  for (std::size_t i = 0; i < H.cols; ++i) {
    const double s = scale(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < F.cols; ++j) beta(i, j) = s == 0.0 ? 0.0 : b(i, j) / s;
  }
  return beta;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
  if (A.cols != B.rows) throw DataError("matmul: dimension mismatch");
  Matrix C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double a = A(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += a * B(k, j);
    }
  }
  return C;
}

Matrix subtract(const Matrix& A, const Matrix& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw DataError("subtract: shape mismatch");
  Matrix C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.values.size(); ++i)
    C.values[i] = A.values[i] - B.values[i];
  return C;
}

double rms_entries(const Matrix& E) {
  if (E.values.empty()) throw DataError("rms_entries: empty matrix");
  double acc = 0.0;
  for (double v : E.values) acc += v * v;
  return std::sqrt(acc / static_cast<double>(E.values.size()));
}

} // namespace geonet
