#pragma once

#include <cstddef>
#include <vector>

namespace limsup {

/// Dense row-major m x n matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> primal;  // x, length n
  std::vector<double> dual;    // y >= 0, length m
  std::size_t pivots = 0;
};

/// Solves max c^T x s.t. A x <= b, x >= 0 for b >= 0 (origin feasible) with
/// the tableau simplex method; Dantzig pricing, Bland's rule after degenerate
/// stalls. Throws DEGENERATE if the problem is unbounded.
LpSolution solve_lp_max(const Matrix& A, const std::vector<double>& b, const std::vector<double>& c);

}  // namespace limsup
