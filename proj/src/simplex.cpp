#include "limsup/simplex.hpp"

#include <cmath>
#include <limits>

#include "limsup/error.hpp"

namespace limsup {

namespace {
constexpr double kPivotTol = 1e-11;
constexpr double kPriceTol = 1e-12;
constexpr std::size_t kStallLimit = 50;
}  // namespace

LpSolution solve_lp_max(const Matrix& A, const std::vector<double>& b, const std::vector<double>& c) {
  const std::size_t m = A.rows;
  const std::size_t n = A.cols;
  require(b.size() == m && c.size() == n, "LP dimensions disagree");
  for (double bi : b) require(bi >= 0.0, "LP right-hand side must be nonnegative");

  // Tableau rows: x_B(i) + sum_j T(i,j) x_N(j) = beta_i; objective z + sum_j o_j x_N(j) = z0.
  Matrix T = A;
  std::vector<double> beta = b;
  std::vector<double> obj(n);
  for (std::size_t j = 0; j < n; ++j) obj[j] = -c[j];
  double z0 = 0.0;
  // Variable ids: 0..n-1 structural, n..n+m-1 slacks.
  std::vector<std::size_t> nonbasic(n);
  std::vector<std::size_t> basic(m);
  for (std::size_t j = 0; j < n; ++j) nonbasic[j] = j;
  for (std::size_t i = 0; i < m; ++i) basic[i] = n + i;

  LpSolution sol;
  std::size_t stall = 0;
  const std::size_t max_pivots = 50 * (m + n) + 1000;
  while (true) {
    const bool bland = stall >= kStallLimit;
    std::size_t enter = n;
    double best = -kPriceTol;
    for (std::size_t j = 0; j < n; ++j) {
      if (obj[j] < -kPriceTol) {
        if (bland) {
          if (enter == n || nonbasic[j] < nonbasic[enter]) enter = j;
        } else if (obj[j] < best) {
          best = obj[j];
          enter = j;
        }
      }
    }
    if (enter == n) break;

    std::size_t leave = m;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double t = T(i, enter);
      if (t > kPivotTol) {
        const double q = beta[i] / t;
        if (q < ratio - 1e-15 || (q <= ratio + 1e-15 && leave < m && basic[i] < basic[leave])) {
          ratio = q;
          leave = i;
        }
      }
    }
    if (leave == m) throw Error(ErrorCode::Degenerate, "LP is unbounded");
    if (++sol.pivots > max_pivots) throw Error(ErrorCode::Degenerate, "LP pivot limit exceeded");
    stall = beta[leave] <= 1e-15 ? stall + 1 : 0;

    const double piv = T(leave, enter);
    double* prow = &T.data[leave * n];
    for (std::size_t j = 0; j < n; ++j) prow[j] /= piv;
    prow[enter] = 1.0 / piv;
    beta[leave] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      double* row = &T.data[i * n];
      const double f = row[enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) row[j] -= f * prow[j];
      row[enter] = -f * prow[enter];
      beta[i] -= f * beta[leave];
      if (beta[i] < 0.0 && beta[i] > -1e-13) beta[i] = 0.0;
    }
    const double f = obj[enter];
    for (std::size_t j = 0; j < n; ++j) obj[j] -= f * prow[j];
    obj[enter] = -f * prow[enter];
    z0 -= f * beta[leave];
    std::swap(basic[leave], nonbasic[enter]);
  }

  sol.value = z0;
  sol.primal.assign(n, 0.0);
  sol.dual.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basic[i] < n) sol.primal[basic[i]] = std::max(0.0, beta[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (nonbasic[j] >= n) sol.dual[nonbasic[j] - n] = std::max(0.0, obj[j]);
  }
  return sol;
}

}  // namespace limsup
