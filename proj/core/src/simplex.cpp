#include "mcqn/simplex.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace mcqn {

namespace {
constexpr double kPivotTol = 1e-12;
}

LpResult maximize_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_pivots) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (c.size() != n || b.size() != m) throw std::invalid_argument("maximize_lp: shape mismatch");
  if (m > 0 && b.minCoeff() < 0.0) throw std::invalid_argument("maximize_lp: b must be nonnegative");

  // Rows 0..m-1 are constraints, row m is the objective; last column is the rhs.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.topRightCorner(m, 1) = b;
  t.bottomLeftCorner(1, n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpResult result;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (t(m, j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) {
      result.status = LpStatus::kOptimal;
      break;
    }
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) <= kPivotTol) continue;
      const double ratio = t(i, n + m) / t(i, enter);
      if (ratio < best - kPivotTol ||
          (ratio <= best + kPivotTol && leave >= 0 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave < 0) {
      result.status = LpStatus::kUnbounded;
      return result;
    }
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index v = basis[static_cast<std::size_t>(i)];
    if (v < n) result.x[v] = t(i, n + m);
  }
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace mcqn
