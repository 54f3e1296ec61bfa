#pragma once

#include <Eigen/Dense>

namespace mcqn {

enum class LpStatus { kOptimal, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// maximize c.x subject to A x <= b, x >= 0, with b >= 0 so the origin is
/// feasible. Dense tableau simplex with Bland's rule (no cycling).
/// Throws std::invalid_argument on shape mismatch or negative b.
LpResult maximize_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_pivots = 100'000);

}  // namespace mcqn
