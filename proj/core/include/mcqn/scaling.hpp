#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcqn/fluid.hpp"
#include "mcqn/simulator.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

struct ScalingPoint {
  double r = 0.0;
  SimState state;
  double queue_ratio = 0.0;     // ||q_n|| / r_n
  double residual_ratio = 0.0;  // (||u_n|| + ||v_n||) / r_n
};

/// Initial states x_n with q_n = round(r_n * direction) customers of age 0.
/// All points share one residual draw per class, so ||u_n|| + ||v_n|| is
/// bounded by `residual_bound` and the residual ratio falls like 1/r_n.
struct ScalingSequence {
  Eigen::VectorXd direction;
  std::vector<ScalingPoint> points;
  double residual_bound = 0.0;
  std::uint64_t seed = 0;
};

/// Builds and certifies a sequence: r_n strictly increasing, queue ratios
/// within rounding of ||direction||_1 = 1, residual ratios at most
/// residual_bound / r_n. Throws Error when any of these fails.
ScalingSequence make_scaling_sequence(const ValidatedSpec& spec, const Eigen::VectorXd& direction,
                                      const std::vector<double>& schedule, std::uint64_t seed);

/// (1/r) X(r s) sampled on an evenly spaced grid over [0, t_max].
struct ScaledPath {
  double r = 0.0;
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> queues;  // q(r s) / r
  std::vector<double> residuals;        // (||u(r s)|| + ||v(r s)||) / r
  bool truncated = false;               // event cap hit before r * t_max
};

inline constexpr int kScaledGridPoints = 1001;

ScaledPath scaled_path(const ValidatedSpec& spec, const SimState& x_n, double r_n, double t_max,
                       std::uint64_t seed, std::uint64_t event_cap = 100'000'000);

/// max over grid points s <= t of ||q(s)/r - Q(s)||_1 + (||u|| + ||v||)/r.
/// Throws Error when t lies beyond the path grid or the trajectory horizon.
double uoc_distance(const ScaledPath& path, const FluidTrajectory& traj, double t);

struct ConvergenceRow {
  double r = 0.0;
  std::size_t seed_count = 0;
  MeanEstimate distance;
  std::size_t truncated = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool strictly_decreasing = false;
  double log_log_slope = 0.0;  // slope of log(mean distance) against log(r)
  double t_max = 0.0;
};

/// For each point of `seq`, the u.o.c. distance on [0, t_max] between the
/// scaled path and the fluid trajectory from the sequence direction, over
/// `seeds` independent runs.
ConvergenceTable convergence_experiment(const ValidatedSpec& spec, const ScalingSequence& seq,
                                        double t_max, std::size_t seeds, std::uint64_t seed,
                                        std::uint64_t event_cap = 100'000'000);

/// Columns r_n,seed_count,mean_dist,ci_low,ci_high.
std::string to_csv(const ConvergenceTable& table);

}  // namespace mcqn
