#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcqn/network.hpp"

namespace mcqn {

/// First-moment projection of a validated network.
struct FluidSpec {
  int num_classes = 0;
  int num_stations = 0;
  Eigen::VectorXd arrival_rates;
  Eigen::VectorXd service_rates;
  Eigen::MatrixXd routing;
  Eigen::MatrixXd constituency;
  Discipline discipline;
  std::vector<int> station;  // serving station per class

  static FluidSpec from(const ValidatedSpec& spec);
  bool proportional() const {
    return discipline.kind == DisciplineKind::kHlpps ||
           discipline.kind == DisciplineKind::kWorkConservingDefault;
  }
};

/// Emptiness flags plus the weights used by proportional disciplines
/// (normally the current fluid levels).
struct RegimePattern {
  std::vector<bool> nonempty;
  Eigen::VectorXd weights;

  static RegimePattern of_levels(const Eigen::VectorXd& levels);
  std::vector<bool> busy_stations(const FluidSpec& spec) const;
};

class RegimeError : public Error {
 public:
  RegimeError(const std::string& what, Eigen::VectorXd last_iterate, double residual)
      : Error(what), last_iterate(std::move(last_iterate)), residual(residual) {}
  Eigen::VectorXd last_iterate;
  double residual;
};

/// Allocation rates of one regime, solved as the fixed point of the per-station
/// rate map (absolute tolerance 1e-12, at most 1000 sweeps). Empty classes that
/// can be kept empty take exactly their inflow.
Eigen::VectorXd regime_rates(const FluidSpec& spec, const RegimePattern& pattern,
                             const Eigen::VectorXd& initial_guess = {});

/// Level drift for given allocation rates: alpha + (P^T - I) M rates.
Eigen::VectorXd level_drift(const FluidSpec& spec, const Eigen::VectorXd& rates);

/// Piecewise-linear fluid path. Breakpoint 0 is at time 0; segment i spans
/// [times[i], times[i+1]] with constant allocation rates rates[i]. T(0) = 0.
class FluidTrajectory {
 public:
  FluidTrajectory() = default;
  /// Throws Error on inconsistent sizes or non-increasing breakpoints.
  FluidTrajectory(std::vector<double> times, std::vector<Eigen::VectorXd> levels,
                  std::vector<Eigen::VectorXd> rates, std::optional<double> empty_time = {});

  int num_classes() const { return levels_.empty() ? 0 : static_cast<int>(levels_[0].size()); }
  std::size_t num_breakpoints() const { return times_.size(); }
  std::size_t num_segments() const { return rates_.size(); }
  double horizon() const { return times_.empty() ? 0.0 : times_.back(); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<Eigen::VectorXd>& levels() const { return levels_; }
  const std::vector<Eigen::VectorXd>& rates() const { return rates_; }
  /// Cumulative allocation T at each breakpoint.
  const std::vector<Eigen::VectorXd>& allocations() const { return allocations_; }
  /// First time after which Q stays 0 on the computed span, if reached.
  std::optional<double> empty_time() const { return empty_time_; }

  /// Segment containing t (the later one at a breakpoint, the last one at the horizon).
  std::size_t segment_at(double t) const;
  Eigen::VectorXd level_at(double t) const;
  Eigen::VectorXd allocation_at(double t) const;
  Eigen::VectorXd slope(std::size_t segment) const;

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> levels_;
  std::vector<Eigen::VectorXd> rates_;
  std::vector<Eigen::VectorXd> allocations_;
  std::optional<double> empty_time_;
};

/// W = C M^-1 Q.
Eigen::VectorXd workload(const FluidSpec& spec, const Eigen::VectorXd& levels);
/// I(t) = e t - C T(t).
Eigen::VectorXd idleness(const FluidSpec& spec, const FluidTrajectory& traj, double t);

/// Event-driven integration from q0 up to `horizon`. Regimes with constant
/// rates are integrated exactly up to the next zero crossing. Under
/// proportional disciplines, regimes whose shares drift are cut into
/// substeps of relative size 1e-2, which keeps the output an exact solution of
/// the fluid equations while tracking the proportional split.
/// Throws Error for FIFO and when more than 10^6 breakpoints are needed.
FluidTrajectory fluid_trajectory(const FluidSpec& spec, const Eigen::VectorXd& q0, double horizon);

struct FluidCheck {
  std::string name;
  double residual = 0.0;
  bool passed = true;
};

struct FluidReport {
  std::vector<FluidCheck> checks;
  double tolerance = 0.0;

  bool passed() const;
  const FluidCheck* find(const std::string& name) const;
  std::vector<std::string> failures() const;
};

namespace fluid_check {
inline constexpr const char* kBalance = "balance";
inline constexpr const char* kNonnegativeLevel = "nonnegative level";
inline constexpr const char* kAllocationNondecreasing = "allocation nondecreasing";
inline constexpr const char* kIdlenessNondecreasing = "idleness nondecreasing";
inline constexpr const char* kWorkload = "workload identity";
inline constexpr const char* kComplementarity = "complementarity";
}  // namespace fluid_check

/// Checks the fluid equations at every breakpoint and segment midpoint.
FluidReport verify_fluid_solution(const FluidTrajectory& traj, const FluidSpec& spec, double tol);

/// t -> Q(r t) / r on breakpoints t_i / r; rates are unchanged.
FluidTrajectory scale(const FluidTrajectory& traj, double r);
/// t -> Q(t + s), allocations re-based at s. Throws Error if s is outside [0, horizon].
FluidTrajectory shift(const FluidTrajectory& traj, double s);
/// `first` on [0, t_star] followed by `second` shifted by t_star. Throws Error
/// when ||first.Q(t_star) - second.Q(0)||_1 > 1e-9.
FluidTrajectory concatenate(const FluidTrajectory& first, const FluidTrajectory& second,
                            double t_star);

enum class StabilityVerdict { kStable, kDiverging, kInconclusive };
std::string to_string(StabilityVerdict v);

struct DirectionResult {
  Eigen::VectorXd direction;
  std::optional<double> empty_time;
  double slope = 0.0;  // least-squares slope of ||Q||_1 over the second half
  double final_norm = 0.0;
};

struct StabilityProbe {
  StabilityVerdict verdict = StabilityVerdict::kInconclusive;
  double tau_hat = 0.0;   // max emptying time when stable
  double max_slope = 0.0;
  std::vector<DirectionResult> directions;
};

/// Integrates each unit direction to `tau_cap`. Throws Error for directions
/// that are negative or do not sum to 1.
StabilityProbe stability_probe(const FluidSpec& spec, const std::vector<Eigen::VectorXd>& directions,
                               double tau_cap);

/// Unit vectors e_1..e_K.
std::vector<Eigen::VectorXd> coordinate_directions(int num_classes);

/// ||alpha||_1 + (1 + max row sum of P) * sum_j max_{k in C(j)} mu_k.
double lipschitz_bound(const FluidSpec& spec);

struct LipschitzReport {
  double bound = 0.0;
  double max_slope = 0.0;  // largest ||dQ/dt||_1 over segments
  bool passed() const { return max_slope <= bound * (1.0 + 1e-12); }
};

LipschitzReport lipschitz_check(const FluidTrajectory& traj, double bound);

/// Breakpoint table: time, Q_1..Q_K, Tdot_1..Tdot_K, W_1..W_J, I_1..I_J.
/// Tdot at a breakpoint is the rate of the segment that starts there.
std::string to_csv(const FluidTrajectory& traj, const FluidSpec& spec);

}  // namespace mcqn
