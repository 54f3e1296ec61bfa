#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mcqn/simulator.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

/// Decidable state set used for entrance and occupation times.
///
/// Every supported set has the form {x : g(q) + w * (||u|| + ||v||) <= kappa}
/// with w in {0, 1}. Between events q is constant and the residual sums
/// decay linearly, so entrance times inside an inter-event interval are
/// solved exactly.
class StatePredicate {
 public:
  using QueueTerm = std::function<double(std::span<const long long>)>;

  /// {|x| <= kappa}.
  static StatePredicate norm_ball(double kappa);
  /// {queue_term(q) + ||u|| + ||v|| <= kappa}.
  static StatePredicate sublevel(QueueTerm queue_term, double kappa);
  /// {q = 0}.
  static StatePredicate empty_network();
  static StatePredicate everything();
  static StatePredicate nothing();

  double level(const StateView& x) const;
  bool contains(const StateView& x) const { return level(x) <= kappa_; }
  /// Offset in [0, span) at which the event-free evolution of x first enters the set.
  std::optional<double> entry_offset(const StateView& x, double span) const;
  /// Lebesgue measure of the part of [0, span] spent in the set.
  double time_inside(const StateView& x, double span) const;

 private:
  StatePredicate(QueueTerm term, bool residuals, double kappa)
      : term_(std::move(term)), residuals_(residuals), kappa_(kappa) {}
  double decay_rate(const StateView& x) const;

  QueueTerm term_;
  bool residuals_;
  double kappa_;
};

/// inf{t >= delta : X(t) in A} on a recorded path, or nullopt when the path
/// ends first.
std::optional<double> first_entrance_time(const SamplePath& path, const StatePredicate& set,
                                          double delta);

/// Fraction of [0, end_time] the recorded path spends in A.
double occupation_fraction(const SamplePath& path, const StatePredicate& set);

/// Entrance time on a live simulation, stepping events until `horizon`.
std::optional<double> first_entrance_time(Simulator& sim, const StatePredicate& set, double delta,
                                          double horizon, std::uint64_t event_cap);

struct RunLimits {
  double horizon_time = 1e9;
  std::uint64_t event_cap = 100'000'000;
};

struct ReturnTimeEstimate {
  MeanEstimate time;  // over replications that reached the set
  std::size_t reached = 0;
  std::size_t not_reached = 0;
  std::vector<std::optional<double>> samples;

  bool defined() const { return reached > 0; }
};

/// Replicated estimate of E_x[tau_A(delta)]. Replications that do not reach
/// the set within the limits are counted separately.
ReturnTimeEstimate estimate_return_time(const ValidatedSpec& spec, const StatePredicate& set,
                                        const SimState& x0, double delta, std::size_t replications,
                                        std::uint64_t seed, const RunLimits& limits = {});

struct TimeAverage {
  double total = 0.0;  // time-average of ||q||
  std::vector<double> per_class;
  double duration = 0.0;
  std::uint64_t events = 0;
};

/// Time-averaged queue lengths over one run.
TimeAverage time_average_queue(const ValidatedSpec& spec, const SimState& x0,
                               const SimOptions& options, std::uint64_t seed);

/// States at the given nondecreasing absolute times (streaming, nothing recorded).
/// Returns fewer snapshots than grid points if the event cap is hit.
std::vector<Snapshot> sample_on_grid(const ValidatedSpec& spec, const SimState& x0,
                                     std::span<const double> grid, std::uint64_t seed,
                                     std::uint64_t event_cap = 100'000'000);

}  // namespace mcqn
