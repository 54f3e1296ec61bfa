#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcqn/network.hpp"
#include "mcqn/random.hpp"

namespace mcqn {

/// Markov state of a head-of-the-line network.
///
/// Each class list holds the times at which its customers entered the
/// class, oldest first; the age of a customer is `clock - entered_at`.
/// Residual interarrival times `u` are kept per class (always 0 for classes
/// without exogenous arrivals). Service effort of class k is the exact
/// rational `effort_num[k] / effort_den[station_of(k)]`; `z` caches it.
struct SimState {
  double clock = 0.0;
  std::vector<std::deque<double>> queues;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<long long> effort_num;
  std::vector<long long> effort_den;
  std::vector<double> z;

  int num_classes() const { return static_cast<int>(queues.size()); }
  long long queue_length(int k) const {
    return static_cast<long long>(queues[static_cast<std::size_t>(k)].size());
  }
  long long total_customers() const;
  std::vector<long long> queue_lengths() const;
};

/// Empty network at time 0 with residual interarrival times drawn from the
/// arrival laws. Deterministic in `seed`.
SimState empty_state(const ValidatedSpec& spec, std::uint64_t seed);

/// State with `counts[k]` customers of age 0 in class k and freshly drawn
/// residual interarrival and head-of-line service times.
SimState fresh_state(const ValidatedSpec& spec, std::span<const long long> counts,
                     std::uint64_t seed);

/// Recomputes the effort split from queue contents under the network's discipline.
void assign_effort(const ValidatedSpec& spec, SimState& state);

/// Lists every violated state invariant; empty when consistent.
std::vector<std::string> check_state(const ValidatedSpec& spec, const SimState& state);

/// Non-owning view of the (q, u, v, z) part of a state.
struct StateView {
  std::span<const long long> q;
  std::span<const double> u;
  std::span<const double> v;
  std::span<const double> z;
};

/// |x| = total customers + sum of residual interarrival + residual service times.
double state_norm(const StateView& x);
double state_norm(const SimState& x);

/// Owned (q, u, v, z) snapshot.
struct Snapshot {
  std::vector<long long> q;
  std::vector<double> u, v, z;

  StateView view() const { return {q, u, v, z}; }
  static Snapshot of(const SimState& s);
  static Snapshot of(const StateView& x);
  /// State after `dt` time units without events: residuals decay linearly.
  Snapshot decayed(double dt) const;
};

enum class EventKind { kInitial, kArrival, kCompletion };

std::string to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::kArrival;
  int cls = -1;
  int routed_to = -1;  // completion destination, -1 = exit
};

class SamplePath;

/// Event-driven simulation of the network from a given state. One
/// independent random substream per primitive sequence (interarrival and
/// service times of each class, routing of each class).
class Simulator {
 public:
  Simulator(const ValidatedSpec& spec, SimState initial, std::uint64_t seed);

  const SimState& state() const { return state_; }
  const ValidatedSpec& spec() const { return *spec_; }
  double clock() const { return state_.clock; }
  /// Absolute time of the next event, +inf if none is pending.
  double next_event_time() const;

  /// Processes the next batch of simultaneous events if it happens no later
  /// than `until`; otherwise lets residuals decay up to `until`. Returns the
  /// events processed, in tie order (arrivals before completions, lower
  /// class index first).
  std::span<const Event> step(double until = std::numeric_limits<double>::infinity());

  /// Steps until the clock reaches `until` (events at exactly `until` are
  /// processed) or the event budget runs out. Returns false on budget exhaustion.
  bool run_until(double until, std::uint64_t max_events = 100'000'000);

  std::uint64_t events() const { return events_; }
  std::uint64_t arrivals() const { return arrivals_; }
  std::uint64_t departures() const { return departures_; }

  /// Appends a record to `path` after every processed event; nullptr stops recording.
  void record_into(SamplePath* path) { recorder_ = path; }

 private:
  void advance(double dt);
  void arrive(int k);
  void complete(int k);
  void enter(int k);

  const ValidatedSpec* spec_;
  SimState state_;
  std::vector<Engine> arrival_streams_;
  std::vector<Engine> service_streams_;
  std::vector<Engine> routing_streams_;
  std::vector<Event> batch_;
  SamplePath* recorder_ = nullptr;
  std::uint64_t events_ = 0;
  std::uint64_t arrivals_ = 0;
  std::uint64_t departures_ = 0;
};

struct SimOptions {
  double horizon_time = std::numeric_limits<double>::infinity();
  std::uint64_t horizon_events = 0;  // 0 = no event horizon
  std::uint64_t event_cap = 100'000'000;
};

/// Recorded realization. Record 0 is the initial state; every later record
/// is the state right after one event. Times are nondecreasing; events of a
/// simultaneous batch share one time and only the last record of a batch is
/// guaranteed to satisfy all state invariants.
class SamplePath {
 public:
  explicit SamplePath(int num_classes = 0) : k_(num_classes) {}

  int num_classes() const { return k_; }
  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_[i]; }
  EventKind kind(std::size_t i) const { return kinds_[i]; }
  int cls(std::size_t i) const { return classes_[i]; }
  int routed_to(std::size_t i) const { return routed_[i]; }
  StateView state(std::size_t i) const;
  /// Whether record i is the last of its simultaneous batch.
  bool batch_end(std::size_t i) const { return i + 1 == size() || times_[i + 1] > times_[i]; }

  double end_time() const { return end_time_; }
  bool truncated() const { return truncated_; }
  std::uint64_t seed() const { return seed_; }

  void append(double time, EventKind kind, int cls, int routed_to, const SimState& state);
  void finish(double end_time, bool truncated, std::uint64_t seed);

  /// CSV with columns time,event_kind,class,q_1..q_K,norm.
  std::string to_csv() const;

 private:
  int k_;
  std::vector<double> times_;
  std::vector<EventKind> kinds_;
  std::vector<int> classes_;
  std::vector<int> routed_;
  std::vector<long long> q_;
  std::vector<double> u_, v_, z_;
  double end_time_ = 0.0;
  bool truncated_ = false;
  std::uint64_t seed_ = 0;
};

/// Simulates from `initial` until the time or event horizon and records
/// every event. Hitting `event_cap` first marks the path truncated.
SamplePath simulate(const ValidatedSpec& spec, const SimState& initial, const SimOptions& options,
                    std::uint64_t seed);

}  // namespace mcqn
