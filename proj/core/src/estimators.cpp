#include "mcqn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcqn {

namespace {

double total_queue(std::span<const long long> q) {
  double n = 0.0;
  for (long long x : q) n += static_cast<double>(x);
  return n;
}

StateView view_of(const SimState& s, std::vector<long long>& q_buffer) {
  q_buffer.resize(s.queues.size());
  for (std::size_t k = 0; k < s.queues.size(); ++k) {
    q_buffer[k] = static_cast<long long>(s.queues[k].size());
  }
  return {q_buffer, s.u, s.v, s.z};
}

}  // namespace

StatePredicate StatePredicate::norm_ball(double kappa) {
  return {total_queue, true, kappa};
}

StatePredicate StatePredicate::sublevel(QueueTerm queue_term, double kappa) {
  return {std::move(queue_term), true, kappa};
}

StatePredicate StatePredicate::empty_network() { return {total_queue, false, 0.0}; }

StatePredicate StatePredicate::everything() {
  return {[](std::span<const long long>) { return 0.0; }, false,
          std::numeric_limits<double>::infinity()};
}

StatePredicate StatePredicate::nothing() {
  return {[](std::span<const long long>) { return 0.0; }, false,
          -std::numeric_limits<double>::infinity()};
}

double StatePredicate::level(const StateView& x) const {
  double f = term_(x.q);
  if (residuals_) {
    for (double u : x.u) f += u;
    for (double v : x.v) f += v;
  }
  return f;
}

double StatePredicate::decay_rate(const StateView& x) const {
  if (!residuals_) return 0.0;
  double rate = 0.0;
  for (double u : x.u) {
    if (u > 0.0) rate += 1.0;
  }
  for (std::size_t k = 0; k < x.v.size(); ++k) {
    if (x.v[k] > 0.0) rate += x.z[k];
  }
  return rate;
}

std::optional<double> StatePredicate::entry_offset(const StateView& x, double span) const {
  const double f = level(x);
  if (f <= kappa_) return 0.0;
  const double rate = decay_rate(x);
  if (rate <= 0.0 || !std::isfinite(kappa_)) return std::nullopt;
  const double offset = (f - kappa_) / rate;
  if (offset < span) return offset;
  return std::nullopt;
}

double StatePredicate::time_inside(const StateView& x, double span) const {
  const double f = level(x);
  if (f <= kappa_) return span;
  const double rate = decay_rate(x);
  if (rate <= 0.0 || !std::isfinite(kappa_)) return 0.0;
  return std::max(0.0, span - (f - kappa_) / rate);
}

std::optional<double> first_entrance_time(const SamplePath& path, const StatePredicate& set,
                                          double delta) {
  const std::size_t n = path.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!path.batch_end(i)) continue;
    const bool last = i + 1 == n;
    const double t0 = path.time(i);
    const double t1 = last ? path.end_time() : path.time(i + 1);
    if (!last && t1 <= delta) continue;
    if (last && t1 < delta) break;
    if (t0 >= delta) {
      if (auto off = set.entry_offset(path.state(i), t1 - t0)) return t0 + *off;
      continue;
    }
    const Snapshot s = Snapshot::of(path.state(i)).decayed(delta - t0);
    if (auto off = set.entry_offset(s.view(), t1 - delta)) return delta + *off;
  }
  return std::nullopt;
}

double occupation_fraction(const SamplePath& path, const StatePredicate& set) {
  const std::size_t n = path.size();
  if (n == 0) return 0.0;
  const double total = path.end_time() - path.time(0);
  if (total <= 0.0) return set.contains(path.state(0)) ? 1.0 : 0.0;
  double inside = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!path.batch_end(i)) continue;
    const double t1 = i + 1 == n ? path.end_time() : path.time(i + 1);
    inside += set.time_inside(path.state(i), t1 - path.time(i));
  }
  return std::clamp(inside / total, 0.0, 1.0);
}

std::optional<double> first_entrance_time(Simulator& sim, const StatePredicate& set, double delta,
                                          double horizon, std::uint64_t event_cap) {
  if (delta > sim.clock() && !sim.run_until(std::min(delta, horizon), event_cap)) {
    return std::nullopt;
  }
  if (sim.clock() < delta) return std::nullopt;
  std::vector<long long> q;
  while (true) {
    const double next = sim.next_event_time();
    const double t1 = std::min(next, horizon);
    if (auto off = set.entry_offset(view_of(sim.state(), q), t1 - sim.clock())) {
      return sim.clock() + *off;
    }
    if (next > horizon || sim.events() >= event_cap) return std::nullopt;
    sim.step();
  }
}

ReturnTimeEstimate estimate_return_time(const ValidatedSpec& spec, const StatePredicate& set,
                                        const SimState& x0, double delta, std::size_t replications,
                                        std::uint64_t seed, const RunLimits& limits) {
  if (replications < 2) throw Error("estimate_return_time needs at least 2 replications");
  ReturnTimeEstimate out;
  out.samples.resize(replications);
  parallel_for(replications, [&](std::size_t r) {
    Simulator sim(spec, x0, replication_seed(seed, r));
    out.samples[r] = first_entrance_time(sim, set, delta, x0.clock + limits.horizon_time,
                                         limits.event_cap);
  });
  std::vector<double> reached;
  for (const auto& s : out.samples) {
    if (s) {
      reached.push_back(*s - x0.clock);
    } else {
      ++out.not_reached;
    }
  }
  out.reached = reached.size();
  out.time = estimate_mean(reached);
  return out;
}

TimeAverage time_average_queue(const ValidatedSpec& spec, const SimState& x0,
                               const SimOptions& options, std::uint64_t seed) {
  Simulator sim(spec, x0, seed);
  const int K = spec.num_classes();
  std::vector<double> area(static_cast<std::size_t>(K), 0.0);
  const double start = sim.clock();
  while (true) {
    if (options.horizon_events > 0 && sim.events() >= options.horizon_events) break;
    if (sim.events() >= options.event_cap) break;
    const double next = sim.next_event_time();
    const double t1 = std::min(next, options.horizon_time);
    if (!std::isfinite(t1)) break;
    const double dt = t1 - sim.clock();
    for (int k = 0; k < K; ++k) {
      area[static_cast<std::size_t>(k)] += dt * static_cast<double>(sim.state().queue_length(k));
    }
    sim.step(options.horizon_time);
    if (next > options.horizon_time) break;
  }
  TimeAverage out;
  out.duration = sim.clock() - start;
  out.events = sim.events();
  out.per_class.resize(static_cast<std::size_t>(K), 0.0);
  if (out.duration > 0.0) {
    for (int k = 0; k < K; ++k) {
      out.per_class[static_cast<std::size_t>(k)] = area[static_cast<std::size_t>(k)] / out.duration;
      out.total += out.per_class[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

std::vector<Snapshot> sample_on_grid(const ValidatedSpec& spec, const SimState& x0,
                                     std::span<const double> grid, std::uint64_t seed,
                                     std::uint64_t event_cap) {
  Simulator sim(spec, x0, seed);
  std::vector<Snapshot> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (t < sim.clock()) throw Error("sample_on_grid: grid must be nondecreasing and start at the initial clock");
    // Events exactly at a grid time are applied (right-continuous paths).
    if (!sim.run_until(t, event_cap)) break;
    out.push_back(Snapshot::of(sim.state()));
  }
  return out;
}

}  // namespace mcqn
