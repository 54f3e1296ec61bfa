#include "mcqn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mcqn {

namespace {

constexpr double kTieTol = 1e-12;

std::size_t idx(int k) { return static_cast<std::size_t>(k); }

enum Stream : std::uint64_t { kArrivalStream = 0, kServiceStream = 1, kRoutingStream = 2 };

std::uint64_t stream_id(int k, Stream s) { return 3 * static_cast<std::uint64_t>(k) + s; }

// Streams used only to draw initial residuals; disjoint from simulation streams.
constexpr std::uint64_t kInitialResidualBase = 1ULL << 40;

void size_state(SimState& s, int K) {
  s.queues.assign(idx(K), {});
  s.u.assign(idx(K), 0.0);
  s.v.assign(idx(K), 0.0);
  s.effort_num.assign(idx(K), 0);
  s.z.assign(idx(K), 0.0);
}

void assign_station_effort(const ValidatedSpec& spec, SimState& state, int j) {
  const auto& members = spec.classes_at(j);
  long long total = 0;
  for (int k : members) {
    state.effort_num[idx(k)] = 0;
    state.z[idx(k)] = 0.0;
    total += state.queue_length(k);
  }
  state.effort_den[idx(j)] = 1;
  if (total == 0) return;

  switch (spec.discipline().kind) {
    case DisciplineKind::kFifo: {
      int served = -1;
      double oldest = std::numeric_limits<double>::infinity();
      for (int k : members) {
        const auto& q = state.queues[idx(k)];
        if (!q.empty() && q.front() < oldest) {
          oldest = q.front();
          served = k;
        }
      }
      state.effort_num[idx(served)] = 1;
      state.z[idx(served)] = 1.0;
      return;
    }
    case DisciplineKind::kStaticPriority: {
      int served = -1;
      int best = std::numeric_limits<int>::max();
      for (int k : members) {
        const int rank = spec.discipline().ranks[idx(k)];
        if (state.queue_length(k) > 0 && rank < best) {
          best = rank;
          served = k;
        }
      }
      state.effort_num[idx(served)] = 1;
      state.z[idx(served)] = 1.0;
      return;
    }
    case DisciplineKind::kHlpps:
    case DisciplineKind::kWorkConservingDefault: {
      state.effort_den[idx(j)] = total;
      for (int k : members) {
        const long long q = state.queue_length(k);
        state.effort_num[idx(k)] = q;
        state.z[idx(k)] = static_cast<double>(q) / static_cast<double>(total);
      }
      return;
    }
  }
}

}  // namespace

long long SimState::total_customers() const {
  long long n = 0;
  for (const auto& q : queues) n += static_cast<long long>(q.size());
  return n;
}

std::vector<long long> SimState::queue_lengths() const {
  std::vector<long long> out;
  out.reserve(queues.size());
  for (const auto& q : queues) out.push_back(static_cast<long long>(q.size()));
  return out;
}

void assign_effort(const ValidatedSpec& spec, SimState& state) {
  state.effort_den.assign(idx(spec.num_stations()), 1);
  if (state.effort_num.size() != state.queues.size()) state.effort_num.assign(state.queues.size(), 0);
  if (state.z.size() != state.queues.size()) state.z.assign(state.queues.size(), 0.0);
  for (int j = 0; j < spec.num_stations(); ++j) assign_station_effort(spec, state, j);
}

SimState empty_state(const ValidatedSpec& spec, std::uint64_t seed) {
  const std::vector<long long> counts(idx(spec.num_classes()), 0);
  return fresh_state(spec, counts, seed);
}

SimState fresh_state(const ValidatedSpec& spec, std::span<const long long> counts,
                     std::uint64_t seed) {
  const int K = spec.num_classes();
  if (static_cast<int>(counts.size()) != K) throw Error("fresh_state: one count per class required");
  SimState s;
  size_state(s, K);
  for (int k = 0; k < K; ++k) {
    if (counts[idx(k)] < 0) throw Error("fresh_state: negative queue length");
    s.queues[idx(k)].assign(static_cast<std::size_t>(counts[idx(k)]), 0.0);
    Engine engine(substream_seed(seed, kInitialResidualBase + stream_id(k, kArrivalStream)));
    if (spec.exogenous(k)) {
      s.u[idx(k)] = draw_primitive(*spec.raw().arrival_distributions[idx(k)], engine);
    }
    if (counts[idx(k)] > 0) {
      Engine service(substream_seed(seed, kInitialResidualBase + stream_id(k, kServiceStream)));
      s.v[idx(k)] = draw_primitive(spec.raw().service_distributions[idx(k)], service);
    }
  }
  assign_effort(spec, s);
  return s;
}

std::vector<std::string> check_state(const ValidatedSpec& spec, const SimState& s) {
  std::vector<std::string> bad;
  const int K = spec.num_classes();
  const int J = spec.num_stations();
  if (static_cast<int>(s.queues.size()) != K || static_cast<int>(s.u.size()) != K ||
      static_cast<int>(s.v.size()) != K || static_cast<int>(s.effort_num.size()) != K ||
      static_cast<int>(s.z.size()) != K || static_cast<int>(s.effort_den.size()) != J) {
    bad.push_back("state vectors have wrong dimensions");
    return bad;
  }
  const std::string at = " at t=" + std::to_string(s.clock);
  for (int k = 0; k < K; ++k) {
    const std::string c = "class " + std::to_string(k);
    const long long q = s.queue_length(k);
    if (!(s.u[idx(k)] >= 0.0)) bad.push_back(c + ": negative residual interarrival time" + at);
    if (spec.exogenous(k) && !(s.u[idx(k)] > 0.0))
      bad.push_back(c + ": residual interarrival time must be positive" + at);
    if (!spec.exogenous(k) && s.u[idx(k)] != 0.0)
      bad.push_back(c + ": residual interarrival time set for a class without arrivals" + at);
    if (!(s.v[idx(k)] >= 0.0)) bad.push_back(c + ": negative residual service time" + at);
    if ((s.v[idx(k)] == 0.0) != (q == 0))
      bad.push_back(c + ": residual service time zero iff queue empty violated" + at);
    if (q == 0 && s.effort_num[idx(k)] != 0)
      bad.push_back(c + ": effort assigned to an empty class" + at);
    if (s.effort_num[idx(k)] < 0) bad.push_back(c + ": negative effort" + at);
    const auto& list = s.queues[idx(k)];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] > s.clock || (i > 0 && list[i] < list[i - 1])) {
        bad.push_back(c + ": customers not ordered by age" + at);
        break;
      }
    }
  }
  for (int j = 0; j < J; ++j) {
    const std::string st = "station " + std::to_string(j);
    long long total = 0;
    long long effort = 0;
    const long long den = s.effort_den[idx(j)];
    for (int k : spec.classes_at(j)) {
      total += s.queue_length(k);
      effort += s.effort_num[idx(k)];
      if (den > 0 && s.z[idx(k)] != static_cast<double>(s.effort_num[idx(k)]) / static_cast<double>(den))
        bad.push_back(st + ": cached effort out of sync" + at);
    }
    if (den <= 0) bad.push_back(st + ": non-positive effort denominator" + at);
    if (total > 0 && effort != den) bad.push_back(st + ": effort does not sum to one" + at);
    if (total == 0 && effort != 0) bad.push_back(st + ": idle station with effort" + at);
    if (total == 0) continue;

    switch (spec.discipline().kind) {
      case DisciplineKind::kStaticPriority:
        for (int k : spec.classes_at(j)) {
          if (s.effort_num[idx(k)] == 0) continue;
          for (int l : spec.classes_at(j)) {
            if (s.queue_length(l) > 0 &&
                spec.discipline().ranks[idx(l)] < spec.discipline().ranks[idx(k)])
              bad.push_back(st + ": served class has a nonempty higher-priority class" + at);
          }
        }
        break;
      case DisciplineKind::kHlpps:
      case DisciplineKind::kWorkConservingDefault:
        if (den != total) bad.push_back(st + ": effort denominator differs from station count" + at);
        for (int k : spec.classes_at(j)) {
          if (s.effort_num[idx(k)] != s.queue_length(k))
            bad.push_back(st + ": effort not proportional to queue length" + at);
        }
        break;
      case DisciplineKind::kFifo:
        for (int k : spec.classes_at(j)) {
          if (s.effort_num[idx(k)] == 0) continue;
          for (int l : spec.classes_at(j)) {
            if (s.queue_length(l) > 0 && s.queues[idx(l)].front() < s.queues[idx(k)].front())
              bad.push_back(st + ": served customer is not the oldest at the station" + at);
          }
        }
        break;
    }
  }
  return bad;
}

double state_norm(const StateView& x) {
  double n = 0.0;
  for (long long q : x.q) n += static_cast<double>(q);
  for (double u : x.u) n += u;
  for (double v : x.v) n += v;
  return n;
}

double state_norm(const SimState& x) {
  return state_norm(StateView{x.queue_lengths(), x.u, x.v, x.z});
}

Snapshot Snapshot::of(const SimState& s) { return {s.queue_lengths(), s.u, s.v, s.z}; }

Snapshot Snapshot::of(const StateView& x) {
  return {{x.q.begin(), x.q.end()}, {x.u.begin(), x.u.end()}, {x.v.begin(), x.v.end()},
          {x.z.begin(), x.z.end()}};
}

Snapshot Snapshot::decayed(double dt) const {
  Snapshot out = *this;
  for (double& x : out.u) {
    if (x > 0.0) x = std::max(0.0, x - dt);
  }
  for (std::size_t k = 0; k < out.v.size(); ++k) {
    out.v[k] = std::max(0.0, out.v[k] - out.z[k] * dt);
  }
  return out;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kInitial:
      return "initial";
    case EventKind::kArrival:
      return "arrival";
    case EventKind::kCompletion:
      return "completion";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const ValidatedSpec& spec, SimState initial, std::uint64_t seed)
    : spec_(&spec), state_(std::move(initial)) {
  const int K = spec.num_classes();
  if (static_cast<int>(state_.queues.size()) != K) throw Error("initial state has wrong class count");
  if (state_.effort_num.size() != idx(K) || state_.z.size() != idx(K)) {
    state_.effort_num.assign(idx(K), 0);
    state_.z.assign(idx(K), 0.0);
  }
  assign_effort(spec, state_);
  if (auto bad = check_state(spec, state_); !bad.empty()) {
    throw Error("invalid initial state: " + bad.front());
  }
  for (int k = 0; k < K; ++k) {
    arrival_streams_.emplace_back(substream_seed(seed, stream_id(k, kArrivalStream)));
    service_streams_.emplace_back(substream_seed(seed, stream_id(k, kServiceStream)));
    routing_streams_.emplace_back(substream_seed(seed, stream_id(k, kRoutingStream)));
  }
}

double Simulator::next_event_time() const {
  double dt = std::numeric_limits<double>::infinity();
  for (int k : spec_->exogenous_classes()) dt = std::min(dt, state_.u[idx(k)]);
  const int K = spec_->num_classes();
  for (int k = 0; k < K; ++k) {
    if (state_.z[idx(k)] > 0.0) dt = std::min(dt, state_.v[idx(k)] / state_.z[idx(k)]);
  }
  return state_.clock + dt;
}

void Simulator::advance(double dt) {
  if (dt <= 0.0) return;
  for (int k : spec_->exogenous_classes()) {
    state_.u[idx(k)] = std::max(0.0, state_.u[idx(k)] - dt);
  }
  const int K = spec_->num_classes();
  for (int k = 0; k < K; ++k) {
    if (state_.z[idx(k)] > 0.0) {
      state_.v[idx(k)] = std::max(0.0, state_.v[idx(k)] - state_.z[idx(k)] * dt);
    }
  }
}

void Simulator::enter(int k) {
  auto& list = state_.queues[idx(k)];
  list.push_back(state_.clock);
  if (list.size() == 1) {
    state_.v[idx(k)] = draw_primitive(spec_->raw().service_distributions[idx(k)],
                                      service_streams_[idx(k)]);
  }
  assign_station_effort(*spec_, state_, spec_->station_of(k));
}

void Simulator::arrive(int k) {
  state_.u[idx(k)] =
      draw_primitive(*spec_->raw().arrival_distributions[idx(k)], arrival_streams_[idx(k)]);
  ++arrivals_;
  enter(k);
}

void Simulator::complete(int k) {
  auto& list = state_.queues[idx(k)];
  list.pop_front();
  state_.v[idx(k)] = list.empty() ? 0.0
                                  : draw_primitive(spec_->raw().service_distributions[idx(k)],
                                                   service_streams_[idx(k)]);
  assign_station_effort(*spec_, state_, spec_->station_of(k));
  const int to = draw_route(spec_->routing().row(k), routing_streams_[idx(k)]);
  batch_.back().routed_to = to;
  if (to >= 0) {
    enter(to);
  } else {
    ++departures_;
  }
}

std::span<const Event> Simulator::step(double until) {
  batch_.clear();
  const int K = spec_->num_classes();

  double dt = std::numeric_limits<double>::infinity();
  int lead_class = -1;
  bool lead_arrival = false;
  for (int k : spec_->exogenous_classes()) {
    if (state_.u[idx(k)] < dt) {
      dt = state_.u[idx(k)];
      lead_class = k;
      lead_arrival = true;
    }
  }
  for (int k = 0; k < K; ++k) {
    if (state_.z[idx(k)] <= 0.0) continue;
    const double t = state_.v[idx(k)] / state_.z[idx(k)];
    if (t < dt) {
      dt = t;
      lead_class = k;
      lead_arrival = false;
    }
  }

  if (lead_class < 0 || state_.clock + dt > until) {
    if (std::isfinite(until) && until > state_.clock) {
      advance(until - state_.clock);
      state_.clock = until;
    }
    return {};
  }

  advance(dt);
  state_.clock += dt;
  if (lead_arrival) {
    state_.u[idx(lead_class)] = 0.0;
  } else {
    state_.v[idx(lead_class)] = 0.0;
  }

  const double tol = kTieTol * std::max(1.0, dt);
  std::vector<int> arriving;
  std::vector<int> completing;
  for (int k : spec_->exogenous_classes()) {
    if (state_.u[idx(k)] <= tol) arriving.push_back(k);
  }
  for (int k = 0; k < K; ++k) {
    if (state_.z[idx(k)] > 0.0 && state_.v[idx(k)] <= tol) completing.push_back(k);
  }
  for (int k : arriving) {
    batch_.push_back({state_.clock, EventKind::kArrival, k, -1});
    arrive(k);
    ++events_;
    if (recorder_) recorder_->append(state_.clock, EventKind::kArrival, k, -1, state_);
  }
  for (int k : completing) {
    batch_.push_back({state_.clock, EventKind::kCompletion, k, -1});
    complete(k);
    ++events_;
    if (recorder_) {
      recorder_->append(state_.clock, EventKind::kCompletion, k, batch_.back().routed_to, state_);
    }
  }
  return batch_;
}

bool Simulator::run_until(double until, std::uint64_t max_events) {
  while (true) {
    if (events_ >= max_events) return false;
    const double next = next_event_time();
    if (next > until) {
      step(until);
      return true;
    }
    step(until);
  }
}

// ---------------------------------------------------------------------------

StateView SamplePath::state(std::size_t i) const {
  const std::size_t off = i * idx(k_);
  return {std::span<const long long>(q_).subspan(off, idx(k_)),
          std::span<const double>(u_).subspan(off, idx(k_)),
          std::span<const double>(v_).subspan(off, idx(k_)),
          std::span<const double>(z_).subspan(off, idx(k_))};
}

void SamplePath::append(double time, EventKind kind, int cls, int routed_to, const SimState& s) {
  times_.push_back(time);
  kinds_.push_back(kind);
  classes_.push_back(cls);
  routed_.push_back(routed_to);
  for (const auto& list : s.queues) q_.push_back(static_cast<long long>(list.size()));
  u_.insert(u_.end(), s.u.begin(), s.u.end());
  v_.insert(v_.end(), s.v.begin(), s.v.end());
  z_.insert(z_.end(), s.z.begin(), s.z.end());
}

void SamplePath::finish(double end_time, bool truncated, std::uint64_t seed) {
  end_time_ = end_time;
  truncated_ = truncated;
  seed_ = seed;
}

std::string SamplePath::to_csv() const {
  std::string out = "time,event_kind,class";
  for (int k = 1; k <= k_; ++k) out += ",q_" + std::to_string(k);
  out += ",norm\n";
  char buf[64];
  for (std::size_t i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", times_[i]);
    out += buf;
    out += ',';
    out += to_string(kinds_[i]);
    out += ',';
    out += classes_[i] >= 0 ? std::to_string(classes_[i] + 1) : std::string();
    const StateView x = state(i);
    for (long long q : x.q) {
      out += ',';
      out += std::to_string(q);
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", state_norm(x));
    out += buf;
  }
  return out;
}

SamplePath simulate(const ValidatedSpec& spec, const SimState& initial, const SimOptions& options,
                    std::uint64_t seed) {
  SamplePath path(spec.num_classes());
  Simulator sim(spec, initial, seed);
  path.append(sim.clock(), EventKind::kInitial, -1, -1, sim.state());
  sim.record_into(&path);
  bool truncated = false;
  double end = sim.clock();
  while (true) {
    if (options.horizon_events > 0 && sim.events() >= options.horizon_events) {
      end = sim.clock();
      break;
    }
    if (sim.events() >= options.event_cap) {
      truncated = true;
      end = sim.clock();
      break;
    }
    const double next = sim.next_event_time();
    if (next > options.horizon_time) {
      sim.step(options.horizon_time);
      end = std::isfinite(options.horizon_time) ? options.horizon_time : sim.clock();
      break;
    }
    sim.step(options.horizon_time);
  }
  sim.record_into(nullptr);
  path.finish(end, truncated, seed);
  return path;
}

}  // namespace mcqn
