#include "mcqn/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mcqn/stats.hpp"

namespace mcqn {

namespace {

constexpr double kRateTol = 1e-12;
constexpr int kRateSweeps = 1000;
constexpr int kPolishSweeps = 64;
constexpr double kSnap = 1e-12;
constexpr std::size_t kMaxBreakpoints = 1'000'000;
constexpr double kSubstepFraction = 1e-2;
constexpr double kMinSubstep = 1e-9;
constexpr double kDivergenceSlope = 1e-6;
constexpr int kProbeGrid = 1001;

std::size_t idx(int k) { return static_cast<std::size_t>(k); }

std::vector<std::vector<int>> station_members(const FluidSpec& spec) {
  std::vector<std::vector<int>> members(idx(spec.num_stations));
  for (int k = 0; k < spec.num_classes; ++k) members[idx(spec.station[idx(k)])].push_back(k);
  if (spec.discipline.kind == DisciplineKind::kStaticPriority) {
    for (auto& m : members) {
      std::sort(m.begin(), m.end(), [&](int a, int b) {
        return spec.discipline.ranks[idx(a)] < spec.discipline.ranks[idx(b)];
      });
    }
  }
  return members;
}

Eigen::VectorXd rate_map(const FluidSpec& spec, const std::vector<std::vector<int>>& members,
                         const RegimePattern& pattern, const Eigen::VectorXd& rates) {
  const Eigen::VectorXd inflow =
      spec.arrival_rates +
      spec.routing.transpose() * spec.service_rates.cwiseProduct(rates);
  Eigen::VectorXd next = Eigen::VectorXd::Zero(spec.num_classes);
  const bool weighted = pattern.weights.size() == spec.num_classes;
  for (const auto& m : members) {
    if (spec.discipline.kind == DisciplineKind::kStaticPriority) {
      double remaining = 1.0;
      for (int k : m) {
        if (pattern.nonempty[idx(k)]) {
          next[k] = remaining;
          remaining = 0.0;
        } else {
          next[k] = std::min(remaining, std::max(0.0, inflow[k]) / spec.service_rates[k]);
          remaining = std::max(0.0, remaining - next[k]);
        }
      }
      continue;
    }
    double weight_sum = 0.0;
    int busy = 0;
    for (int k : m) {
      if (!pattern.nonempty[idx(k)]) continue;
      ++busy;
      weight_sum += weighted ? pattern.weights[k] : 1.0;
    }
    if (busy > 0) {
      for (int k : m) {
        if (!pattern.nonempty[idx(k)]) continue;
        const double w = weighted ? pattern.weights[k] : 1.0;
        next[k] = weight_sum > 0.0 ? w / weight_sum : 1.0 / busy;
      }
      continue;
    }
    double demand = 0.0;
    for (int k : m) {
      next[k] = std::max(0.0, inflow[k]) / spec.service_rates[k];
      demand += next[k];
    }
    if (demand > 1.0) {
      for (int k : m) next[k] /= demand;
    }
  }
  return next;
}

bool shares_drift(const std::vector<std::vector<int>>& members,
                  const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  for (const auto& m : members) {
    if (m.size() < 2) continue;
    double total = 0.0;
    double total_dot = 0.0;
    double scale = 0.0;
    for (int k : m) {
      total += q[k];
      total_dot += qdot[k];
      scale = std::max(scale, std::abs(qdot[k]));
    }
    if (total <= 0.0) continue;
    for (int k : m) {
      if (std::abs(qdot[k] * total - q[k] * total_dot) > 1e-12 * total * std::max(1.0, scale)) {
        return true;
      }
    }
  }
  return false;
}

double norm1(const Eigen::VectorXd& x) { return x.cwiseAbs().sum(); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

FluidSpec FluidSpec::from(const ValidatedSpec& spec) {
  FluidSpec f;
  f.num_classes = spec.num_classes();
  f.num_stations = spec.num_stations();
  f.arrival_rates = spec.arrival_rates();
  f.service_rates = spec.service_rates();
  f.routing = spec.routing();
  f.constituency = spec.constituency();
  f.discipline = spec.discipline();
  for (int k = 0; k < f.num_classes; ++k) f.station.push_back(spec.station_of(k));
  return f;
}

RegimePattern RegimePattern::of_levels(const Eigen::VectorXd& levels) {
  RegimePattern p;
  p.weights = levels;
  for (Eigen::Index k = 0; k < levels.size(); ++k) p.nonempty.push_back(levels[k] > 0.0);
  return p;
}

std::vector<bool> RegimePattern::busy_stations(const FluidSpec& spec) const {
  std::vector<bool> busy(idx(spec.num_stations), false);
  for (int k = 0; k < spec.num_classes; ++k) {
    if (nonempty[idx(k)]) busy[idx(spec.station[idx(k)])] = true;
  }
  return busy;
}

namespace {

enum class Branch { kRemaining, kInflow, kZero };

// Which branch of the priority rate map each class takes at `rates`.
std::vector<Branch> priority_branches(const FluidSpec& spec,
                                      const std::vector<std::vector<int>>& members,
                                      const RegimePattern& pattern, const Eigen::VectorXd& rates) {
  const Eigen::VectorXd inflow =
      spec.arrival_rates + spec.routing.transpose() * spec.service_rates.cwiseProduct(rates);
  std::vector<Branch> branch(idx(spec.num_classes), Branch::kZero);
  for (const auto& m : members) {
    double remaining = 1.0;
    for (int k : m) {
      const double demand = std::max(0.0, inflow[k]) / spec.service_rates[k];
      if (remaining <= 0.0) {
        branch[idx(k)] = Branch::kZero;
      } else if (pattern.nonempty[idx(k)] || demand > remaining) {
        branch[idx(k)] = Branch::kRemaining;
        remaining = 0.0;
      } else {
        branch[idx(k)] = Branch::kInflow;
        remaining -= demand;
      }
    }
  }
  return branch;
}

// Rates that satisfy the linear equations of the given branch choices exactly.
Eigen::VectorXd solve_branches(const FluidSpec& spec, const std::vector<std::vector<int>>& members,
                               const std::vector<Branch>& branch) {
  const int K = spec.num_classes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  const Eigen::MatrixXd feed = spec.routing.transpose() * spec.service_rates.asDiagonal();
  for (const auto& m : members) {
    for (std::size_t pos = 0; pos < m.size(); ++pos) {
      const int k = m[pos];
      switch (branch[idx(k)]) {
        case Branch::kZero:
          a(k, k) = 1.0;
          break;
        case Branch::kInflow:
          a.row(k) = -feed.row(k);
          a(k, k) += spec.service_rates[k];
          b[k] = spec.arrival_rates[k];
          break;
        case Branch::kRemaining:
          for (std::size_t h = 0; h <= pos; ++h) a(k, m[h]) = 1.0;
          b[k] = 1.0;
          break;
      }
    }
  }
  return a.fullPivLu().solve(b);
}

Eigen::VectorXd priority_rates(const FluidSpec& spec, const std::vector<std::vector<int>>& members,
                               const RegimePattern& pattern, Eigen::VectorXd rates) {
  double residual = std::numeric_limits<double>::infinity();
  for (int round = 0; round < kRateSweeps; ++round) {
    const auto branch = priority_branches(spec, members, pattern, rates);
    rates = solve_branches(spec, members, branch).cwiseMax(0.0);
    residual = (rate_map(spec, members, pattern, rates) - rates).cwiseAbs().maxCoeff();
    if (residual <= kRateTol && priority_branches(spec, members, pattern, rates) == branch) {
      return rates;
    }
  }
  throw RegimeError("priority regime rates did not settle", rates, residual);
}

Eigen::VectorXd proportional_rates(const FluidSpec& spec,
                                   const std::vector<std::vector<int>>& members,
                                   const RegimePattern& pattern, Eigen::VectorXd rates) {
  double residual = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < kRateSweeps; ++sweep) {
    Eigen::VectorXd next = rate_map(spec, members, pattern, rates);
    residual = (next - rates).cwiseAbs().maxCoeff();
    rates = std::move(next);
    if (residual <= kRateTol) {
      // Keep sweeping while it still helps; empty classes then drift at rounding level.
      for (int extra = 0; extra < kPolishSweeps && residual > 0.0; ++extra) {
        next = rate_map(spec, members, pattern, rates);
        const double r = (next - rates).cwiseAbs().maxCoeff();
        if (r >= residual) break;
        residual = r;
        rates = std::move(next);
      }
      return rates;
    }
  }
  throw RegimeError("regime rates did not reach a fixed point", rates, residual);
}

}  // namespace

Eigen::VectorXd regime_rates(const FluidSpec& spec, const RegimePattern& pattern,
                             const Eigen::VectorXd& initial_guess) {
  if (spec.discipline.kind == DisciplineKind::kFifo) {
    throw Error("fluid regime rates are not available for FIFO");
  }
  if (static_cast<int>(pattern.nonempty.size()) != spec.num_classes) {
    throw Error("regime pattern needs one flag per class");
  }
  const auto members = station_members(spec);
  Eigen::VectorXd rates = initial_guess.size() == spec.num_classes
                              ? initial_guess.cwiseMax(0.0).cwiseMin(1.0).eval()
                              : Eigen::VectorXd::Zero(spec.num_classes).eval();
  if (spec.discipline.kind == DisciplineKind::kStaticPriority) {
    return priority_rates(spec, members, pattern, std::move(rates));
  }
  return proportional_rates(spec, members, pattern, std::move(rates));
}

Eigen::VectorXd level_drift(const FluidSpec& spec, const Eigen::VectorXd& rates) {
  const Eigen::VectorXd served = spec.service_rates.cwiseProduct(rates);
  return spec.arrival_rates + spec.routing.transpose() * served - served;
}

FluidTrajectory::FluidTrajectory(std::vector<double> times, std::vector<Eigen::VectorXd> levels,
                                 std::vector<Eigen::VectorXd> rates,
                                 std::optional<double> empty_time)
    : times_(std::move(times)),
      levels_(std::move(levels)),
      rates_(std::move(rates)),
      empty_time_(empty_time) {
  if (times_.empty()) throw Error("fluid trajectory needs at least one breakpoint");
  if (times_.front() != 0.0) throw Error("fluid trajectory must start at time 0");
  if (levels_.size() != times_.size() || rates_.size() + 1 != times_.size()) {
    throw Error("fluid trajectory: breakpoint, level and segment counts disagree");
  }
  const Eigen::Index K = levels_[0].size();
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].size() != K) throw Error("fluid trajectory: level dimension mismatch");
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw Error("fluid trajectory: breakpoints must be strictly increasing");
    }
  }
  for (const auto& r : rates_) {
    if (r.size() != K) throw Error("fluid trajectory: rate dimension mismatch");
  }
  allocations_.reserve(times_.size());
  allocations_.push_back(Eigen::VectorXd::Zero(K));
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    allocations_.push_back(allocations_[i] + rates_[i] * (times_[i + 1] - times_[i]));
  }
}

std::size_t FluidTrajectory::segment_at(double t) const {
  if (rates_.empty()) return 0;
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t after = static_cast<std::size_t>(it - times_.begin());
  if (after == 0) return 0;
  return std::min(after - 1, rates_.size() - 1);
}

Eigen::VectorXd FluidTrajectory::level_at(double t) const {
  if (rates_.empty() || t <= 0.0) return levels_.front();
  if (t >= times_.back()) return levels_.back();
  const std::size_t i = segment_at(t);
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return levels_[i] + w * (levels_[i + 1] - levels_[i]);
}

Eigen::VectorXd FluidTrajectory::allocation_at(double t) const {
  if (rates_.empty() || t <= 0.0) return allocations_.front();
  const std::size_t i = segment_at(std::min(t, times_.back()));
  return allocations_[i] + rates_[i] * (std::min(t, times_.back()) - times_[i]);
}

Eigen::VectorXd FluidTrajectory::slope(std::size_t segment) const {
  return (levels_[segment + 1] - levels_[segment]) / (times_[segment + 1] - times_[segment]);
}

Eigen::VectorXd workload(const FluidSpec& spec, const Eigen::VectorXd& levels) {
  return spec.constituency * levels.cwiseQuotient(spec.service_rates);
}

Eigen::VectorXd idleness(const FluidSpec& spec, const FluidTrajectory& traj, double t) {
  return Eigen::VectorXd::Constant(spec.num_stations, t) -
         spec.constituency * traj.allocation_at(t);
}

FluidTrajectory fluid_trajectory(const FluidSpec& spec, const Eigen::VectorXd& q0, double horizon) {
  if (spec.discipline.kind == DisciplineKind::kFifo) {
    throw Error("fluid integration is not available for FIFO");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error("fluid horizon must be positive and finite");
  if (q0.size() != spec.num_classes) throw Error("initial fluid level needs one entry per class");
  for (Eigen::Index k = 0; k < q0.size(); ++k) {
    if (!(q0[k] >= 0.0) || !std::isfinite(q0[k])) throw Error("initial fluid level must be finite and nonnegative");
  }
  const auto members = station_members(spec);
  const double lipschitz = lipschitz_bound(spec);

  Eigen::VectorXd q = q0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    if (q[k] < kSnap) q[k] = 0.0;
  }
  std::vector<double> times{0.0};
  std::vector<Eigen::VectorXd> levels{q};
  std::vector<Eigen::VectorXd> rate_list;
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(spec.num_classes);
  std::optional<double> empty_time;
  double t = 0.0;

  while (t < horizon) {
    if (times.size() > kMaxBreakpoints) {
      throw Error("fluid integration exceeded 10^6 breakpoints at t=" + fmt(t) +
                  " (regime chattering)");
    }
    rates = regime_rates(spec, RegimePattern::of_levels(q), rates);
    const Eigen::VectorXd qdot = level_drift(spec, rates);

    const bool at_zero = q.isZero(0.0);
    if (at_zero && qdot.cwiseAbs().maxCoeff() <= kRateTol) {
      empty_time = t;
      rate_list.push_back(rates);
      times.push_back(horizon);
      levels.push_back(Eigen::VectorXd::Zero(spec.num_classes));
      t = horizon;
      break;
    }

    double dt = horizon - t;
    bool to_horizon = true;
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      if (q[k] > 0.0 && qdot[k] < 0.0) {
        const double hit = q[k] / -qdot[k];
        if (hit < dt) {
          dt = hit;
          to_horizon = false;
        }
      }
    }
    if (spec.proportional() && shares_drift(members, q, qdot)) {
      const double cap = std::max(kSubstepFraction * q.sum() / lipschitz, kMinSubstep);
      if (cap < dt) {
        dt = cap;
        to_horizon = false;
      }
    }

    Eigen::VectorXd next = q + qdot * dt;
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      const bool crossing = q[k] > 0.0 && qdot[k] < 0.0 && q[k] / -qdot[k] <= dt * (1.0 + 1e-12);
      if (crossing || std::abs(next[k]) < kSnap) next[k] = 0.0;
    }
    const double t_next = to_horizon ? horizon : t + dt;
    if (!(t_next > t)) {
      throw Error("fluid integration stalled at t=" + fmt(t));
    }
    rate_list.push_back(rates);
    times.push_back(t_next);
    levels.push_back(next);
    q = std::move(next);
    t = t_next;
  }

  if (!empty_time && q.isZero(0.0)) {
    const Eigen::VectorXd r = regime_rates(spec, RegimePattern::of_levels(q), rates);
    if (level_drift(spec, r).cwiseAbs().maxCoeff() <= kRateTol) {
      // Emptied exactly at the horizon; find when the last positive stretch ended.
      std::size_t i = levels.size() - 1;
      while (i > 0 && levels[i - 1].isZero(0.0)) --i;
      empty_time = times[i];
    }
  }
  return {std::move(times), std::move(levels), std::move(rate_list), empty_time};
}

bool FluidReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const FluidCheck& c) { return c.passed; });
}

const FluidCheck* FluidReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> FluidReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name + " violated (residual " + fmt(c.residual) + ")");
  }
  return out;
}

FluidReport verify_fluid_solution(const FluidTrajectory& traj, const FluidSpec& spec, double tol) {
  if (traj.num_classes() != spec.num_classes) throw Error("trajectory and network dimensions differ");
  double balance = 0.0;
  double negativity = 0.0;
  double workload_gap = 0.0;
  double allocation_drop = 0.0;
  double idleness_drop = 0.0;
  double complementarity = 0.0;

  const Eigen::VectorXd& q0 = traj.levels().front();
  const Eigen::MatrixXd drift = (spec.routing.transpose() -
                                 Eigen::MatrixXd::Identity(spec.num_classes, spec.num_classes)) *
                                spec.service_rates.asDiagonal();
  const Eigen::MatrixXd to_workload = spec.constituency * spec.service_rates.cwiseInverse().asDiagonal();

  auto check_point = [&](double t) {
    const Eigen::VectorXd q = traj.level_at(t);
    const Eigen::VectorXd alloc = traj.allocation_at(t);
    balance = std::max(balance, norm1(q - q0 - spec.arrival_rates * t - drift * alloc));
    negativity = std::max(negativity, std::max(0.0, -q.minCoeff()));
    const Eigen::VectorXd arrivals =
        spec.arrival_rates * t +
        spec.routing.transpose() * spec.service_rates.cwiseProduct(alloc);
    const Eigen::VectorXd from_arrivals = to_workload * (q0 + arrivals) - spec.constituency * alloc;
    workload_gap = std::max(workload_gap, norm1(from_arrivals - to_workload * q));
  };

  const auto& times = traj.times();
  for (std::size_t i = 0; i < traj.num_breakpoints(); ++i) check_point(times[i]);
  for (std::size_t i = 0; i < traj.num_segments(); ++i) {
    const double a = times[i];
    const double b = times[i + 1];
    check_point(0.5 * (a + b));
    const Eigen::VectorXd& r = traj.rates()[i];
    allocation_drop = std::max(allocation_drop, std::max(0.0, -r.minCoeff()));
    const Eigen::VectorXd idle_rate = Eigen::VectorXd::Ones(spec.num_stations) - spec.constituency * r;
    idleness_drop = std::max(idleness_drop, std::max(0.0, -idle_rate.minCoeff()));
    const Eigen::VectorXd wa = to_workload * traj.levels()[i];
    const Eigen::VectorXd wb = to_workload * traj.levels()[i + 1];
    for (int j = 0; j < spec.num_stations; ++j) {
      complementarity += std::max(0.0, idle_rate[j]) * (b - a) * 0.5 * (wa[j] + wb[j]);
    }
  }

  FluidReport report;
  report.tolerance = tol;
  auto add = [&](const char* name, double residual) {
    report.checks.push_back({name, residual, residual <= tol});
  };
  add(fluid_check::kBalance, balance);
  add(fluid_check::kNonnegativeLevel, negativity);
  add(fluid_check::kAllocationNondecreasing, allocation_drop);
  add(fluid_check::kIdlenessNondecreasing, idleness_drop);
  add(fluid_check::kWorkload, workload_gap);
  add(fluid_check::kComplementarity, complementarity);
  return report;
}

FluidTrajectory scale(const FluidTrajectory& traj, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error("scale factor must be positive");
  std::vector<double> times;
  std::vector<Eigen::VectorXd> levels;
  for (std::size_t i = 0; i < traj.num_breakpoints(); ++i) {
    times.push_back(traj.times()[i] / r);
    levels.push_back(traj.levels()[i] / r);
  }
  std::optional<double> empty;
  if (traj.empty_time()) empty = *traj.empty_time() / r;
  return {std::move(times), std::move(levels), traj.rates(), empty};
}

FluidTrajectory shift(const FluidTrajectory& traj, double s) {
  if (!(s >= 0.0) || s > traj.horizon()) {
    throw Error("shift " + fmt(s) + " outside trajectory span [0, " + fmt(traj.horizon()) + "]");
  }
  std::vector<double> times{0.0};
  std::vector<Eigen::VectorXd> levels{traj.level_at(s)};
  std::vector<Eigen::VectorXd> rates;
  for (std::size_t i = 0; i < traj.num_segments(); ++i) {
    const double b = traj.times()[i + 1];
    if (b <= s) continue;
    rates.push_back(traj.rates()[i]);
    times.push_back(b - s);
    levels.push_back(traj.levels()[i + 1]);
  }
  std::optional<double> empty;
  if (traj.empty_time()) empty = std::max(0.0, *traj.empty_time() - s);
  return {std::move(times), std::move(levels), std::move(rates), empty};
}

FluidTrajectory concatenate(const FluidTrajectory& first, const FluidTrajectory& second,
                            double t_star) {
  if (!(t_star >= 0.0) || t_star > first.horizon()) {
    throw Error("concatenation time " + fmt(t_star) + " outside first trajectory span");
  }
  const Eigen::VectorXd joint = first.level_at(t_star);
  if (joint.size() != second.levels().front().size()) {
    throw Error("concatenated trajectories have different class counts");
  }
  const double mismatch = norm1(joint - second.levels().front());
  if (mismatch > 1e-9) {
    throw Error("concatenation endpoints differ by " + fmt(mismatch) + " (limit 1e-9)");
  }
  std::vector<double> times{0.0};
  std::vector<Eigen::VectorXd> levels{first.levels().front()};
  std::vector<Eigen::VectorXd> rates;
  for (std::size_t i = 0; i < first.num_segments(); ++i) {
    const double a = first.times()[i];
    if (a >= t_star) break;
    const double b = std::min(first.times()[i + 1], t_star);
    rates.push_back(first.rates()[i]);
    times.push_back(b);
    levels.push_back(b == t_star ? joint : first.levels()[i + 1]);
  }
  for (std::size_t i = 0; i < second.num_segments(); ++i) {
    rates.push_back(second.rates()[i]);
    times.push_back(t_star + second.times()[i + 1]);
    levels.push_back(second.levels()[i + 1]);
  }
  std::optional<double> empty;
  if (second.empty_time()) {
    empty = t_star + *second.empty_time();
    if (*second.empty_time() == 0.0 && first.empty_time() && *first.empty_time() <= t_star) {
      empty = first.empty_time();
    }
  }
  return {std::move(times), std::move(levels), std::move(rates), empty};
}

std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::kStable: return "STABLE";
    case StabilityVerdict::kDiverging: return "DIVERGING";
    case StabilityVerdict::kInconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::vector<Eigen::VectorXd> coordinate_directions(int num_classes) {
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < num_classes; ++k) out.push_back(Eigen::VectorXd::Unit(num_classes, k));
  return out;
}

StabilityProbe stability_probe(const FluidSpec& spec, const std::vector<Eigen::VectorXd>& directions,
                               double tau_cap) {
  if (directions.empty()) throw Error("stability probe needs at least one direction");
  for (const auto& d : directions) {
    if (d.size() != spec.num_classes) throw Error("probe direction has wrong dimension");
    if (d.minCoeff() < 0.0 || std::abs(d.sum() - 1.0) > 1e-9) {
      throw Error("probe directions must be nonnegative with unit 1-norm");
    }
  }
  StabilityProbe probe;
  probe.directions.resize(directions.size());
  parallel_for(directions.size(), [&](std::size_t i) {
    const FluidTrajectory traj = fluid_trajectory(spec, directions[i], tau_cap);
    DirectionResult& out = probe.directions[i];
    out.direction = directions[i];
    out.empty_time = traj.empty_time();
    out.final_norm = traj.levels().back().sum();
    std::vector<double> grid(kProbeGrid);
    std::vector<double> norms(kProbeGrid);
    for (int g = 0; g < kProbeGrid; ++g) {
      const double t = 0.5 * tau_cap + 0.5 * tau_cap * g / (kProbeGrid - 1);
      grid[idx(g)] = t;
      norms[idx(g)] = traj.level_at(t).sum();
    }
    out.slope = least_squares(grid, norms).slope;
  });
  bool all_empty = true;
  for (const auto& d : probe.directions) {
    probe.max_slope = std::max(probe.max_slope, d.slope);
    if (d.empty_time) {
      probe.tau_hat = std::max(probe.tau_hat, *d.empty_time);
    } else {
      all_empty = false;
    }
  }
  if (all_empty) {
    probe.verdict = StabilityVerdict::kStable;
  } else if (probe.max_slope > kDivergenceSlope) {
    probe.verdict = StabilityVerdict::kDiverging;
    probe.tau_hat = 0.0;
  } else {
    probe.tau_hat = 0.0;
  }
  return probe;
}

double lipschitz_bound(const FluidSpec& spec) {
  double row_max = 0.0;
  for (int k = 0; k < spec.num_classes; ++k) row_max = std::max(row_max, spec.routing.row(k).sum());
  std::vector<double> station_max(idx(spec.num_stations), 0.0);
  for (int k = 0; k < spec.num_classes; ++k) {
    auto& m = station_max[idx(spec.station[idx(k)])];
    m = std::max(m, spec.service_rates[k]);
  }
  const double capacity = std::accumulate(station_max.begin(), station_max.end(), 0.0);
  return spec.arrival_rates.sum() + (1.0 + row_max) * capacity;
}

LipschitzReport lipschitz_check(const FluidTrajectory& traj, double bound) {
  LipschitzReport report;
  report.bound = bound;
  for (std::size_t i = 0; i < traj.num_segments(); ++i) {
    report.max_slope = std::max(report.max_slope, norm1(traj.slope(i)));
  }
  return report;
}

std::string to_csv(const FluidTrajectory& traj, const FluidSpec& spec) {
  const int K = spec.num_classes;
  const int J = spec.num_stations;
  std::string out = "time";
  for (int k = 1; k <= K; ++k) out += ",Q_" + std::to_string(k);
  for (int k = 1; k <= K; ++k) out += ",Tdot_" + std::to_string(k);
  for (int j = 1; j <= J; ++j) out += ",W_" + std::to_string(j);
  for (int j = 1; j <= J; ++j) out += ",I_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < traj.num_breakpoints(); ++i) {
    const double t = traj.times()[i];
    const Eigen::VectorXd& q = traj.levels()[i];
    const Eigen::VectorXd rate = traj.num_segments() == 0
                                     ? Eigen::VectorXd::Zero(K)
                                     : traj.rates()[std::min(i, traj.num_segments() - 1)];
    const Eigen::VectorXd w = workload(spec, q);
    const Eigen::VectorXd idle = idleness(spec, traj, t);
    out += fmt(t);
    for (int k = 0; k < K; ++k) out += "," + fmt(q[k]);
    for (int k = 0; k < K; ++k) out += "," + fmt(rate[k]);
    for (int j = 0; j < J; ++j) out += "," + fmt(w[j]);
    for (int j = 0; j < J; ++j) out += "," + fmt(idle[j]);
    out += '\n';
  }
  return out;
}

}  // namespace mcqn
