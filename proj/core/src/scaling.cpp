#include "mcqn/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mcqn/estimators.hpp"
#include "mcqn/random.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

namespace {

double residual_sum(const SimState& s) {
  double total = 0.0;
  for (double u : s.u) total += u;
  for (double v : s.v) total += v;
  return total;
}

double residual_sum(const Snapshot& s) {
  double total = 0.0;
  for (double u : s.u) total += u;
  for (double v : s.v) total += v;
  return total;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ScalingSequence make_scaling_sequence(const ValidatedSpec& spec, const Eigen::VectorXd& direction,
                                      const std::vector<double>& schedule, std::uint64_t seed) {
  const int K = spec.num_classes();
  if (direction.size() != K) throw Error("scaling direction needs one entry per class");
  if (direction.minCoeff() < 0.0 || std::abs(direction.sum() - 1.0) > 1e-9) {
    throw Error("scaling direction must be nonnegative with unit 1-norm");
  }
  if (schedule.empty()) throw Error("scaling schedule is empty");
  for (std::size_t n = 0; n < schedule.size(); ++n) {
    if (!(schedule[n] > 0.0) || !std::isfinite(schedule[n])) throw Error("scaling factors must be positive");
    if (n > 0 && !(schedule[n] > schedule[n - 1])) throw Error("scaling schedule must be strictly increasing");
  }

  ScalingSequence seq;
  seq.direction = direction;
  seq.seed = seed;
  // The residual pool: one draw per class, reused at every scale.
  const SimState pool = fresh_state(spec, std::vector<long long>(static_cast<std::size_t>(K), 1), seed);
  seq.residual_bound = residual_sum(pool);

  for (double r : schedule) {
    std::vector<long long> counts(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) counts[static_cast<std::size_t>(k)] = std::llround(r * direction[k]);
    ScalingPoint p;
    p.r = r;
    p.state = fresh_state(spec, counts, seed);
    double q = 0.0;
    for (long long c : counts) q += static_cast<double>(c);
    p.queue_ratio = q / r;
    p.residual_ratio = residual_sum(p.state) / r;
    seq.points.push_back(std::move(p));
  }

  // Certification of the three scaling conditions.
  for (const auto& p : seq.points) {
    if (std::abs(p.queue_ratio - 1.0) > 0.5 * K / p.r + 1e-12) {
      throw Error("scaled queue ratio " + fmt(p.queue_ratio) + " strays from the direction norm");
    }
    if (p.residual_ratio > seq.residual_bound / p.r * (1.0 + 1e-12)) {
      throw Error("residual ratio exceeds the pool bound at r=" + fmt(p.r));
    }
  }
  return seq;
}

ScaledPath scaled_path(const ValidatedSpec& spec, const SimState& x_n, double r_n, double t_max,
                       std::uint64_t seed, std::uint64_t event_cap) {
  if (!(t_max > 0.0)) throw Error("t_max must be positive");
  if (!(r_n > 0.0)) throw Error("scaling factor must be positive");
  ScaledPath path;
  path.r = r_n;
  path.grid.resize(kScaledGridPoints);
  std::vector<double> raw(kScaledGridPoints);
  for (int i = 0; i < kScaledGridPoints; ++i) {
    path.grid[static_cast<std::size_t>(i)] = t_max * i / (kScaledGridPoints - 1);
    raw[static_cast<std::size_t>(i)] = x_n.clock + r_n * path.grid[static_cast<std::size_t>(i)];
  }
  const std::vector<Snapshot> snaps = sample_on_grid(spec, x_n, raw, seed, event_cap);
  path.truncated = snaps.size() < raw.size();
  path.grid.resize(snaps.size());
  for (const auto& s : snaps) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(s.q.size()));
    for (std::size_t k = 0; k < s.q.size(); ++k) q[static_cast<Eigen::Index>(k)] = static_cast<double>(s.q[k]) / r_n;
    path.queues.push_back(std::move(q));
    path.residuals.push_back(residual_sum(s) / r_n);
  }
  return path;
}

double uoc_distance(const ScaledPath& path, const FluidTrajectory& traj, double t) {
  if (path.grid.empty() || t > path.grid.back() * (1.0 + 1e-12)) {
    throw Error("u.o.c. time " + fmt(t) + " beyond the scaled path grid");
  }
  if (t > traj.horizon() * (1.0 + 1e-12)) {
    throw Error("u.o.c. time " + fmt(t) + " beyond the fluid trajectory horizon");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < path.grid.size() && path.grid[i] <= t; ++i) {
    const double gap = (path.queues[i] - traj.level_at(path.grid[i])).cwiseAbs().sum() + path.residuals[i];
    worst = std::max(worst, gap);
  }
  return worst;
}

ConvergenceTable convergence_experiment(const ValidatedSpec& spec, const ScalingSequence& seq,
                                        double t_max, std::size_t seeds, std::uint64_t seed,
                                        std::uint64_t event_cap) {
  if (seeds == 0) throw Error("convergence experiment needs at least one seed");
  const FluidSpec fluid = FluidSpec::from(spec);
  const FluidTrajectory target = fluid_trajectory(fluid, seq.direction, t_max);
  const std::size_t levels = seq.points.size();
  std::vector<double> distances(levels * seeds);
  std::vector<char> truncated(levels * seeds, 0);
  parallel_for(levels * seeds, [&](std::size_t cell) {
    const std::size_t n = cell / seeds;
    const std::size_t s = cell % seeds;
    const auto& point = seq.points[n];
    const ScaledPath path = scaled_path(spec, point.state, point.r, t_max,
                                        replication_seed(substream_seed(seed, n), s), event_cap);
    truncated[cell] = path.truncated;
    distances[cell] = path.truncated ? std::numeric_limits<double>::quiet_NaN()
                                     : uoc_distance(path, target, t_max);
  });

  ConvergenceTable table;
  table.t_max = t_max;
  std::vector<double> log_r;
  std::vector<double> log_d;
  for (std::size_t n = 0; n < levels; ++n) {
    ConvergenceRow row;
    row.r = seq.points[n].r;
    std::vector<double> kept;
    for (std::size_t s = 0; s < seeds; ++s) {
      if (truncated[n * seeds + s]) {
        ++row.truncated;
      } else {
        kept.push_back(distances[n * seeds + s]);
      }
    }
    row.seed_count = kept.size();
    row.distance = estimate_mean(kept);
    if (row.seed_count > 0 && row.distance.mean > 0.0) {
      log_r.push_back(std::log(row.r));
      log_d.push_back(std::log(row.distance.mean));
    }
    table.rows.push_back(std::move(row));
  }
  table.strictly_decreasing = !table.rows.empty();
  for (std::size_t n = 1; n < table.rows.size(); ++n) {
    if (!(table.rows[n].distance.mean < table.rows[n - 1].distance.mean)) table.strictly_decreasing = false;
  }
  table.log_log_slope = least_squares(log_r, log_d).slope;
  return table;
}

std::string to_csv(const ConvergenceTable& table) {
  std::string out = "r_n,seed_count,mean_dist,ci_low,ci_high\n";
  for (const auto& row : table.rows) {
    out += fmt(row.r) + "," + std::to_string(row.seed_count) + "," + fmt(row.distance.mean) + "," +
           fmt(row.distance.ci_low) + "," + fmt(row.distance.ci_high) + "\n";
  }
  return out;
}

}  // namespace mcqn
