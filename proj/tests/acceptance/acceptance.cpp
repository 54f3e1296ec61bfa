// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Each criterion also carries a wall-clock budget that counts toward its verdict.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mcqn/estimators.hpp"
#include "mcqn/fluid.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/presets.hpp"
#include "mcqn/scaling.hpp"
#include "mcqn/simulator.hpp"
#include "mcqn/stats.hpp"
#include "oracles/oracles.hpp"

using namespace mcqn;

namespace {

struct Verdict {
  bool passed = true;
  std::ostringstream notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      notes << " [failed: " << what << "]";
    }
  }
};

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LyapunovCandidate q_squared() {
  return LyapunovCandidate::weighted_linear_squared(vec({1.0}), {1, 2}, {1, 2}, {1, 1});
}

bool fluid_ok(const FluidTrajectory& traj, const FluidSpec& spec) {
  return verify_fluid_solution(traj, spec, 1e-9).passed();
}

// Calibration shared by criteria 7 and 8: probes along q in {1..100}, c from
// the fluid emptying time.
Calibration mm1_calibration(const ValidatedSpec& spec) {
  const auto probe = stability_probe(FluidSpec::from(spec), coordinate_directions(1), 100.0);
  std::vector<SimState> probes;
  for (long long level : {1, 2, 5, 10, 20, 50, 100}) {
    probes.push_back(fresh_state(spec, std::vector<long long>{level}, 500 + static_cast<std::uint64_t>(level)));
  }
  return calibrate(spec, q_squared(), probe.tau_hat, probes, 400, 501);
}

void criterion1(Verdict& v) {
  const ValidatedSpec spec = preset("mm1");
  const double target = oracle::mm1_mean_queue(0.5, 1.0);
  std::vector<double> averages(10);
  parallel_for(10, [&](std::size_t s) {
    SimOptions opt;
    opt.horizon_events = 1'000'000;
    averages[s] = time_average_queue(spec, empty_state(spec, replication_seed(1, s)), opt,
                                     replication_seed(2, s)).total;
  });
  double worst = 0.0, mean = 0.0;
  for (double a : averages) {
    worst = std::max(worst, std::abs(a - target));
    mean += a / 10.0;
  }
  v.notes << "mean L " << mean << ", worst seed off by " << worst;
  v.require(worst <= 0.05, "every seed within 0.05 of rho/(1-rho)");
}

void criterion2(Verdict& v) {
  const FluidSpec spec = FluidSpec::from(preset("mm1"));
  const auto traj = fluid_trajectory(spec, vec({1.0}), 10.0);
  const auto report = verify_fluid_solution(traj, spec, 1e-9);
  double worst = 0.0;
  for (const auto& c : report.checks) worst = std::max(worst, c.residual);
  v.notes << "empty at " << (traj.empty_time() ? *traj.empty_time() : -1.0) << ", max residual " << worst;
  v.require(traj.empty_time() && std::abs(*traj.empty_time() - 2.0) <= 1e-9, "empties at 2.0");
  v.require(report.passed() && worst <= 1e-9, "residuals within 1e-9");
}

void criterion3(Verdict& v) {
  std::size_t checked = 0;
  for (const std::string name : {"mm1", "tandem", "single_station_priority", "rybko_stolyar_stable"}) {
    const FluidSpec spec = FluidSpec::from(preset(name));
    std::vector<Eigen::VectorXd> starts = coordinate_directions(spec.num_classes);
    starts.push_back(Eigen::VectorXd::Constant(spec.num_classes, 1.0 / spec.num_classes));
    for (const auto& q0 : starts) {
      const auto traj = fluid_trajectory(spec, q0, 10.0);
      v.require(fluid_ok(traj, spec), name + " base trajectory");
      for (double r : {0.5, 2.0, 10.0}) {
        v.require(fluid_ok(scale(traj, r), spec), name + " scale");
        ++checked;
      }
      for (double s : traj.times()) {
        v.require(fluid_ok(shift(traj, s), spec), name + " shift");
        ++checked;
      }
      for (std::size_t i = 1; i < traj.num_breakpoints(); i += std::max<std::size_t>(1, traj.num_breakpoints() / 5)) {
        const double cut = traj.times()[i];
        const auto head = fluid_trajectory(spec, q0, cut);
        const auto tail = fluid_trajectory(spec, head.levels().back(), 5.0);
        v.require(fluid_ok(concatenate(head, tail, cut), spec), name + " concatenate");
        ++checked;
      }
    }
  }
  v.notes << checked << " transformed trajectories verified";
}

void criterion4(Verdict& v) {
  const ValidatedSpec spec = preset("rybko_stolyar_unstable");
  const Eigen::VectorXd rho = traffic_intensity(spec);
  v.require(std::abs(rho[0] - 0.7) < 1e-12 && std::abs(rho[1] - 0.7) < 1e-12, "rho = (0.7, 0.7)");
  const auto probe = stability_probe(FluidSpec::from(spec), {vec({1, 0, 0, 0})}, 100.0);
  v.require(probe.verdict == StabilityVerdict::kDiverging && probe.max_slope > 0.0, "fluid probe diverges");

  Simulator sim(spec, fresh_state(spec, std::vector<long long>{10'000, 0, 0, 0}, 41), 42);
  std::vector<double> times, norms;
  while (sim.events() < 1'000'000) {
    sim.step();
    if (sim.events() % 1000 == 0) {
      times.push_back(sim.clock());
      norms.push_back(static_cast<double>(sim.state().total_customers()));
    }
  }
  const LinearFit fit = least_squares(times, norms);
  v.notes << "rho " << rho[0] << "/" << rho[1] << ", fluid slope " << probe.max_slope << ", simulated ||q|| "
          << norms.front() << " -> " << norms.back() << " slope " << fit.slope << " R^2 " << fit.r_squared;
  v.require(fit.slope > 0.0 && fit.r_squared > 0.9, "simulated queue grows linearly");
}

void criterion5(Verdict& v) {
  for (const std::string name : {"mm1", "tandem"}) {
    const FluidSpec spec = FluidSpec::from(preset(name));
    const auto probe = stability_probe(spec, coordinate_directions(spec.num_classes), 100.0);
    v.require(probe.verdict == StabilityVerdict::kStable && std::abs(probe.tau_hat - 2.0) <= 1e-9,
              name + " stable with tau 2");
    const auto cert = synthesize_linear_certificate(spec, 51);
    v.require(cert.feasible, name + " certificate feasible");
    if (!cert.feasible) continue;
    const auto& cand = *cert.candidate;
    double slack = 1e300;
    const double horizon = 1.5 * cert.xi.maxCoeff() / cert.gamma + 1.0;
    for (const auto& d : random_directions(spec.num_classes, 20, 52)) {
      const auto rep = fluid_drift_check(cand, cand.w3(), fluid_trajectory(spec, d, horizon), 1e-9);
      slack = std::min(slack, rep.slack);
      v.require(rep.passed, name + " drift check");
    }
    v.notes << name << ": tau " << probe.tau_hat << ", gamma " << cert.gamma << ", min slack " << slack << "; ";
    v.require(slack >= -1e-12, name + " nonnegative slack");
  }
}

void criterion6(Verdict& v) {
  const ValidatedSpec spec = preset("mm1");
  const auto seq = make_scaling_sequence(spec, vec({1.0}), {1e2, 1e3, 1e4}, 61);
  const auto table = convergence_experiment(spec, seq, 3.0, 100, 62);
  for (const auto& row : table.rows) v.notes << "r=" << row.r << ": " << row.distance.mean << "; ";
  v.notes << "log-log slope " << table.log_log_slope;
  v.require(table.strictly_decreasing, "strictly decreasing");
  v.require(table.rows.back().distance.mean < 0.05, "final mean below 0.05");
}

void criterion7(Verdict& v) {
  const ValidatedSpec spec = preset("mm1");
  const SimState x = fresh_state(spec, std::vector<long long>{100}, 71);
  const auto drift = foster_drift_estimate(spec, x, q_squared(), 2.0, 1000, 72);

  // Oracle run: birth-death chain over the same horizon, 10^4 replications,
  // memoryless residuals redrawn at the end.
  std::vector<double> ratios;
  for (std::uint64_t r = 0; r < 10'000; ++r) {
    const auto run = oracle::birth_death_mm1(0.5, 1.0, 100, 2.0 * drift.w0, ~0ULL, 7000 + r);
    std::mt19937_64 rng(90000 + r);
    std::exponential_distribution<double> arrival(0.5), service(1.0);
    const double w = static_cast<double>(run.final_queue) + arrival(rng) + (run.final_queue > 0 ? service(rng) : 0.0);
    ratios.push_back(w / drift.w0);
  }
  const auto ref = oracle::summarize(ratios);
  v.notes << "ratio " << drift.ratio.mean << " CI [" << drift.ratio.ci_low << ", " << drift.ratio.ci_high
          << "], oracle " << ref.mean << " +- " << ref.half_width;
  v.require(ref.mean + ref.half_width <= 0.6, "oracle supports the 0.6 tolerance");
  v.require(drift.ratio.ci_high <= 0.6, "drift ratio CI upper bound <= 0.6");

  const Calibration cal = mm1_calibration(spec);
  v.require(cal.found, "calibration found");
  const auto sm = supermartingale_probe(spec, x, q_squared(), cal.c, cal.epsilon, cal.kappa, 10, 1000, 73);
  v.notes << "; c " << cal.c << " eps " << cal.epsilon << " kappa " << cal.kappa << ", E[M] "
          << sm.steps.front().value.mean << " -> " << sm.steps.back().value.mean;
  v.require(!sm.violated, "stopped process nonincreasing within CI");
}

void criterion8(Verdict& v) {
  const ValidatedSpec spec = preset("mm1");
  const Calibration cal = mm1_calibration(spec);
  v.require(cal.found, "calibration found");
  const SimState x = fresh_state(spec, std::vector<long long>{50}, 81);
  const auto rt = return_time_check(spec, x, q_squared(), cal.epsilon, cal.kappa, 0.1, 1000, 82);
  v.notes << "E tau " << rt.estimate.time.mean << " CI upper " << rt.estimate.time.ci_high << " vs bound "
          << rt.bound << " (W " << rt.w0 << ", kappa " << cal.kappa << ", eps " << cal.epsilon << ")";
  v.require(rt.verdict == BoundVerdict::kHolds, "CI upper bound within max{W, kappa}/eps");
}

void criterion9(Verdict& v) {
  const std::vector<Discipline> extra = {
      {DisciplineKind::kFifo, {}}, {DisciplineKind::kHlpps, {}}, {DisciplineKind::kWorkConservingDefault, {}}};
  std::uint64_t checked = 0, runs = 0;
  bool deterministic = true;
  for (const auto& name : preset_names()) {
    std::vector<ValidatedSpec> variants = {preset(name)};
    for (const auto& d : extra) variants.push_back(variants.front().with_discipline(d));
    for (const auto& spec : variants) {
      ++runs;
      std::vector<long long> counts(static_cast<std::size_t>(spec.num_classes()), 5);
      const SimState x0 = fresh_state(spec, counts, 900 + runs);
      Simulator sim(spec, x0, 950 + runs);
      while (sim.events() < 100'000) {
        sim.step();
        const auto problems = check_state(spec, sim.state());
        ++checked;
        if (!problems.empty()) {
          v.require(false, name + "/" + to_string(spec.discipline().kind) + ": " + problems.front());
          break;
        }
        if (sim.state().total_customers() !=
            x0.total_customers() + static_cast<long long>(sim.arrivals()) - static_cast<long long>(sim.departures())) {
          v.require(false, name + " count balance");
          break;
        }
      }
      SimOptions opt;
      opt.horizon_events = 20'000;
      deterministic = deterministic && simulate(spec, x0, opt, 7).to_csv() == simulate(spec, x0, opt, 7).to_csv();
    }
  }
  v.notes << runs << " preset/discipline runs, " << checked << " event batches checked";
  v.require(deterministic, "byte-identical reruns");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<void(Verdict&)> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "M/M/1 stationary mean", 60, criterion1},
      {2, "fluid exactness", 1, criterion2},
      {3, "operator invariance", 10, criterion3},
      {4, "instability counterexample", 300, criterion4},
      {5, "stability and certificate", 30, criterion5},
      {6, "scaling convergence", 600, criterion6},
      {7, "sampled drift and stopped process", 300, criterion7},
      {8, "return-time bound", 300, criterion8},
      {9, "simulator invariants and determinism", 120, criterion9},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.require(seconds < c.budget_seconds, "runtime budget");
    failures += !v.passed;
    std::printf("%s criterion %d (%s) %.2fs: %s\n", v.passed ? "PASS" : "FAIL", c.id, c.title, seconds,
                v.notes.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
