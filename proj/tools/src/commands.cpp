#include <algorithm>
#include <cmath>
#include <limits>

#include "context.hpp"
#include "mcqn/estimators.hpp"
#include "mcqn/fluid.hpp"
#include "mcqn/json_io.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/random.hpp"
#include "mcqn/scaling.hpp"
#include "mcqn/simulator.hpp"

namespace mcqn::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxHorizon = 1e12;

// Seed streams per command, so adding a stage never shifts the others.
enum Stream : std::uint64_t { kInitial = 0, kRun = 1, kCalibrate = 2, kDrift = 3, kMartingale = 4, kReturn = 5 };

std::uint64_t stream(const Context& ctx, Stream s) { return substream_seed(ctx.seed(), s); }

SimState initial_state(const Context& ctx, const ValidatedSpec& spec) {
  if (ctx.has("initial_state")) {
    try {
      return parse_initial_state(ctx.document("initial_state").dump(), spec);
    } catch (const SpecError& e) {
      throw ConfigError(e.what());
    }
  }
  if (ctx.has("q0")) return fresh_state(spec, ctx.counts("q0", spec.num_classes()), stream(ctx, kInitial));
  return empty_state(spec, stream(ctx, kInitial));
}

LyapunovCandidate load_candidate(const Context& ctx, int num_classes) {
  try {
    auto v = parse_candidate(ctx.document("candidate").dump());
    if (v.num_classes() != num_classes) {
      throw ConfigError("candidate has " + std::to_string(v.num_classes()) + " classes, network has " +
                        std::to_string(num_classes));
    }
    return v;
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
}

json fluid_report_json(const FluidReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"residual", c.residual}, {"passed", c.passed}});
  }
  return {{"tolerance", report.tolerance}, {"checks", checks}};
}

void add_fluid_checks(Outcome& out, const FluidReport& report) {
  for (const auto& c : report.checks) {
    out.check("fluid " + c.name, c.passed, "residual " + format_number(c.residual));
  }
}

json probe_json(const StabilityProbe& probe) {
  json dirs = json::array();
  for (const auto& d : probe.directions) {
    dirs.push_back({{"direction", to_json(d.direction)},
                    {"empty_time", d.empty_time ? json(*d.empty_time) : json(nullptr)},
                    {"slope", d.slope},
                    {"final_norm", d.final_norm}});
  }
  return {{"verdict", to_string(probe.verdict)}, {"tau_hat", probe.tau_hat},
          {"max_slope", probe.max_slope}, {"directions", dirs}};
}

json drift_json(const FosterDrift& d) {
  return {{"w0", d.w0}, {"horizon", d.horizon}, {"value", to_json(d.value)},
          {"ratio", to_json(d.ratio)}, {"truncated", d.truncated}};
}

}  // namespace

Outcome run_simulate(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  const SimState x0 = initial_state(ctx, spec);
  SimOptions options;
  options.horizon_time = ctx.number("horizon_time", kInf, 0.0, kInf);
  options.horizon_events = ctx.count("horizon_events", 0, 0);
  options.event_cap = ctx.count("event_cap", 100'000'000, 1);
  if (!std::isfinite(options.horizon_time) && options.horizon_events == 0) {
    throw ConfigError("simulate needs \"horizon_time\" or \"horizon_events\"");
  }
  const SamplePath path = simulate(spec, x0, options, stream(ctx, kRun));

  std::vector<double> area(static_cast<std::size_t>(spec.num_classes()), 0.0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double until = i + 1 < path.size() ? path.time(i + 1) : path.end_time();
    const auto q = path.state(i).q;
    for (std::size_t k = 0; k < area.size(); ++k) area[k] += static_cast<double>(q[k]) * (until - path.time(i));
  }
  json averages = json::array();
  double total = 0.0;
  for (double a : area) {
    const double avg = path.end_time() > 0.0 ? a / path.end_time() : 0.0;
    averages.push_back(avg);
    total += avg;
  }
  const StateView last = path.state(path.size() - 1);

  Outcome out;
  out.check("event cap not reached", !path.truncated(),
            path.truncated() ? "stopped at the event cap of " + std::to_string(options.event_cap) : "");
  out.results = {{"events", path.size() - 1},
                 {"end_time", path.end_time()},
                 {"truncated", path.truncated()},
                 {"final_norm", state_norm(last)},
                 {"final_queues", std::vector<long long>(last.q.begin(), last.q.end())},
                 {"time_average_queue", averages},
                 {"time_average_total", total},
                 {"seeds", {{"initial", stream(ctx, kInitial)}, {"run", stream(ctx, kRun)}}}};
  ctx.write_csv("sample_path.csv", path.to_csv());
  ctx.write_text("initial_state.json", initial_state_to_json(x0) + "\n");
  out.summary.push_back("simulated " + std::to_string(path.size() - 1) + " events up to t=" +
                        format_number(path.end_time()));
  out.summary.push_back("time-average total queue " + format_number(total));
  return out;
}

Outcome run_fluid(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  FluidSpec fspec;
  try {
    fspec = FluidSpec::from(spec);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const Eigen::VectorXd q0 = ctx.vector("q0", spec.num_classes());
  const double horizon = ctx.number("horizon", 10.0, 1e-12, kMaxHorizon);
  const double tol = ctx.number("tolerance", 1e-9, 0.0, 1.0);
  if (spec.discipline().kind == DisciplineKind::kFifo) {
    throw ConfigError("fluid integration does not cover FIFO networks");
  }
  const FluidTrajectory traj = fluid_trajectory(fspec, q0, horizon);
  const FluidReport report = verify_fluid_solution(traj, fspec, tol);
  const LipschitzReport lip = lipschitz_check(traj, lipschitz_bound(fspec));

  Outcome out;
  add_fluid_checks(out, report);
  out.check("lipschitz bound", lip.passed(),
            "max slope " + format_number(lip.max_slope) + " vs bound " + format_number(lip.bound));
  out.results = {{"horizon", horizon},
                 {"segments", traj.num_segments()},
                 {"empty_time", traj.empty_time() ? json(*traj.empty_time()) : json(nullptr)},
                 {"final_level", to_json(traj.levels().back())},
                 {"verification", fluid_report_json(report)},
                 {"lipschitz", {{"bound", lip.bound}, {"max_slope", lip.max_slope}}}};
  ctx.write_csv("trajectory.csv", to_csv(traj, fspec));
  json traj_doc = json::parse(trajectory_to_json(traj));
  ctx.write_json("trajectory.json", std::move(traj_doc));
  if (traj.empty_time()) {
    out.summary.push_back("empty at t=" + format_number(*traj.empty_time()));
  } else {
    out.summary.push_back("not empty by t=" + format_number(horizon) + "; final ||Q|| = " +
                          format_number(traj.levels().back().sum()));
  }
  out.summary.push_back("fluid equation checks at tolerance " + format_number(tol) + ": " +
                        (report.passed() ? "all hold" : "violated"));
  return out;
}

Outcome run_verify(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  FluidSpec fspec;
  try {
    fspec = FluidSpec::from(spec);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const double tol = ctx.number("tolerance", 1e-9, 0.0, 1.0);
  std::optional<FluidTrajectory> traj;
  try {
    traj = parse_trajectory(ctx.document("trajectory").dump());
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  if (traj->num_classes() != spec.num_classes()) {
    throw ConfigError("trajectory dimension does not match the network");
  }
  const FluidReport report = verify_fluid_solution(*traj, fspec, tol);

  Outcome out;
  add_fluid_checks(out, report);
  out.results = {{"verification", fluid_report_json(report)}, {"findings", report.failures()}};
  if (report.passed()) {
    out.summary.push_back("trajectory satisfies every fluid equation check at tolerance " + format_number(tol));
  } else {
    for (const auto& name : report.failures()) out.summary.push_back("finding: " + name);
  }
  return out;
}

Outcome run_scaling(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  const int K = spec.num_classes();
  Eigen::VectorXd direction = ctx.has("direction") ? ctx.vector("direction", K)
                                                   : Eigen::VectorXd::Constant(K, 1.0 / K);
  if (!(direction.sum() > 0.0)) throw ConfigError("\"direction\" must have positive mass");
  direction /= direction.sum();
  const std::vector<double> schedule =
      ctx.has("schedule") ? ctx.numbers("schedule") : std::vector<double>{1e2, 1e3, 1e4};
  const double t_max = ctx.number("t_max", 3.0, 1e-9, kMaxHorizon);
  const std::size_t seeds = ctx.replications(100, 2);
  const std::uint64_t cap = ctx.count("event_cap", 100'000'000, 1);

  ScalingSequence seq;
  try {
    seq = make_scaling_sequence(spec, direction, schedule, stream(ctx, kInitial));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const ConvergenceTable table = convergence_experiment(spec, seq, t_max, seeds, stream(ctx, kRun), cap);

  Outcome out;
  std::size_t truncated = 0;
  json rows = json::array();
  for (const auto& row : table.rows) {
    truncated += row.truncated;
    rows.push_back({{"r_n", row.r}, {"seed_count", row.seed_count},
                    {"distance", to_json(row.distance)}, {"truncated", row.truncated}});
  }
  out.check("mean distance strictly decreasing", table.strictly_decreasing);
  out.check("no truncated runs", truncated == 0, std::to_string(truncated) + " truncated");
  if (ctx.has("final_threshold")) {
    const double bound = ctx.required_number("final_threshold", 0.0, kInf);
    const double last = table.rows.back().distance.mean;
    out.check("final mean distance below threshold", last < bound,
              format_number(last) + " vs " + format_number(bound));
  }
  out.results = {{"direction", to_json(direction)},
                 {"t_max", t_max},
                 {"residual_bound", seq.residual_bound},
                 {"rows", rows},
                 {"trend", {{"strictly_decreasing", table.strictly_decreasing},
                            {"log_log_slope", table.log_log_slope}}},
                 {"seeds", {{"sequence", stream(ctx, kInitial)}, {"runs", stream(ctx, kRun)}}}};
  ctx.write_csv("convergence.csv", to_csv(table));
  ctx.write_json("convergence.json", out.results);
  out.summary.push_back("scaled-path distance to the fluid path over [0, " + format_number(t_max) +
                        "], " + std::to_string(seeds) + " seeds per r_n");
  for (const auto& row : table.rows) {
    out.summary.push_back("  r_n=" + format_number(row.r) + " mean " + format_number(row.distance.mean) +
                          " [" + format_number(row.distance.ci_low) + ", " +
                          format_number(row.distance.ci_high) + "]");
  }
  out.summary.push_back("log-log slope " + format_number(table.log_log_slope));
  return out;
}

Outcome run_lyapunov_check(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  const FluidSpec fspec = FluidSpec::from(spec);
  if (spec.discipline().kind == DisciplineKind::kFifo) {
    throw ConfigError("fluid integration does not cover FIFO networks");
  }
  const LyapunovCandidate v = load_candidate(ctx, spec.num_classes());
  const std::size_t n = static_cast<std::size_t>(ctx.count("directions", 20, 1));
  const double horizon = ctx.number("horizon", 10.0, 1e-9, kMaxHorizon);
  const double tol = ctx.number("tolerance", 1e-9, 0.0, 1.0);

  std::vector<Eigen::VectorXd> dirs = coordinate_directions(spec.num_classes());
  for (auto& d : random_directions(spec.num_classes(), n, stream(ctx, kInitial))) dirs.push_back(std::move(d));

  std::vector<Eigen::VectorXd> grid;
  for (const auto& d : dirs) {
    for (double s : {0.1, 1.0, 10.0, 100.0}) grid.push_back(s * d);
  }
  const SandwichReport sandwich = sandwich_check(v, grid);

  std::vector<DriftReport> drifts(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) {
    drifts[i] = fluid_drift_check(v, v.w3(), fluid_trajectory(fspec, dirs[i], horizon), tol);
  });
  double slack = kInf;
  std::size_t worst = 0;
  json per_dir = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (drifts[i].slack < slack) {
      slack = drifts[i].slack;
      worst = i;
    }
    per_dir.push_back({{"direction", to_json(dirs[i])}, {"slack", drifts[i].slack},
                       {"worst_s", drifts[i].worst_s}, {"worst_t", drifts[i].worst_t},
                       {"passed", drifts[i].passed}});
  }
  const bool drift_ok = std::all_of(drifts.begin(), drifts.end(), [](const auto& d) { return d.passed; });

  Outcome out;
  out.check("envelope sandwich", sandwich.passed,
            "margins " + format_number(sandwich.lower_margin) + ", " + format_number(sandwich.upper_margin));
  out.check("fluid decay along sampled paths", drift_ok, "min slack " + format_number(slack));
  out.results = {{"candidate", json::parse(candidate_to_json(v))},
                 {"sandwich", {{"lower_margin", sandwich.lower_margin},
                               {"upper_margin", sandwich.upper_margin},
                               {"grid_points", grid.size()}}},
                 {"drift", {{"min_slack", slack}, {"worst_direction", worst}, {"horizon", horizon},
                            {"tolerance", tol}, {"directions", per_dir}}},
                 {"seeds", {{"directions", stream(ctx, kInitial)}}}};
  out.summary.push_back("envelope sandwich on " + std::to_string(grid.size()) + " points: " +
                        (sandwich.passed ? "holds" : "violated"));
  out.summary.push_back("decay check along " + std::to_string(dirs.size()) + " fluid paths: " +
                        (drift_ok ? "holds" : "violated") + ", min slack " + format_number(slack));
  return out;
}

Outcome run_synthesize(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  if (spec.discipline().kind == DisciplineKind::kFifo) {
    throw ConfigError("certificate synthesis does not cover FIFO networks");
  }
  if (spec.num_classes() > 20) throw ConfigError("certificate synthesis is limited to 20 classes");
  const std::size_t n = static_cast<std::size_t>(ctx.count("directions", 20, 1));
  const Certificate cert = synthesize_linear_certificate(FluidSpec::from(spec), stream(ctx, kInitial), n);

  Outcome out;
  out.check("linear certificate feasible", cert.feasible);
  if (cert.feasible) {
    out.check("certificate re-verified on random directions", cert.verified,
              "slack " + format_number(cert.verification_slack));
  }
  out.results = {{"feasible", cert.feasible},
                 {"drift_vectors", cert.drifts},
                 {"seeds", {{"directions", stream(ctx, kInitial)}}}};
  if (cert.feasible) {
    out.results["xi"] = to_json(cert.xi);
    out.results["gamma"] = cert.gamma;
    out.results["verified"] = cert.verified;
    out.results["verification_slack"] = cert.verification_slack;
    out.results["verification_directions"] = cert.verification_directions;
    out.results["candidate"] = json::parse(candidate_to_json(*cert.candidate));
    ctx.write_text("candidate.json", candidate_to_json(*cert.candidate) + "\n");
    out.summary.push_back("FEASIBLE: linear certificate with decay rate " + format_number(cert.gamma));
  } else {
    out.summary.push_back("INFEASIBLE: no weighted linear certificate decreases in every regime");
  }
  return out;
}

Outcome run_foster(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  const int K = spec.num_classes();
  if (spec.discipline().kind == DisciplineKind::kFifo) {
    throw ConfigError("foster probes need a fluid model; FIFO is not covered");
  }
  const FluidSpec fspec = FluidSpec::from(spec);
  const std::size_t reps = ctx.replications(1000, 100);
  const std::size_t steps = static_cast<std::size_t>(ctx.count("steps", 10, 1));
  const double delta = ctx.number("delta", 0.1, 0.0, kMaxHorizon);
  const double target = ctx.number("target", 0.5, 1e-6, 1.0 - 1e-6);

  Outcome out;
  std::optional<LyapunovCandidate> candidate;
  if (ctx.has("candidate")) {
    candidate = load_candidate(ctx, K);
  } else {
    const Certificate cert = synthesize_linear_certificate(fspec, stream(ctx, kInitial));
    out.check("candidate available", cert.feasible, "synthesized when none is configured");
    if (!cert.feasible) {
      out.summary.push_back("no candidate configured and synthesis is infeasible");
      return out;
    }
    candidate = *cert.candidate;
  }
  const LyapunovCandidate& v = *candidate;

  SimState x;
  if (ctx.has("initial_state")) {
    x = initial_state(ctx, spec);
  } else {
    x = fresh_state(spec, ctx.counts("state", K), stream(ctx, kInitial));
  }

  const bool given = ctx.has("c") && ctx.has("epsilon") && ctx.has("kappa");
  if (!given && (ctx.has("c") || ctx.has("epsilon") || ctx.has("kappa"))) {
    throw ConfigError("give all of \"c\", \"epsilon\", \"kappa\" or none of them");
  }
  double c = 0.0, epsilon = 0.0, kappa = 0.0;
  json calibration = nullptr;
  if (given) {
    c = ctx.required_number("c", 1e-12, kInf);
    epsilon = ctx.required_number("epsilon", 1e-12, 1.0);
    kappa = ctx.required_number("kappa", 0.0, kInf);
  } else {
    double tau_hat = ctx.number("tau_hat", 0.0, 0.0, kMaxHorizon);
    if (tau_hat == 0.0) {
      const StabilityProbe probe = stability_probe(fspec, coordinate_directions(K), ctx.number("tau_cap", 1000.0, 1e-9, kMaxHorizon));
      out.check("fluid model stable", probe.verdict == StabilityVerdict::kStable, to_string(probe.verdict));
      if (probe.verdict != StabilityVerdict::kStable) {
        out.results["stability_probe"] = probe_json(probe);
        out.summary.push_back("fluid probe is " + to_string(probe.verdict) + "; nothing to calibrate");
        return out;
      }
      tau_hat = probe.tau_hat;
    }
    std::vector<double> levels = ctx.has("probe_levels") ? ctx.numbers("probe_levels")
                                                          : std::vector<double>{1, 2, 5, 10, 20, 50, 100};
    const auto q = x.queue_lengths();
    const double mass = static_cast<double>(x.total_customers());
    std::vector<SimState> probes;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i] > 0.0)) throw ConfigError("\"probe_levels\" must be positive");
      std::vector<long long> counts(static_cast<std::size_t>(K), 0);
      for (int k = 0; k < K; ++k) {
        const double share = mass > 0.0 ? static_cast<double>(q[static_cast<std::size_t>(k)]) / mass : 1.0 / K;
        counts[static_cast<std::size_t>(k)] = std::llround(levels[i] * share);
      }
      probes.push_back(fresh_state(spec, counts, substream_seed(stream(ctx, kCalibrate), i)));
    }
    const std::size_t cal_reps = static_cast<std::size_t>(ctx.count("calibration_replications", 400, 100));
    const Calibration cal = calibrate(spec, v, tau_hat, probes, cal_reps, stream(ctx, kCalibrate), target);
    out.check("calibration found a drift level", cal.found);
    json lv = json::array();
    for (const auto& l : cal.levels) lv.push_back({{"w", l.w}, {"drift", drift_json(l.drift)}});
    calibration = {{"tau_hat", tau_hat}, {"target", target}, {"found", cal.found},
                   {"min_probe_w", cal.delta}, {"levels", lv}, {"replications", cal_reps}};
    c = cal.c;
    epsilon = cal.epsilon;
    kappa = cal.kappa;
    if (!cal.found) {
      out.results["calibration"] = calibration;
      out.summary.push_back("calibration failed: no probed level meets drift ratio " + format_number(target));
      return out;
    }
  }

  const FosterDrift drift = foster_drift_estimate(spec, x, v, c, reps, stream(ctx, kDrift));
  const SupermartingaleProbe sm =
      supermartingale_probe(spec, x, v, c, epsilon, kappa, steps, reps, stream(ctx, kMartingale));
  const ReturnTimeCheck rt = return_time_check(spec, x, v, epsilon, kappa, delta, reps, stream(ctx, kReturn));

  out.check("sampled drift ratio within 1 - epsilon", drift.ratio.ci_high <= 1.0 - epsilon,
            "CI upper " + format_number(drift.ratio.ci_high));
  out.check("stopped process nonincreasing", !sm.violated);
  out.check("return time bound", rt.verdict == BoundVerdict::kHolds, to_string(rt.verdict));

  json sm_steps = json::array();
  for (const auto& s : sm.steps) {
    sm_steps.push_back({{"n", s.n}, {"value", to_json(s.value)}, {"increment", to_json(s.increment)},
                        {"stopped", s.stopped}});
  }
  out.results = {
      {"parameters", {{"c", c}, {"epsilon", epsilon}, {"kappa", kappa}, {"delta", delta},
                      {"replications", reps}, {"steps", steps}, {"calibrated", !given}}},
      {"candidate", json::parse(candidate_to_json(v))},
      {"calibration", calibration},
      {"drift", drift_json(drift)},
      {"supermartingale", {{"m0", sm.m0}, {"violated", sm.violated}, {"truncated", sm.truncated},
                           {"steps", sm_steps}}},
      {"return_time", {{"w0", rt.w0}, {"bound", rt.bound}, {"verdict", to_string(rt.verdict)},
                       {"time", to_json(rt.estimate.time)}, {"reached", rt.estimate.reached},
                       {"not_reached", rt.estimate.not_reached}}},
      {"seeds", {{"initial", stream(ctx, kInitial)}, {"calibration", stream(ctx, kCalibrate)},
                 {"drift", stream(ctx, kDrift)}, {"supermartingale", stream(ctx, kMartingale)},
                 {"return_time", stream(ctx, kReturn)}}}};
  out.summary.push_back("c=" + format_number(c) + " epsilon=" + format_number(epsilon) +
                        " kappa=" + format_number(kappa) + " W(x)=" + format_number(drift.w0));
  out.summary.push_back("sampled drift ratio " + format_number(drift.ratio.mean) + " [" +
                        format_number(drift.ratio.ci_low) + ", " + format_number(drift.ratio.ci_high) + "]");
  out.summary.push_back(std::string("stopped process check: ") + (sm.violated ? "increase detected" : "nonincreasing"));
  out.summary.push_back("return time " + format_number(rt.estimate.time.mean) + " (CI upper " +
                        format_number(rt.estimate.time.ci_high) + ") vs bound " + format_number(rt.bound) +
                        ": " + to_string(rt.verdict));
  return out;
}

Outcome run_report(const Context& ctx) {
  const ValidatedSpec spec = ctx.network();
  const int K = spec.num_classes();
  const Eigen::VectorXd lambda = effective_arrival_rates(spec);
  const Eigen::VectorXd rho = traffic_intensity(spec);
  const SpectralRadius sr = spectral_radius(spec.routing());
  json warnings = json::array();
  for (const auto& f : spec.warnings()) warnings.push_back({{"code", f.code}, {"message", f.message}});

  Outcome out;
  out.results = {{"classes", K},
                 {"stations", spec.num_stations()},
                 {"discipline", to_string(spec.discipline().kind)},
                 {"effective_arrival_rates", to_json(lambda)},
                 {"traffic_intensity", to_json(rho)},
                 {"spectral_radius", sr.value},
                 {"warnings", warnings}};
  out.summary.push_back("traffic intensity max " + format_number(rho.maxCoeff()));
  for (const auto& f : spec.warnings()) out.summary.push_back("warning: " + f.message);
  if (spec.discipline().kind != DisciplineKind::kFifo) {
    const FluidSpec fspec = FluidSpec::from(spec);
    std::vector<Eigen::VectorXd> dirs = coordinate_directions(K);
    const std::size_t extra = static_cast<std::size_t>(ctx.count("directions", 0, 0));
    for (auto& d : random_directions(K, extra, stream(ctx, kInitial))) dirs.push_back(std::move(d));
    const StabilityProbe probe = stability_probe(fspec, dirs, ctx.number("tau_cap", 1000.0, 1e-9, kMaxHorizon));
    out.results["stability_probe"] = probe_json(probe);
    out.results["lipschitz_bound"] = lipschitz_bound(fspec);
    std::string line = "fluid probe: " + to_string(probe.verdict);
    if (probe.verdict == StabilityVerdict::kStable) line += ", empties by " + format_number(probe.tau_hat);
    if (probe.verdict == StabilityVerdict::kDiverging) line += ", growth slope " + format_number(probe.max_slope);
    out.summary.push_back(line);
  }
  return out;
}

}  // namespace mcqn::cli
