#include "mcqn/lyapunov.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>
#include <random>

#include "mcqn/random.hpp"
#include "mcqn/simplex.hpp"

namespace mcqn {

namespace {

constexpr int kGaussPoints = 16;
constexpr double kSandwichTol = 1e-12;
constexpr double kFeasibleGamma = 1e-12;
constexpr int kMaxCertificateClasses = 20;
constexpr std::size_t kMaxDrifts = 2'000'000;

struct GaussRule {
  std::array<double, kGaussPoints> nodes{};
  std::array<double, kGaussPoints> weights{};
};

// Legendre roots by Newton iteration from the Chebyshev guesses.
const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    GaussRule r;
    const int n = kGaussPoints;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      r.nodes[static_cast<std::size_t>(i)] = x;
      r.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// Integral of w over [0, length] of a linear function running from a to b.
double integrate_linear(const EnvelopeFunction& w, double a, double b, double length) {
  if (length <= 0.0 || (a == 0.0 && b == 0.0)) return 0.0;
  const GaussRule& g = gauss_rule();
  double sum = 0.0;
  for (int i = 0; i < kGaussPoints; ++i) {
    const double s = 0.5 * (1.0 + g.nodes[static_cast<std::size_t>(i)]);
    sum += g.weights[static_cast<std::size_t>(i)] * w(std::max(0.0, a + (b - a) * s));
  }
  return 0.5 * length * sum;
}

void check_envelopes(const EnvelopeFunction& w1, const EnvelopeFunction& w2,
                     const EnvelopeFunction& w3) {
  if (!w1.valid() || !w2.valid() || !w3.valid()) {
    throw Error("envelope functions need c > 0 and p > 0");
  }
}

void check_positive_weights(const Eigen::VectorXd& xi) {
  if (xi.size() == 0) throw Error("candidate weights are empty");
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    if (!(xi[k] > 0.0) || !std::isfinite(xi[k])) throw Error("candidate weights must be positive");
  }
}

double sum_residuals(const StateView& x) {
  double total = 0.0;
  for (double u : x.u) total += u;
  for (double v : x.v) total += v;
  return total;
}

// Drift vectors of one emptiness pattern; proportional stations contribute one
// vector per choice of served class among their nonempty classes.
void pattern_drifts(const FluidSpec& spec, const RegimePattern& base,
                    std::vector<Eigen::VectorXd>& out) {
  if (!spec.proportional()) {
    out.push_back(level_drift(spec, regime_rates(spec, base)));
    return;
  }
  std::vector<std::vector<int>> choices(static_cast<std::size_t>(spec.num_stations));
  for (int k = 0; k < spec.num_classes; ++k) {
    if (base.nonempty[static_cast<std::size_t>(k)]) {
      choices[static_cast<std::size_t>(spec.station[static_cast<std::size_t>(k)])].push_back(k);
    }
  }
  std::vector<std::size_t> pick(choices.size(), 0);
  while (true) {
    RegimePattern p = base;
    p.weights = Eigen::VectorXd::Zero(spec.num_classes);
    for (std::size_t j = 0; j < choices.size(); ++j) {
      if (!choices[j].empty()) p.weights[choices[j][pick[j]]] = 1.0;
    }
    out.push_back(level_drift(spec, regime_rates(spec, p)));
    if (out.size() > kMaxDrifts) throw Error("too many regime drift vectors to enumerate");
    std::size_t j = 0;
    for (; j < choices.size(); ++j) {
      if (choices[j].empty()) continue;
      if (++pick[j] < choices[j].size()) break;
      pick[j] = 0;
    }
    if (j == choices.size()) return;
  }
}

}  // namespace

double EnvelopeFunction::operator()(double s) const { return c * std::pow(s, p); }

double EnvelopeFunction::inverse(double y) const { return std::pow(y / c, 1.0 / p); }

std::string to_string(CandidateForm form) {
  switch (form) {
    case CandidateForm::kWeightedLinearSquared: return "weighted_linear_squared";
    case CandidateForm::kWeightedQuadratic: return "weighted_quadratic";
    case CandidateForm::kMaxLinearSquared: return "max_linear_squared";
  }
  return "weighted_linear_squared";
}

std::optional<CandidateForm> parse_candidate_form(const std::string& name) {
  for (auto f : {CandidateForm::kWeightedLinearSquared, CandidateForm::kWeightedQuadratic,
                 CandidateForm::kMaxLinearSquared}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

LyapunovCandidate LyapunovCandidate::weighted_linear_squared(Eigen::VectorXd xi,
                                                             EnvelopeFunction w1,
                                                             EnvelopeFunction w2,
                                                             EnvelopeFunction w3) {
  check_positive_weights(xi);
  check_envelopes(w1, w2, w3);
  LyapunovCandidate v;
  v.form_ = CandidateForm::kWeightedLinearSquared;
  v.num_classes_ = static_cast<int>(xi.size());
  v.pieces_.push_back(std::move(xi));
  v.w1_ = w1;
  v.w2_ = w2;
  v.w3_ = w3;
  return v;
}

LyapunovCandidate LyapunovCandidate::weighted_quadratic(Eigen::MatrixXd a, EnvelopeFunction w1,
                                                        EnvelopeFunction w2, EnvelopeFunction w3) {
  if (a.rows() == 0 || a.rows() != a.cols()) throw Error("quadratic candidate needs a square matrix");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw Error("quadratic candidate matrix must be symmetric");
  }
  if (a.llt().info() != Eigen::Success) throw Error("quadratic candidate matrix must be positive definite");
  check_envelopes(w1, w2, w3);
  LyapunovCandidate v;
  v.form_ = CandidateForm::kWeightedQuadratic;
  v.num_classes_ = static_cast<int>(a.rows());
  v.pieces_.push_back(a.diagonal());
  v.matrix_ = std::move(a);
  v.w1_ = w1;
  v.w2_ = w2;
  v.w3_ = w3;
  return v;
}

LyapunovCandidate LyapunovCandidate::max_linear_squared(std::vector<Eigen::VectorXd> pieces,
                                                        EnvelopeFunction w1, EnvelopeFunction w2,
                                                        EnvelopeFunction w3) {
  if (pieces.empty()) throw Error("max-linear candidate needs at least one weight vector");
  for (const auto& xi : pieces) {
    check_positive_weights(xi);
    if (xi.size() != pieces.front().size()) throw Error("max-linear weight vectors differ in size");
  }
  check_envelopes(w1, w2, w3);
  LyapunovCandidate v;
  v.form_ = CandidateForm::kMaxLinearSquared;
  v.num_classes_ = static_cast<int>(pieces.front().size());
  v.pieces_ = std::move(pieces);
  v.w1_ = w1;
  v.w2_ = w2;
  v.w3_ = w3;
  return v;
}

double LyapunovCandidate::value(const Eigen::VectorXd& q) const {
  if (q.size() != num_classes_) throw Error("candidate evaluated at a point of the wrong dimension");
  switch (form_) {
    case CandidateForm::kWeightedLinearSquared: {
      const double s = pieces_.front().dot(q);
      return s * s;
    }
    case CandidateForm::kWeightedQuadratic:
      return q.dot(matrix_ * q);
    case CandidateForm::kMaxLinearSquared: {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& xi : pieces_) best = std::max(best, xi.dot(q));
      return best * best;
    }
  }
  return 0.0;
}

double LyapunovCandidate::value(std::span<const long long> q) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(q.size()));
  for (std::size_t k = 0; k < q.size(); ++k) x[static_cast<Eigen::Index>(k)] = static_cast<double>(q[k]);
  return value(x);
}

SandwichReport sandwich_check(const LyapunovCandidate& v, const std::vector<Eigen::VectorXd>& grid) {
  SandwichReport report;
  report.lower_margin = std::numeric_limits<double>::infinity();
  report.upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double norm = grid[i].cwiseAbs().sum();
    const double value = v.value(grid[i]);
    const double scale = std::max(1.0, std::abs(value));
    const double lower = (value - v.w1()(norm)) / scale;
    const double upper = (v.w2()(norm) - value) / scale;
    if (lower < report.lower_margin) {
      report.lower_margin = lower;
      report.worst_lower = i;
    }
    if (upper < report.upper_margin) {
      report.upper_margin = upper;
      report.worst_upper = i;
    }
  }
  report.passed = !grid.empty() && report.lower_margin >= -kSandwichTol &&
                  report.upper_margin >= -kSandwichTol;
  return report;
}

DriftReport fluid_drift_check(const LyapunovCandidate& v, const EnvelopeFunction& w3,
                              const FluidTrajectory& traj, double tol) {
  // G(t) = V(Q(t)) + int_0^t w3(||Q||) must not increase between evaluation times.
  std::vector<double> times;
  std::vector<double> g;
  double integral = 0.0;
  auto push = [&](double t) {
    times.push_back(t);
    g.push_back(v.value(traj.level_at(t)) + integral);
  };
  push(0.0);
  for (std::size_t i = 0; i < traj.num_segments(); ++i) {
    const double a = traj.times()[i];
    const double b = traj.times()[i + 1];
    const double mid = 0.5 * (a + b);
    const double na = traj.levels()[i].sum();
    const double nb = traj.levels()[i + 1].sum();
    const double nm = 0.5 * (na + nb);
    integral += integrate_linear(w3, na, nm, mid - a);
    push(mid);
    integral += integrate_linear(w3, nm, nb, b - mid);
    push(b);
  }
  DriftReport report;
  double run_min = g.front();
  std::size_t run_arg = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double slack = run_min - g[i];
    if (i == 1 || slack < report.slack) {
      report.slack = slack;
      report.worst_s = times[run_arg];
      report.worst_t = times[i];
    }
    if (g[i] < run_min) {
      run_min = g[i];
      run_arg = i;
    }
  }
  report.passed = report.slack >= -tol;
  return report;
}

std::vector<Eigen::VectorXd> random_directions(int num_classes, std::size_t count,
                                               std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  std::exponential_distribution<double> exp1(1.0);
  for (std::size_t i = 0; i < count; ++i) {
    Engine engine(substream_seed(seed, i));
    Eigen::VectorXd d(num_classes);
    for (int k = 0; k < num_classes; ++k) d[k] = exp1(engine);
    out.push_back(d / d.sum());
  }
  return out;
}

Certificate synthesize_linear_certificate(const FluidSpec& spec, std::uint64_t seed,
                                          std::size_t directions) {
  if (spec.discipline.kind == DisciplineKind::kFifo) {
    throw Error("certificate synthesis is not available for FIFO");
  }
  const int K = spec.num_classes;
  if (K > kMaxCertificateClasses) throw Error("certificate synthesis enumerates 2^K patterns; K > 20 refused");

  std::vector<Eigen::VectorXd> drifts;
  for (std::uint64_t mask = 1; mask < (1ULL << K); ++mask) {
    RegimePattern p;
    p.weights = Eigen::VectorXd::Ones(K);
    for (int k = 0; k < K; ++k) p.nonempty.push_back(((mask >> k) & 1ULL) != 0);
    pattern_drifts(spec, p, drifts);
  }

  // Variables (xi_1..xi_K, gamma): d.xi + gamma <= 0, gamma - xi_k <= 0, sum xi <= 1.
  const Eigen::Index rows = static_cast<Eigen::Index>(drifts.size()) + K + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, K + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  Eigen::Index r = 0;
  for (const auto& d : drifts) {
    a.block(r, 0, 1, K) = d.transpose();
    a(r, K) = 1.0;
    ++r;
  }
  for (int k = 0; k < K; ++k, ++r) {
    a(r, k) = -1.0;
    a(r, K) = 1.0;
  }
  a.block(r, 0, 1, K).setOnes();
  b[r] = 1.0;
  Eigen::VectorXd objective = Eigen::VectorXd::Zero(K + 1);
  objective[K] = 1.0;
  const LpResult lp = maximize_lp(objective, a, b);

  Certificate cert;
  cert.drifts = drifts.size();
  if (lp.status != LpStatus::kOptimal || lp.x[K] <= kFeasibleGamma) return cert;

  Eigen::VectorXd xi = lp.x.head(K);
  if (xi.minCoeff() <= 0.0) return cert;
  double gamma = std::numeric_limits<double>::infinity();
  for (const auto& d : drifts) gamma = std::min(gamma, -xi.dot(d));
  if (!(gamma > kFeasibleGamma)) return cert;

  cert.feasible = true;
  cert.xi = xi;
  cert.gamma = gamma;
  const double lo = xi.minCoeff();
  const double hi = xi.maxCoeff();
  cert.candidate = LyapunovCandidate::weighted_linear_squared(
      xi, {lo * lo, 2.0}, {hi * hi, 2.0}, {gamma * lo, 1.0});

  // xi . Q falls at rate >= gamma, so every unit direction empties by hi / gamma.
  const double horizon = 1.5 * hi / gamma + 1.0;
  const auto dirs = random_directions(K, directions, seed);
  cert.verified = true;
  cert.verification_slack = std::numeric_limits<double>::infinity();
  cert.verification_directions = dirs.size();
  for (const auto& d : dirs) {
    const FluidTrajectory traj = fluid_trajectory(spec, d, horizon);
    const DriftReport rep = fluid_drift_check(*cert.candidate, cert.candidate->w3(), traj, 1e-9);
    cert.verification_slack = std::min(cert.verification_slack, rep.slack);
    if (!rep.passed) cert.verified = false;
  }
  if (dirs.empty()) cert.verification_slack = 0.0;
  return cert;
}

double foster_W(const StateView& x, const LyapunovCandidate& v) {
  return v.w2().inverse(v.value(x.q)) + sum_residuals(x);
}

double foster_W(const SimState& x, const LyapunovCandidate& v) {
  const Snapshot s = Snapshot::of(x);
  return foster_W(s.view(), v);
}

StatePredicate foster_set(const LyapunovCandidate& v, double kappa) {
  return StatePredicate::sublevel(
      [v](std::span<const long long> q) { return v.w2().inverse(v.value(q)); }, kappa);
}

FosterDrift foster_drift_estimate(const ValidatedSpec& spec, const SimState& x,
                                  const LyapunovCandidate& v, double c, std::size_t replications,
                                  std::uint64_t seed, std::uint64_t event_cap) {
  if (replications < 100) throw Error("foster drift estimate needs at least 100 replications");
  if (!(c > 0.0)) throw Error("drift horizon factor c must be positive");
  FosterDrift out;
  out.w0 = foster_W(x, v);
  out.horizon = c * out.w0;
  std::vector<double> values(replications);
  std::vector<char> truncated(replications, 0);
  parallel_for(replications, [&](std::size_t r) {
    Simulator sim(spec, x, replication_seed(seed, r));
    if (!sim.run_until(x.clock + out.horizon, event_cap)) {
      truncated[r] = 1;
      return;
    }
    values[r] = foster_W(sim.state(), v);
  });
  std::vector<double> kept;
  std::vector<double> ratios;
  for (std::size_t r = 0; r < replications; ++r) {
    if (truncated[r]) {
      ++out.truncated;
      continue;
    }
    kept.push_back(values[r]);
    ratios.push_back(values[r] / out.w0);
  }
  out.value = estimate_mean(kept);
  out.ratio = estimate_mean(ratios);
  return out;
}

SupermartingaleProbe supermartingale_probe(const ValidatedSpec& spec, const SimState& x,
                                           const LyapunovCandidate& v, double c, double epsilon,
                                           double kappa, std::size_t n_steps,
                                           std::size_t replications, std::uint64_t seed,
                                           std::uint64_t event_cap) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0, 1)");
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  if (!(c > 0.0)) throw Error("c must be positive");
  if (replications < 2) throw Error("supermartingale probe needs at least 2 replications");
  SupermartingaleProbe probe;
  probe.c = c;
  probe.epsilon = epsilon;
  probe.kappa = kappa;
  const double w0 = foster_W(x, v);
  probe.m0 = c * std::max(w0, kappa);

  std::vector<std::vector<double>> paths(replications);
  std::vector<std::size_t> stop_at(replications, n_steps + 1);
  std::vector<char> truncated(replications, 0);
  parallel_for(replications, [&](std::size_t r) {
    std::vector<double>& m = paths[r];
    m.assign(n_steps + 1, probe.m0);
    if (w0 <= kappa) {
      stop_at[r] = 0;
      return;
    }
    Simulator sim(spec, x, replication_seed(seed, r));
    double elapsed = 0.0;
    double w = w0;
    for (std::size_t n = 1; n <= n_steps; ++n) {
      elapsed += c * w;
      if (!sim.run_until(x.clock + elapsed, event_cap)) {
        truncated[r] = 1;
        return;
      }
      w = foster_W(sim.state(), v);
      m[n] = c * w + epsilon * elapsed;
      if (w <= kappa) {
        stop_at[r] = n;
        std::fill(m.begin() + static_cast<std::ptrdiff_t>(n) + 1, m.end(), m[n]);
        return;
      }
    }
  });

  for (std::size_t n = 0; n <= n_steps; ++n) {
    SupermartingaleStep step;
    step.n = n;
    std::vector<double> values;
    std::vector<double> increments;
    for (std::size_t r = 0; r < replications; ++r) {
      if (truncated[r]) continue;
      values.push_back(paths[r][n]);
      if (n > 0) increments.push_back(paths[r][n] - paths[r][n - 1]);
      if (stop_at[r] <= n) ++step.stopped;
    }
    step.value = estimate_mean(values);
    step.increment = estimate_mean(increments);
    if (n > 0 && step.increment.count > 1 && step.increment.ci_low > 0.0) probe.violated = true;
    probe.steps.push_back(std::move(step));
  }
  probe.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  return probe;
}

std::string to_string(BoundVerdict v) {
  switch (v) {
    case BoundVerdict::kHolds: return "HOLDS";
    case BoundVerdict::kViolated: return "VIOLATED";
    case BoundVerdict::kInconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

ReturnTimeCheck return_time_check(const ValidatedSpec& spec, const SimState& x,
                                  const LyapunovCandidate& v, double epsilon, double kappa,
                                  double delta, std::size_t replications, std::uint64_t seed,
                                  const RunLimits& limits) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0, 1)");
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  if (!(delta >= 0.0)) throw Error("delta must be nonnegative");
  ReturnTimeCheck check;
  check.w0 = foster_W(x, v);
  check.bound = std::max(check.w0, kappa) / epsilon;
  check.estimate = estimate_return_time(spec, foster_set(v, kappa), x, delta, replications, seed, limits);
  if (check.estimate.not_reached > 0 || !check.estimate.defined()) {
    check.verdict = BoundVerdict::kInconclusive;
  } else if (check.estimate.time.ci_high <= check.bound) {
    check.verdict = BoundVerdict::kHolds;
  } else {
    check.verdict = BoundVerdict::kViolated;
  }
  return check;
}

Calibration calibrate(const ValidatedSpec& spec, const LyapunovCandidate& v, double tau_hat,
                      const std::vector<SimState>& probe_states, std::size_t replications,
                      std::uint64_t seed, double target) {
  if (!(tau_hat > 0.0)) throw Error("calibration needs a positive fluid emptying time");
  if (!(target > 0.0 && target < 1.0)) throw Error("calibration target must lie in (0, 1)");
  if (probe_states.empty()) throw Error("calibration needs at least one probe state");
  Calibration cal;
  cal.c = tau_hat / v.w2().inverse(v.w1()(1.0));
  cal.epsilon = 1.0 - target;
  for (std::size_t i = 0; i < probe_states.size(); ++i) {
    DriftLevel level;
    level.drift = foster_drift_estimate(spec, probe_states[i], v, cal.c, replications,
                                        substream_seed(seed, i));
    level.w = level.drift.w0;
    cal.levels.push_back(std::move(level));
  }
  std::sort(cal.levels.begin(), cal.levels.end(),
            [](const DriftLevel& a, const DriftLevel& b) { return a.w < b.w; });
  cal.delta = cal.levels.front().w;
  cal.kappa = cal.levels.back().w;
  for (std::size_t i = cal.levels.size(); i-- > 0;) {
    const auto& d = cal.levels[i].drift;
    if (d.truncated > 0 || !(d.ratio.ci_high <= target)) break;
    cal.found = true;
    cal.kappa = cal.levels[i].w;
  }
  return cal;
}

}  // namespace mcqn
