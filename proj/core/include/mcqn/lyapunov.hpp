#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcqn/estimators.hpp"
#include "mcqn/fluid.hpp"
#include "mcqn/simulator.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

/// w(s) = c s^p with c, p > 0: strictly increasing, w(0) = 0, unbounded.
struct EnvelopeFunction {
  double c = 1.0;
  double p = 1.0;

  double operator()(double s) const;
  double inverse(double y) const;
  bool valid() const { return c > 0.0 && p > 0.0 && std::isfinite(c) && std::isfinite(p); }
};

enum class CandidateForm { kWeightedLinearSquared, kWeightedQuadratic, kMaxLinearSquared };

std::string to_string(CandidateForm form);
std::optional<CandidateForm> parse_candidate_form(const std::string& name);

/// Fluid Lyapunov candidate V with envelopes w1 <= V <= w2 (in ||q||_1) and
/// required decay rate w3.
class LyapunovCandidate {
 public:
  /// V(q) = (xi . q)^2, xi > 0.
  static LyapunovCandidate weighted_linear_squared(Eigen::VectorXd xi, EnvelopeFunction w1,
                                                   EnvelopeFunction w2, EnvelopeFunction w3);
  /// V(q) = q^T A q, A symmetric positive definite.
  static LyapunovCandidate weighted_quadratic(Eigen::MatrixXd a, EnvelopeFunction w1,
                                              EnvelopeFunction w2, EnvelopeFunction w3);
  /// V(q) = (max_i xi_i . q)^2, every xi_i > 0.
  static LyapunovCandidate max_linear_squared(std::vector<Eigen::VectorXd> pieces,
                                              EnvelopeFunction w1, EnvelopeFunction w2,
                                              EnvelopeFunction w3);

  CandidateForm form() const { return form_; }
  int num_classes() const { return num_classes_; }
  const Eigen::VectorXd& weights() const { return pieces_.front(); }
  const std::vector<Eigen::VectorXd>& pieces() const { return pieces_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const EnvelopeFunction& w1() const { return w1_; }
  const EnvelopeFunction& w2() const { return w2_; }
  const EnvelopeFunction& w3() const { return w3_; }

  double value(const Eigen::VectorXd& q) const;
  double value(std::span<const long long> q) const;

 private:
  LyapunovCandidate() = default;

  CandidateForm form_ = CandidateForm::kWeightedLinearSquared;
  int num_classes_ = 0;
  std::vector<Eigen::VectorXd> pieces_;
  Eigen::MatrixXd matrix_;
  EnvelopeFunction w1_, w2_, w3_;
};

struct SandwichReport {
  double lower_margin = 0.0;  // min over grid of V - w1, relative to max(1, V)
  double upper_margin = 0.0;  // min over grid of w2 - V, relative to max(1, V)
  std::size_t worst_lower = 0;
  std::size_t worst_upper = 0;
  bool passed = false;
};

/// Checks w1(||q||) <= V(q) <= w2(||q||) on every grid point (relative tolerance 1e-12).
SandwichReport sandwich_check(const LyapunovCandidate& v, const std::vector<Eigen::VectorXd>& grid);

struct DriftReport {
  /// min over evaluation times s < t of V(Q(s)) - V(Q(t)) - int_s^t w3(||Q||).
  double slack = 0.0;
  double worst_s = 0.0;
  double worst_t = 0.0;
  bool passed = false;
};

/// Decay check along a fluid path at breakpoints and segment midpoints.
/// Integrals of w3 use 16-point Gauss-Legendre per half segment (exact for
/// integer powers up to 31, since ||Q||_1 is linear on a segment).
DriftReport fluid_drift_check(const LyapunovCandidate& v, const EnvelopeFunction& w3,
                              const FluidTrajectory& traj, double tol);

struct Certificate {
  bool feasible = false;
  Eigen::VectorXd xi;
  double gamma = 0.0;  // min over regimes of -xi . dQ/dt
  std::optional<LyapunovCandidate> candidate;
  std::size_t drifts = 0;  // regime drift vectors in the program
  bool verified = false;   // drift check on random directions passed
  double verification_slack = 0.0;
  std::size_t verification_directions = 0;
};

/// Searches xi > 0, sum xi <= 1, maximizing gamma with xi . d <= -gamma for the
/// drift d of every nonempty regime pattern. Proportional disciplines enter
/// through the extreme splits of each busy station. A feasible result carries
/// V = (xi . q)^2 with w1 = xi_min^2 s^2, w2 = xi_max^2 s^2, w3 = gamma xi_min s,
/// re-checked on `directions` random unit directions. Throws Error for FIFO
/// or more than 20 classes.
Certificate synthesize_linear_certificate(const FluidSpec& spec, std::uint64_t seed = 1,
                                          std::size_t directions = 20);

/// Random points of the unit simplex (uniform Dirichlet).
std::vector<Eigen::VectorXd> random_directions(int num_classes, std::size_t count,
                                               std::uint64_t seed);

/// W(x) = w2^-1(V(q)) + ||u|| + ||v||.
double foster_W(const StateView& x, const LyapunovCandidate& v);
double foster_W(const SimState& x, const LyapunovCandidate& v);

/// B = {W <= kappa} as an entrance-time predicate.
StatePredicate foster_set(const LyapunovCandidate& v, double kappa);

struct FosterDrift {
  double w0 = 0.0;       // W(x)
  double horizon = 0.0;  // c W(x)
  MeanEstimate value;    // E_x[W(X(c W(x)))]
  MeanEstimate ratio;    // value / W(x)
  std::size_t truncated = 0;
};

/// Replicated estimate of E_x[W(X(c W(x)))]. Throws Error for fewer than 100 replications.
FosterDrift foster_drift_estimate(const ValidatedSpec& spec, const SimState& x,
                                  const LyapunovCandidate& v, double c, std::size_t replications,
                                  std::uint64_t seed, std::uint64_t event_cap = 100'000'000);

struct SupermartingaleStep {
  std::size_t n = 0;
  MeanEstimate value;       // E[M(min{n, N})]
  MeanEstimate increment;   // E[M(min{n, N}) - M(min{n-1, N})], paired
  std::size_t stopped = 0;  // replications with N <= n
};

struct SupermartingaleProbe {
  double c = 0.0, epsilon = 0.0, kappa = 0.0;
  double m0 = 0.0;  // c max{W(x), kappa}
  std::vector<SupermartingaleStep> steps;
  std::size_t truncated = 0;
  bool violated = false;  // some increment has a CI lower bound above 0
};

/// Stopping times T_0 = 0, T_{n+1} = T_n + c W(X(T_n)); M(0) = c max{W(x), kappa},
/// M(n) = c W(X(T_n)) + eps T_n; N = first n with W(X(T_n)) <= kappa.
SupermartingaleProbe supermartingale_probe(const ValidatedSpec& spec, const SimState& x,
                                           const LyapunovCandidate& v, double c, double epsilon,
                                           double kappa, std::size_t n_steps,
                                           std::size_t replications, std::uint64_t seed,
                                           std::uint64_t event_cap = 100'000'000);

enum class BoundVerdict { kHolds, kViolated, kInconclusive };
std::string to_string(BoundVerdict v);

struct ReturnTimeCheck {
  double w0 = 0.0;
  double bound = 0.0;  // max{W(x), kappa} / eps
  ReturnTimeEstimate estimate;
  BoundVerdict verdict = BoundVerdict::kInconclusive;
};

/// Compares E_x[tau_B(delta)] for B = {W <= kappa} with max{W(x), kappa} / eps.
/// Any replication that misses B makes the verdict inconclusive.
ReturnTimeCheck return_time_check(const ValidatedSpec& spec, const SimState& x,
                                  const LyapunovCandidate& v, double epsilon, double kappa,
                                  double delta, std::size_t replications, std::uint64_t seed,
                                  const RunLimits& limits = {});

struct DriftLevel {
  double w = 0.0;
  FosterDrift drift;
};

struct Calibration {
  double c = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double delta = 0.0;  // min W over probed states
  bool found = false;  // some level (and all above it) met the target ratio
  std::vector<DriftLevel> levels;
};

/// c = tau_hat / w2^-1(w1(1)), eps = 1 - target with target = eps-tilde, and
/// kappa = the smallest probed W whose drift-ratio CI upper bound, and that of
/// every larger probed level, is at most `target`. Probes start from
/// `probe_states` (sorted by W).
Calibration calibrate(const ValidatedSpec& spec, const LyapunovCandidate& v, double tau_hat,
                      const std::vector<SimState>& probe_states, std::size_t replications,
                      std::uint64_t seed, double target = 0.5);

}  // namespace mcqn
