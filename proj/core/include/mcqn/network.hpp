#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mcqn {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a network description is structurally invalid.
class SpecError : public Error {
 public:
  using Error::Error;
};

enum class DistributionFamily { kExponential, kGamma, kDeterministic, kUniform };

/// A primitive-increment law from a closed list of families with analytic means.
///
/// Parameters are stored positionally:
///   exponential: first = rate
///   gamma:       first = shape, second = scale
///   deterministic: first = value
///   uniform:     first = low, second = high
struct DistributionSpec {
  DistributionFamily family = DistributionFamily::kExponential;
  double first = 1.0;
  double second = 0.0;

  static DistributionSpec exponential(double rate);
  static DistributionSpec gamma(double shape, double scale);
  static DistributionSpec deterministic(double value);
  static DistributionSpec uniform(double low, double high);

  double mean() const;
  // Arbitrarily large values occur with positive probability.
  bool unbounded() const;
  // Some convolution power has an absolutely continuous component.
  bool spread_out() const;
  bool parameters_valid() const;
  std::string describe() const;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

std::string to_string(DistributionFamily family);
std::optional<DistributionFamily> parse_family(const std::string& name);

enum class DisciplineKind { kFifo, kStaticPriority, kHlpps, kWorkConservingDefault };

std::string to_string(DisciplineKind kind);
std::optional<DisciplineKind> parse_discipline(const std::string& name);

struct Discipline {
  DisciplineKind kind = DisciplineKind::kWorkConservingDefault;
  /// Per-class priority rank for kStaticPriority; lower integer = higher priority.
  std::vector<int> ranks;

  friend bool operator==(const Discipline&, const Discipline&) = default;
};

/// Static description of a multiclass network of single-server stations.
///
/// Classes and stations are indexed from 0. A class with arrival rate 0 has
/// no exogenous arrival stream; its arrival distribution is then empty.
struct NetworkSpec {
  int num_classes = 0;
  int num_stations = 0;
  Eigen::MatrixXd constituency;  // J x K, 0/1
  Eigen::VectorXd arrival_rates;  // alpha
  Eigen::VectorXd service_rates;  // mu
  Eigen::MatrixXd routing;  // K x K, row k = routing probabilities out of class k
  Discipline discipline;
  std::vector<std::optional<DistributionSpec>> arrival_distributions;
  std::vector<DistributionSpec> service_distributions;
};

/// Per-class description used to assemble a NetworkSpec.
struct ClassSpec {
  int station = 0;
  std::optional<DistributionSpec> arrival;
  DistributionSpec service;
  std::vector<std::pair<int, double>> routes;  // (destination class, probability)
};

/// Builds a spec whose rates are the reciprocal means of the given laws.
NetworkSpec make_network(const std::vector<ClassSpec>& classes, int num_stations,
                         Discipline discipline);

enum class Severity { kError, kWarning };

struct Finding {
  Severity severity = Severity::kError;
  std::string code;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

namespace finding_code {
inline constexpr const char* kShape = "shape";
inline constexpr const char* kConstituency = "constituency_column";
inline constexpr const char* kArrivalRate = "arrival_rate";
inline constexpr const char* kServiceRate = "service_rate";
inline constexpr const char* kRoutingEntry = "routing_entry";
inline constexpr const char* kRoutingRowSum = "routing_row_sum";
inline constexpr const char* kSpectralRadius = "spectral_radius";
inline constexpr const char* kDistribution = "distribution";
inline constexpr const char* kDistributionMean = "distribution_mean";
inline constexpr const char* kPriorityRanks = "priority_ranks";
inline constexpr const char* kUnboundedSpreadOut = "arrivals_not_unbounded_spread_out";
}  // namespace finding_code

struct ValidationResult;

/// An immutable spec that passed structural validation. Safe to share
/// read-only across threads.
class ValidatedSpec {
 public:
  const NetworkSpec& raw() const { return raw_; }
  int num_classes() const { return raw_.num_classes; }
  int num_stations() const { return raw_.num_stations; }
  const Eigen::VectorXd& arrival_rates() const { return raw_.arrival_rates; }
  const Eigen::VectorXd& service_rates() const { return raw_.service_rates; }
  const Eigen::MatrixXd& routing() const { return raw_.routing; }
  const Eigen::MatrixXd& constituency() const { return raw_.constituency; }
  const Discipline& discipline() const { return raw_.discipline; }

  int station_of(int k) const { return station_of_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& classes_at(int j) const {
    return classes_at_[static_cast<std::size_t>(j)];
  }
  bool exogenous(int k) const { return raw_.arrival_rates[k] > 0.0; }
  const std::vector<int>& exogenous_classes() const { return exogenous_; }
  /// Non-fatal findings (assumption warnings).
  const std::vector<Finding>& warnings() const { return warnings_; }

  /// Same network with a different service discipline; re-validated.
  ValidatedSpec with_discipline(Discipline discipline) const;

 private:
  friend ValidationResult validate_spec(const NetworkSpec& raw);
  ValidatedSpec() = default;

  NetworkSpec raw_;
  std::vector<int> station_of_;
  std::vector<std::vector<int>> classes_at_;
  std::vector<int> exogenous_;
  std::vector<Finding> warnings_;
};

struct ValidationResult {
  std::optional<ValidatedSpec> spec;
  std::vector<Finding> findings;

  bool ok() const { return spec.has_value(); }
  bool has(const std::string& code) const;
};

/// Checks structure, rates, routing, distributions and priority ranks.
/// Structural violations are errors (no spec returned); assumption
/// violations on interarrival laws are warnings.
ValidationResult validate_spec(const NetworkSpec& raw);

/// validate_spec, throwing SpecError listing every error.
ValidatedSpec validated(const NetworkSpec& raw);

struct SpectralRadius {
  double value = 0.0;
  bool converged = false;
  int squarings = 0;
};

/// Largest eigenvalue modulus of |P| by repeated squaring of the power
/// sequence, rho = lim ||P^n||^(1/n). Nilpotent matrices return exactly 0.
SpectralRadius spectral_radius(const Eigen::MatrixXd& matrix);

/// lambda solving lambda = alpha + P^T lambda.
Eigen::VectorXd effective_arrival_rates(const ValidatedSpec& spec);

/// rho_j = sum over classes at j of lambda_k / mu_k.
Eigen::VectorXd traffic_intensity(const ValidatedSpec& spec);

}  // namespace mcqn
