#include "mcqn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace mcqn {

namespace {

constexpr double kRowSumSlack = 1e-12;
constexpr double kMeanRelTol = 1e-9;

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

DistributionSpec DistributionSpec::exponential(double rate) {
  return {DistributionFamily::kExponential, rate, 0.0};
}

DistributionSpec DistributionSpec::gamma(double shape, double scale) {
  return {DistributionFamily::kGamma, shape, scale};
}

DistributionSpec DistributionSpec::deterministic(double value) {
  return {DistributionFamily::kDeterministic, value, 0.0};
}

DistributionSpec DistributionSpec::uniform(double low, double high) {
  return {DistributionFamily::kUniform, low, high};
}

double DistributionSpec::mean() const {
  switch (family) {
    case DistributionFamily::kExponential:
      return 1.0 / first;
    case DistributionFamily::kGamma:
      return first * second;
    case DistributionFamily::kDeterministic:
      return first;
    case DistributionFamily::kUniform:
      return 0.5 * (first + second);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool DistributionSpec::unbounded() const {
  return family == DistributionFamily::kExponential || family == DistributionFamily::kGamma;
}

bool DistributionSpec::spread_out() const {
  // Uniform is flagged together with deterministic: bounded support.
  return family == DistributionFamily::kExponential || family == DistributionFamily::kGamma;
}

bool DistributionSpec::parameters_valid() const {
  auto pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  switch (family) {
    case DistributionFamily::kExponential:
      return pos(first);
    case DistributionFamily::kGamma:
      return pos(first) && pos(second);
    case DistributionFamily::kDeterministic:
      return pos(first);
    case DistributionFamily::kUniform:
      return finite_nonnegative(first) && std::isfinite(second) && second > first;
  }
  return false;
}

std::string DistributionSpec::describe() const {
  std::ostringstream os;
  os << to_string(family) << "(";
  switch (family) {
    case DistributionFamily::kExponential:
      os << "rate=" << first;
      break;
    case DistributionFamily::kGamma:
      os << "shape=" << first << ", scale=" << second;
      break;
    case DistributionFamily::kDeterministic:
      os << "value=" << first;
      break;
    case DistributionFamily::kUniform:
      os << "low=" << first << ", high=" << second;
      break;
  }
  os << ")";
  return os.str();
}

std::string to_string(DistributionFamily family) {
  switch (family) {
    case DistributionFamily::kExponential:
      return "exponential";
    case DistributionFamily::kGamma:
      return "gamma";
    case DistributionFamily::kDeterministic:
      return "deterministic";
    case DistributionFamily::kUniform:
      return "uniform";
  }
  return "unknown";
}

std::optional<DistributionFamily> parse_family(const std::string& name) {
  static const std::map<std::string, DistributionFamily> kNames = {
      {"exponential", DistributionFamily::kExponential},
      {"gamma", DistributionFamily::kGamma},
      {"deterministic", DistributionFamily::kDeterministic},
      {"uniform", DistributionFamily::kUniform},
  };
  auto it = kNames.find(name);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

std::string to_string(DisciplineKind kind) {
  switch (kind) {
    case DisciplineKind::kFifo:
      return "fifo";
    case DisciplineKind::kStaticPriority:
      return "static_priority";
    case DisciplineKind::kHlpps:
      return "hlpps";
    case DisciplineKind::kWorkConservingDefault:
      return "work_conserving_default";
  }
  return "unknown";
}

std::optional<DisciplineKind> parse_discipline(const std::string& name) {
  static const std::map<std::string, DisciplineKind> kNames = {
      {"fifo", DisciplineKind::kFifo},
      {"static_priority", DisciplineKind::kStaticPriority},
      {"hlpps", DisciplineKind::kHlpps},
      {"work_conserving_default", DisciplineKind::kWorkConservingDefault},
  };
  auto it = kNames.find(name);
  if (it == kNames.end()) return std::nullopt;
  return it->second;
}

NetworkSpec make_network(const std::vector<ClassSpec>& classes, int num_stations,
                         Discipline discipline) {
  const int k_count = static_cast<int>(classes.size());
  NetworkSpec spec;
  spec.num_classes = k_count;
  spec.num_stations = num_stations;
  spec.constituency = Eigen::MatrixXd::Zero(num_stations, k_count);
  spec.arrival_rates = Eigen::VectorXd::Zero(k_count);
  spec.service_rates = Eigen::VectorXd::Zero(k_count);
  spec.routing = Eigen::MatrixXd::Zero(k_count, k_count);
  spec.discipline = std::move(discipline);
  for (int k = 0; k < k_count; ++k) {
    const ClassSpec& c = classes[static_cast<std::size_t>(k)];
    if (c.station >= 0 && c.station < num_stations) spec.constituency(c.station, k) = 1.0;
    if (c.arrival) spec.arrival_rates[k] = 1.0 / c.arrival->mean();
    spec.service_rates[k] = 1.0 / c.service.mean();
    for (const auto& [to, prob] : c.routes) {
      if (to < 0 || to >= k_count) throw SpecError("route destination out of range");
      spec.routing(k, to) += prob;
    }
    spec.arrival_distributions.push_back(c.arrival);
    spec.service_distributions.push_back(c.service);
  }
  return spec;
}

bool ValidationResult::has(const std::string& code) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.code == code; });
}

SpectralRadius spectral_radius(const Eigen::MatrixXd& matrix) {
  constexpr int kMaxSquarings = 64;
  constexpr double kTol = 1e-12;
  SpectralRadius out;
  if (matrix.size() == 0) {
    out.converged = true;
    return out;
  }
  // Invariant: |P|^(2^m) = exp(log_scale) * power.
  Eigen::MatrixXd power = matrix.cwiseAbs();
  double log_scale = 0.0;
  double exponent = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= kMaxSquarings; ++m) {
    const double norm = power.cwiseAbs().rowwise().sum().maxCoeff();
    if (norm == 0.0) {
      out.value = 0.0;
      out.converged = true;
      out.squarings = m;
      return out;
    }
    const double estimate = std::exp((log_scale + std::log(norm)) / exponent);
    out.value = estimate;
    out.squarings = m;
    if (std::abs(estimate - previous) <= kTol * std::max(1.0, estimate)) {
      out.converged = true;
      return out;
    }
    previous = estimate;
    power /= norm;
    log_scale += std::log(norm);
    power = power * power;
    log_scale *= 2.0;
    exponent *= 2.0;
  }
  return out;
}

ValidationResult validate_spec(const NetworkSpec& raw) {
  ValidationResult result;
  auto error = [&](const char* code, std::string message) {
    result.findings.push_back({Severity::kError, code, std::move(message)});
  };
  auto warning = [&](const char* code, std::string message) {
    result.findings.push_back({Severity::kWarning, code, std::move(message)});
  };

  const int K = raw.num_classes;
  const int J = raw.num_stations;
  if (K <= 0 || J <= 0 || raw.constituency.rows() != J || raw.constituency.cols() != K ||
      raw.arrival_rates.size() != K || raw.service_rates.size() != K ||
      raw.routing.rows() != K || raw.routing.cols() != K ||
      static_cast<int>(raw.arrival_distributions.size()) != K ||
      static_cast<int>(raw.service_distributions.size()) != K) {
    error(finding_code::kShape, "dimensions of the network description are inconsistent");
    return result;
  }

  std::vector<int> station_of(static_cast<std::size_t>(K), -1);
  for (int k = 0; k < K; ++k) {
    int ones = 0;
    bool binary = true;
    for (int j = 0; j < J; ++j) {
      const double c = raw.constituency(j, k);
      if (c == 1.0) {
        ++ones;
        station_of[static_cast<std::size_t>(k)] = j;
      } else if (c != 0.0) {
        binary = false;
      }
    }
    if (!binary || ones != 1) {
      error(finding_code::kConstituency, "class " + std::to_string(k) + " is assigned to " +
                                             std::to_string(ones) +
                                             " stations (exactly one required)");
    }
  }

  for (int k = 0; k < K; ++k) {
    const double a = raw.arrival_rates[k];
    const double m = raw.service_rates[k];
    if (!finite_nonnegative(a)) {
      error(finding_code::kArrivalRate,
            "class " + std::to_string(k) + " has invalid arrival rate " + fmt_double(a));
    }
    if (!std::isfinite(m) || m <= 0.0) {
      error(finding_code::kServiceRate,
            "class " + std::to_string(k) + " has non-positive service rate " + fmt_double(m));
    }
  }

  bool routing_ok = true;
  for (int k = 0; k < K; ++k) {
    double row = 0.0;
    for (int l = 0; l < K; ++l) {
      const double p = raw.routing(k, l);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        routing_ok = false;
        error(finding_code::kRoutingEntry, "routing entry (" + std::to_string(k) + "," +
                                               std::to_string(l) + ") = " + fmt_double(p) +
                                               " outside [0,1]");
      }
      row += p;
    }
    if (row > 1.0 + kRowSumSlack) {
      routing_ok = false;
      error(finding_code::kRoutingRowSum,
            "routing row " + std::to_string(k) + " sums to " + fmt_double(row) + " > 1");
    }
  }
  if (routing_ok) {
    const SpectralRadius rho = spectral_radius(raw.routing);
    if (!rho.converged) {
      error(finding_code::kSpectralRadius,
            "spectral radius iteration did not converge (best estimate " +
                fmt_double(rho.value) + ")");
    } else if (rho.value >= 1.0) {
      error(finding_code::kSpectralRadius,
            "spectral radius " + fmt_double(rho.value) + " >= 1 (routing must be transient)");
    }
  }

  for (int k = 0; k < K; ++k) {
    const auto& arrival = raw.arrival_distributions[static_cast<std::size_t>(k)];
    const double a = raw.arrival_rates[k];
    if (a > 0.0) {
      if (!arrival) {
        error(finding_code::kDistribution,
              "class " + std::to_string(k) + " has arrivals but no interarrival law");
      } else if (!arrival->parameters_valid()) {
        error(finding_code::kDistribution, "class " + std::to_string(k) +
                                               " interarrival law " + arrival->describe() +
                                               " has invalid parameters");
      } else {
        if (std::abs(arrival->mean() * a - 1.0) > kMeanRelTol) {
          error(finding_code::kDistributionMean,
                "class " + std::to_string(k) + " interarrival mean " +
                    fmt_double(arrival->mean()) + " differs from 1/alpha");
        }
        if (!arrival->unbounded() || !arrival->spread_out()) {
          warning(finding_code::kUnboundedSpreadOut,
                  "class " + std::to_string(k) + " interarrival law " + arrival->describe() +
                      " is not unbounded and spread out; the positive recurrence "
                      "argument does not cover it");
        }
      }
    } else if (arrival) {
      error(finding_code::kDistribution,
            "class " + std::to_string(k) + " has an interarrival law but zero arrival rate");
    }
    const auto& service = raw.service_distributions[static_cast<std::size_t>(k)];
    if (!service.parameters_valid()) {
      error(finding_code::kDistribution, "class " + std::to_string(k) + " service law " +
                                             service.describe() + " has invalid parameters");
    } else if (raw.service_rates[k] > 0.0 &&
               std::abs(service.mean() * raw.service_rates[k] - 1.0) > kMeanRelTol) {
      error(finding_code::kDistributionMean, "class " + std::to_string(k) + " service mean " +
                                                 fmt_double(service.mean()) +
                                                 " differs from 1/mu");
    }
  }

  if (raw.discipline.kind == DisciplineKind::kStaticPriority) {
    if (static_cast<int>(raw.discipline.ranks.size()) != K) {
      error(finding_code::kPriorityRanks, "static priority needs one rank per class");
    } else {
      for (int j = 0; j < J; ++j) {
        std::map<int, int> seen;
        for (int k = 0; k < K; ++k) {
          if (station_of[static_cast<std::size_t>(k)] != j) continue;
          const int rank = raw.discipline.ranks[static_cast<std::size_t>(k)];
          auto [it, inserted] = seen.emplace(rank, k);
          if (!inserted) {
            error(finding_code::kPriorityRanks,
                  "classes " + std::to_string(it->second) + " and " + std::to_string(k) +
                      " share rank " + std::to_string(rank) + " at station " +
                      std::to_string(j));
          }
        }
      }
    }
  }

  const bool any_error = std::any_of(result.findings.begin(), result.findings.end(),
                                     [](const Finding& f) { return f.severity == Severity::kError; });
  if (any_error) return result;

  ValidatedSpec spec;
  spec.raw_ = raw;
  spec.station_of_ = station_of;
  spec.classes_at_.assign(static_cast<std::size_t>(J), {});
  for (int k = 0; k < K; ++k) {
    spec.classes_at_[static_cast<std::size_t>(station_of[static_cast<std::size_t>(k)])]
        .push_back(k);
    if (raw.arrival_rates[k] > 0.0) spec.exogenous_.push_back(k);
  }
  spec.warnings_ = result.findings;
  result.spec = std::move(spec);
  return result;
}

ValidatedSpec validated(const NetworkSpec& raw) {
  ValidationResult result = validate_spec(raw);
  if (result.ok()) return std::move(*result.spec);
  std::string message = "invalid network:";
  for (const Finding& f : result.findings) {
    if (f.severity == Severity::kError) message += "\n  [" + f.code + "] " + f.message;
  }
  throw SpecError(message);
}

ValidatedSpec ValidatedSpec::with_discipline(Discipline discipline) const {
  NetworkSpec copy = raw_;
  copy.discipline = std::move(discipline);
  return validated(copy);
}

Eigen::VectorXd effective_arrival_rates(const ValidatedSpec& spec) {
  const int K = spec.num_classes();
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(K, K) - spec.routing().transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw Error("internal: I - P^T is singular for a validated spec");
  return lu.solve(spec.arrival_rates());
}

Eigen::VectorXd traffic_intensity(const ValidatedSpec& spec) {
  const Eigen::VectorXd lambda = effective_arrival_rates(spec);
  const Eigen::VectorXd load = lambda.cwiseQuotient(spec.service_rates());
  return spec.constituency() * load;
}

}  // namespace mcqn
