#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mcqn/lyapunov.hpp"
#include "mcqn/network.hpp"
#include "mcqn/stats.hpp"

namespace mcqn::cli {

using nlohmann::json;

/// Malformed or out-of-range configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// What a command hands back to the dispatcher.
struct Outcome {
  std::vector<Check> checks;
  json results = json::object();
  std::vector<std::string> summary;

  void check(std::string name, bool passed, std::string detail = {}) {
    checks.push_back({std::move(name), passed, std::move(detail)});
  }
  bool passed() const;
};

/// Parsed invocation: the merged config (CLI overrides applied) and the
/// artifact sink. The config hash covers exactly the merged config, so equal
/// inputs give byte-identical artifacts.
class Context {
 public:
  Context(std::string command, json config, std::filesystem::path config_dir,
          std::filesystem::path out_dir, bool quiet);

  const std::string& command() const { return command_; }
  const json& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& config_hash() const { return hash_; }
  bool quiet() const { return quiet_; }

  /// "network": preset name or inline object; "network_file": path.
  ValidatedSpec network() const;

  bool has(const char* key) const { return config_.contains(key) && !config_[key].is_null(); }
  double number(const char* key, double fallback, double min, double max) const;
  double required_number(const char* key, double min, double max) const;
  std::uint64_t count(const char* key, std::uint64_t fallback, std::uint64_t min) const;
  /// "replications" after the --replications override.
  std::size_t replications(std::size_t fallback, std::size_t min) const;
  Eigen::VectorXd vector(const char* key, int size) const;
  std::vector<long long> counts(const char* key, int size) const;
  std::vector<double> numbers(const char* key) const;
  /// Object inline under `key`, or the JSON file it names (relative to the config).
  json document(const char* key) const;

  json provenance() const;
  void write_text(const std::string& name, const std::string& body) const;
  void write_json(const std::string& name, json body) const;
  /// Prepends a '#' provenance line to a CSV body.
  void write_csv(const std::string& name, const std::string& body) const;

 private:
  std::string command_;
  json config_;
  std::filesystem::path config_dir_;
  std::filesystem::path out_dir_;
  bool quiet_;
  std::uint64_t seed_ = 0;
  std::string hash_;
};

json to_json(const MeanEstimate& m);
json to_json(const Eigen::VectorXd& v);
/// Shortest form that keeps a decimal point: 2 -> "2.0".
std::string format_number(double x);

Outcome run_simulate(const Context& ctx);
Outcome run_fluid(const Context& ctx);
Outcome run_verify(const Context& ctx);
Outcome run_scaling(const Context& ctx);
Outcome run_lyapunov_check(const Context& ctx);
Outcome run_synthesize(const Context& ctx);
Outcome run_foster(const Context& ctx);
Outcome run_report(const Context& ctx);

}  // namespace mcqn::cli
