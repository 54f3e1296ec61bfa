#include "context.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mcqn/json_io.hpp"
#include "mcqn/presets.hpp"
#include "mcqn/version.hpp"
#include "mcqn_cli/cli.hpp"

namespace mcqn::cli {

namespace fs = std::filesystem;

bool Outcome::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

namespace {

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Context::Context(std::string command, json config, fs::path config_dir, fs::path out_dir,
                 bool quiet)
    : command_(std::move(command)),
      config_(std::move(config)),
      config_dir_(std::move(config_dir)),
      out_dir_(std::move(out_dir)),
      quiet_(quiet) {
  if (!config_.is_object()) throw ConfigError("config must be a JSON object");
  if (!has("seed")) throw ConfigError("config needs a \"seed\" (or pass --seed)");
  if (!config_["seed"].is_number_unsigned()) throw ConfigError("\"seed\" must be a nonnegative integer");
  seed_ = config_["seed"].get<std::uint64_t>();
  hash_ = hex64(fnv1a(config_.dump()));
}

ValidatedSpec Context::network() const {
  NetworkSpec raw;
  try {
    if (has("network_file")) {
      if (!config_["network_file"].is_string()) throw ConfigError("\"network_file\" must be a path");
      raw = parse_network(read_file(config_dir_ / config_["network_file"].get<std::string>()));
    } else if (!has("network")) {
      throw ConfigError("config needs \"network\" (preset name or inline spec)");
    } else if (config_["network"].is_string()) {
      raw = preset_network(config_["network"].get<std::string>());
    } else {
      raw = parse_network(config_["network"].dump());
    }
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  ValidationResult result = validate_spec(raw);
  if (!result.ok()) {
    std::string message = "network rejected:";
    for (const auto& f : result.findings) {
      if (f.severity == Severity::kError) message += " [" + f.code + "] " + f.message + ";";
    }
    throw ConfigError(message);
  }
  return *result.spec;
}

double Context::number(const char* key, double fallback, double min, double max) const {
  if (!has(key)) return fallback;
  return required_number(key, min, max);
}

double Context::required_number(const char* key, double min, double max) const {
  if (!has(key)) throw ConfigError(std::string("config needs \"") + key + "\"");
  if (!config_[key].is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  const double x = config_[key].get<double>();
  if (!(x >= min && x <= max)) {
    throw ConfigError(std::string("\"") + key + "\" = " + format_number(x) + " outside [" +
                      format_number(min) + ", " + format_number(max) + "]");
  }
  return x;
}

std::uint64_t Context::count(const char* key, std::uint64_t fallback, std::uint64_t min) const {
  if (!has(key)) return fallback;
  if (!config_[key].is_number_unsigned()) {
    throw ConfigError(std::string("\"") + key + "\" must be a nonnegative integer");
  }
  const auto n = config_[key].get<std::uint64_t>();
  if (n < min) throw ConfigError(std::string("\"") + key + "\" must be at least " + std::to_string(min));
  return n;
}

std::size_t Context::replications(std::size_t fallback, std::size_t min) const {
  return static_cast<std::size_t>(count("replications", fallback, min));
}

std::vector<double> Context::numbers(const char* key) const {
  if (!has(key) || !config_[key].is_array()) throw ConfigError(std::string("\"") + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& x : config_[key]) {
    if (!x.is_number()) throw ConfigError(std::string("\"") + key + "\" must contain numbers");
    const double v = x.get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string("\"") + key + "\" must be finite");
    out.push_back(v);
  }
  return out;
}

Eigen::VectorXd Context::vector(const char* key, int size) const {
  const auto xs = numbers(key);
  if (static_cast<int>(xs.size()) != size) {
    throw ConfigError(std::string("\"") + key + "\" needs " + std::to_string(size) + " entries");
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) {
    if (xs[static_cast<std::size_t>(i)] < 0.0) throw ConfigError(std::string("\"") + key + "\" must be nonnegative");
    v[i] = xs[static_cast<std::size_t>(i)];
  }
  return v;
}

std::vector<long long> Context::counts(const char* key, int size) const {
  if (!has(key) || !config_[key].is_array()) throw ConfigError(std::string("\"") + key + "\" must be an array");
  if (static_cast<int>(config_[key].size()) != size) {
    throw ConfigError(std::string("\"") + key + "\" needs " + std::to_string(size) + " entries");
  }
  std::vector<long long> out;
  for (const auto& x : config_[key]) {
    if (!x.is_number_unsigned()) throw ConfigError(std::string("\"") + key + "\" must hold nonnegative integers");
    out.push_back(x.get<long long>());
  }
  return out;
}

json Context::document(const char* key) const {
  if (!has(key)) throw ConfigError(std::string("config needs \"") + key + "\"");
  const json& value = config_[key];
  if (value.is_object()) return value;
  if (!value.is_string()) throw ConfigError(std::string("\"") + key + "\" must be an object or a path");
  try {
    return json::parse(read_file(config_dir_ / value.get<std::string>()));
  } catch (const json::parse_error& e) {
    throw ConfigError(value.get<std::string>() + " is not valid JSON");
  }
}

json Context::provenance() const {
  return {{"config_hash", hash_}, {"seed", seed_}, {"version", kVersion}, {"command", command_}};
}

void Context::write_text(const std::string& name, const std::string& body) const {
  fs::create_directories(out_dir_);
  std::ofstream out(out_dir_ / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (out_dir_ / name).string());
  out << body;
}

void Context::write_json(const std::string& name, json body) const {
  body["provenance"] = provenance();
  write_text(name, body.dump(2) + "\n");
}

void Context::write_csv(const std::string& name, const std::string& body) const {
  write_text(name, "# mcqn " + std::string(kVersion) + " command=" + command_ +
                       " seed=" + std::to_string(seed_) + " config_hash=" + hash_ + "\n" + body);
}

json to_json(const MeanEstimate& m) {
  return {{"count", m.count}, {"mean", m.mean}, {"stddev", m.stddev},
          {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::string format_number(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace mcqn::cli
