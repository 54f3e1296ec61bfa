#include "mcqn_cli/cli.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "context.hpp"
#include "mcqn/version.hpp"

namespace mcqn::cli {

namespace fs = std::filesystem;

namespace {

using Handler = Outcome (*)(const Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"simulate", run_simulate},     {"fluid", run_fluid},
      {"verify", run_verify},         {"scaling", run_scaling},
      {"lyapunov-check", run_lyapunov_check}, {"synthesize", run_synthesize},
      {"foster", run_foster},         {"report", run_report}};
  return table;
}

// Failure before or during a command: still leave a machine-readable report.
void write_failure(const fs::path& out_dir, const std::string& command, const char* status,
                   int code, const std::string& message, const Context* ctx) {
  json report = {{"command", command}, {"status", status}, {"exit_code", code},
                 {"error", message}};
  report["provenance"] = ctx ? ctx->provenance() : json{{"version", kVersion}, {"command", command}};
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return;
  std::ofstream(out_dir / "report.json", std::ios::binary) << report.dump(2) << "\n";
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : handlers()) out.push_back(name);
    return out;
  }();
  return names;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Multiclass queueing network stability toolkit", "mcqn"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::string out_dir = "out";
  bool quiet = false;
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--replications", replications, "Replication count (overrides the config)");
  app.add_flag("--quiet", quiet, "Do not print the summary");
  app.set_version_flag("--version", std::string(kVersion));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  std::optional<Context> ctx;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + config_path);
    json config;
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    if (seed) config["seed"] = *seed;
    if (replications) config["replications"] = *replications;
    ctx.emplace(command, std::move(config), fs::path(config_path).parent_path(), fs::path(out_dir), quiet);

    const Outcome outcome = handlers().at(command)(*ctx);
    const bool ok = outcome.passed();
    const int code = ok ? kExitOk : kExitCheckFailed;
    json checks = json::array();
    for (const auto& c : outcome.checks) {
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    ctx->write_json("report.json", {{"command", command},
                                    {"status", ok ? "ok" : "check_failed"},
                                    {"exit_code", code},
                                    {"checks", checks},
                                    {"results", outcome.results}});
    std::ostringstream summary;
    summary << command << " (seed " << ctx->seed() << ", config " << ctx->config_hash() << ")\n";
    for (const auto& line : outcome.summary) summary << line << "\n";
    for (const auto& c : outcome.checks) {
      summary << (c.passed ? "  ok   " : "  FAIL ") << c.name;
      if (!c.detail.empty()) summary << " (" << c.detail << ")";
      summary << "\n";
    }
    ctx->write_text("summary.txt", summary.str());
    if (!quiet) std::cout << summary.str();
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_failure(out_dir, command, "config_error", kExitConfigError, e.what(), ctx ? &*ctx : nullptr);
    return kExitConfigError;
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_failure(out_dir, command, "config_error", kExitConfigError, e.what(), ctx ? &*ctx : nullptr);
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    write_failure(out_dir, command, "runtime_error", kExitRuntimeError, e.what(), ctx ? &*ctx : nullptr);
    return kExitRuntimeError;
  }
}

}  // namespace mcqn::cli
