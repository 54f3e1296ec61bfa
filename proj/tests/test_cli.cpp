#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcqn/json_io.hpp"
#include "mcqn_cli/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = MCQN_TEST_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mcqn_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& config) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << config.dump(2);
  return path;
}

int run(std::vector<std::string> args) {
  args.push_back("--quiet");
  return mcqn::cli::run(args);
}

json report(const fs::path& out) { return json::parse(slurp(out / "report.json")); }

}  // namespace

TEST(Cli, FluidMM1) {
  const fs::path out = scratch("fluid") / "out";
  ASSERT_EQ(run({"fluid", "--config", kData + "/fluid_mm1.json", "--out", out.string()}), 0);
  EXPECT_NE(slurp(out / "summary.txt").find("empty at t=2.0"), std::string::npos);
  const std::string csv = slurp(out / "trajectory.csv");
  EXPECT_EQ(csv.rfind("# mcqn ", 0), 0u);
  EXPECT_NE(csv.find("\ntime,Q_1,Tdot_1,W_1,I_1\n"), std::string::npos);
  const json r = report(out);
  EXPECT_EQ(r["status"], "ok");
  EXPECT_EQ(r["provenance"]["seed"], 1);
  EXPECT_EQ(r["provenance"]["config_hash"].get<std::string>().size(), 16u);
  const auto traj = mcqn::parse_trajectory(slurp(out / "trajectory.json"));
  ASSERT_TRUE(traj.empty_time());
  EXPECT_NEAR(*traj.empty_time(), 2.0, 1e-12);
}

TEST(Cli, VerifyFlagsDecreasingAllocation) {
  const fs::path out = scratch("verify");
  EXPECT_EQ(run({"verify", "--config", kData + "/verify_decreasing_allocation.json", "--out", out.string()}),
            mcqn::cli::kExitCheckFailed);
  const json r = report(out);
  EXPECT_EQ(r["status"], "check_failed");
  bool found = false;
  for (const auto& f : r["results"]["findings"]) {
    found = found || f.get<std::string>().find("allocation nondecreasing") != std::string::npos;
  }
  EXPECT_TRUE(found);
}

TEST(Cli, SimulateIsReproducible) {
  const fs::path dir = scratch("simulate");
  const std::string config = kData + "/simulate_mm1.json";
  ASSERT_EQ(run({"simulate", "--config", config, "--out", (dir / "a").string()}), 0);
  ASSERT_EQ(run({"simulate", "--config", config, "--out", (dir / "b").string()}), 0);
  ASSERT_EQ(run({"simulate", "--config", config, "--out", (dir / "c").string(), "--seed", "8"}), 0);
  for (const char* name : {"sample_path.csv", "report.json", "summary.txt", "initial_state.json"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
  EXPECT_NE(slurp(dir / "a" / "sample_path.csv"), slurp(dir / "c" / "sample_path.csv"));
  EXPECT_NE(report(dir / "a")["provenance"]["config_hash"], report(dir / "c")["provenance"]["config_hash"]);
  EXPECT_EQ(report(dir / "a")["results"]["events"], 10);
}

TEST(Cli, ConfigErrors) {
  const fs::path dir = scratch("errors");
  EXPECT_EQ(run({"fluid", "--config", (dir / "missing.json").string(), "--out", (dir / "o").string()}),
            mcqn::cli::kExitConfigError);
  const auto no_seed = write_config(dir, {{"network", "mm1"}, {"q0", {1}}});
  EXPECT_EQ(run({"fluid", "--config", no_seed.string(), "--out", (dir / "o").string()}),
            mcqn::cli::kExitConfigError);
  EXPECT_EQ(report(dir / "o")["status"], "config_error");
  EXPECT_EQ(run({"fluid", "--config", no_seed.string(), "--out", (dir / "o").string(), "--seed", "3"}), 0);

  const auto unknown = write_config(dir, {{"network", "no_such"}, {"seed", 1}});
  EXPECT_EQ(run({"report", "--config", unknown.string(), "--out", (dir / "o").string()}),
            mcqn::cli::kExitConfigError);
  const auto negative = write_config(dir, {{"network", "mm1"}, {"seed", 1}, {"q0", {1}}, {"horizon", -1}});
  EXPECT_EQ(run({"fluid", "--config", negative.string(), "--out", (dir / "o").string()}),
            mcqn::cli::kExitConfigError);
  EXPECT_EQ(run({"teleport", "--config", negative.string()}), mcqn::cli::kExitConfigError);
  EXPECT_EQ(run({"fluid"}), mcqn::cli::kExitConfigError);
}

TEST(Cli, NetworkFileAndReport) {
  const fs::path dir = scratch("report");
  fs::copy_file(kData + "/tandem_network.json", dir / "net.json");
  const auto config = write_config(dir, {{"network_file", "net.json"}, {"seed", 2}});
  ASSERT_EQ(run({"report", "--config", config.string(), "--out", (dir / "o").string()}), 0);
  const json r = report(dir / "o");
  EXPECT_EQ(r["results"]["stability_probe"]["verdict"], "STABLE");
  EXPECT_NEAR(r["results"]["traffic_intensity"][0].get<double>(), 0.5, 1e-12);

  const auto rs = write_config(dir, {{"network", "rybko_stolyar_unstable"}, {"seed", 2}});
  ASSERT_EQ(run({"report", "--config", rs.string(), "--out", (dir / "rs").string()}), 0);
  EXPECT_EQ(report(dir / "rs")["results"]["stability_probe"]["verdict"], "DIVERGING");
}

TEST(Cli, SynthesizeAndCheck) {
  const fs::path dir = scratch("synthesize");
  const auto tandem = write_config(dir, {{"network", "tandem"}, {"seed", 4}});
  ASSERT_EQ(run({"synthesize", "--config", tandem.string(), "--out", (dir / "t").string()}), 0);
  const auto candidate = mcqn::parse_candidate(slurp(dir / "t" / "candidate.json"));
  EXPECT_EQ(candidate.num_classes(), 2);

  const auto check = write_config(dir, {{"network", "tandem"}, {"seed", 4}, {"candidate", "t/candidate.json"},
                                        {"directions", 10}});
  EXPECT_EQ(run({"lyapunov-check", "--config", check.string(), "--out", (dir / "c").string()}), 0);

  json steep = json::parse(slurp(dir / "t" / "candidate.json"));
  steep["w3"]["c"] = 10.0;
  const auto bad = write_config(dir, {{"network", "tandem"}, {"seed", 4}, {"candidate", steep}});
  EXPECT_EQ(run({"lyapunov-check", "--config", bad.string(), "--out", (dir / "b").string()}),
            mcqn::cli::kExitCheckFailed);

  const auto rs = write_config(dir, {{"network", "rybko_stolyar_unstable"}, {"seed", 4}});
  EXPECT_EQ(run({"synthesize", "--config", rs.string(), "--out", (dir / "rs").string()}),
            mcqn::cli::kExitCheckFailed);
  EXPECT_FALSE(fs::exists(dir / "rs" / "candidate.json"));
}

TEST(Cli, ScalingTable) {
  const fs::path dir = scratch("scaling");
  const auto config = write_config(dir, {{"network", "mm1"}, {"seed", 5}, {"schedule", {50, 500}}, {"t_max", 3}});
  ASSERT_EQ(run({"scaling", "--config", config.string(), "--out", (dir / "o").string(), "--replications", "10"}), 0);
  const std::string csv = slurp(dir / "o" / "convergence.csv");
  EXPECT_NE(csv.find("\nr_n,seed_count,mean_dist,ci_low,ci_high\n"), std::string::npos);
  const json table = json::parse(slurp(dir / "o" / "convergence.json"));
  EXPECT_EQ(table["rows"].size(), 2u);
  EXPECT_EQ(table["rows"][0]["seed_count"], 10);
  EXPECT_TRUE(table["trend"].contains("log_log_slope"));
  EXPECT_TRUE(table.contains("provenance"));
}

TEST(Cli, FosterProbeReport) {
  const fs::path out = scratch("foster");
  ASSERT_EQ(run({"foster", "--config", kData + "/foster_mm1.json", "--out", out.string()}), 0);
  const json r = report(out)["results"];
  EXPECT_TRUE(r["parameters"]["calibrated"].get<bool>());
  EXPECT_NEAR(r["parameters"]["c"].get<double>(), 2.0, 1e-9);
  EXPECT_LE(r["drift"]["ratio"]["ci_high"].get<double>(), 0.6);
  EXPECT_EQ(r["return_time"]["verdict"], "HOLDS");
  EXPECT_TRUE(r["seeds"].contains("return_time"));

  const fs::path partial = scratch("foster_partial");
  json config = json::parse(slurp(kData + "/foster_mm1.json"));
  config["c"] = 2.0;
  EXPECT_EQ(run({"foster", "--config", write_config(partial, config).string(), "--out", (partial / "o").string()}),
            mcqn::cli::kExitConfigError);
}

TEST(Cli, Fnv1aKnownValues) {
  EXPECT_EQ(mcqn::cli::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(mcqn::cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}
