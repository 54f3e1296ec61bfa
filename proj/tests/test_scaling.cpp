#include <gtest/gtest.h>

#include "mcqn/estimators.hpp"
#include "mcqn/presets.hpp"
#include "mcqn/scaling.hpp"
#include "mcqn/stats.hpp"
#include "oracles/oracles.hpp"

using namespace mcqn;

namespace {

ValidatedSpec deterministic_single_server() {
  return validated(make_network({{0, DistributionSpec::deterministic(2.0),
                                  DistributionSpec::deterministic(1.0), {}}},
                                1, {}));
}

Eigen::VectorXd ones(int k) { return Eigen::VectorXd::Ones(k); }

}  // namespace

TEST(ScalingSequence, Construction) {
  const auto seq = make_scaling_sequence(preset("mm1"), ones(1), {10, 100, 1000}, 1);
  ASSERT_EQ(seq.points.size(), 3u);
  const std::vector<long long> expected{10, 100, 1000};
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(seq.points[n].state.queue_length(0), expected[n]);
    EXPECT_DOUBLE_EQ(seq.points[n].queue_ratio, 1.0);
    EXPECT_LE(seq.points[n].residual_ratio, seq.residual_bound / seq.points[n].r + 1e-15);
  }

  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  const auto tandem = make_scaling_sequence(preset("tandem"), half, {100}, 2);
  EXPECT_EQ(tandem.points[0].state.queue_lengths(), (std::vector<long long>{50, 50}));
}

TEST(ScalingSequence, RejectsBadSchedules) {
  EXPECT_THROW(make_scaling_sequence(preset("mm1"), ones(1), {100, 10}, 1), Error);
  EXPECT_THROW(make_scaling_sequence(preset("mm1"), ones(1), {}, 1), Error);
}

TEST(ScaledPath, UnitScaleIsIdentity) {
  const ValidatedSpec spec = preset("tandem");
  const SimState x0 = fresh_state(spec, std::vector<long long>{3, 1}, 4);
  const auto path = scaled_path(spec, x0, 1.0, 10.0, 5);
  std::vector<double> grid(path.grid.begin(), path.grid.end());
  const auto snaps = sample_on_grid(spec, x0, grid, 5);
  ASSERT_EQ(snaps.size(), path.grid.size());
  for (std::size_t g = 0; g < snaps.size(); ++g) {
    for (int k = 0; k < 2; ++k) EXPECT_EQ(path.queues[g][k], static_cast<double>(snaps[g].q[static_cast<std::size_t>(k)]));
  }
}

TEST(ScaledPath, MM1LargeScaleNearFluid) {
  const ValidatedSpec spec = preset("mm1");
  const auto seq = make_scaling_sequence(spec, ones(1), {1e4}, 6);
  const auto path = scaled_path(spec, seq.points[0].state, 1e4, 3.0, 7);
  std::size_t at_one = 0;
  while (path.grid[at_one] < 1.0 - 1e-12) ++at_one;
  EXPECT_NEAR(path.grid[at_one], 1.0, 3e-3);
  EXPECT_NEAR(path.queues[at_one][0], oracle::mm1_fluid_level(1.0, 0.5, 1.0, path.grid[at_one]), 0.05);
}

TEST(ScaledPath, DeterministicStaircase) {
  const ValidatedSpec spec = deterministic_single_server();
  const FluidSpec fspec = FluidSpec::from(spec);
  for (double r : {10.0, 100.0, 1000.0}) {
    const auto seq = make_scaling_sequence(spec, ones(1), {r}, 8);
    const auto path = scaled_path(spec, seq.points[0].state, r, 3.0, 9);
    const auto traj = fluid_trajectory(fspec, ones(1), 3.0);
    // Queue within a couple of customers of the line, residuals below 3.
    EXPECT_LE(uoc_distance(path, traj, 3.0), 5.0 / r) << r;
  }
}

TEST(UocDistance, DefinitionalCases) {
  const FluidSpec fspec = FluidSpec::from(preset("mm1"));
  const auto traj = fluid_trajectory(fspec, ones(1), 3.0);
  ScaledPath path;
  path.r = 1.0;
  for (int i = 0; i <= 30; ++i) {
    const double t = 0.1 * i;
    path.grid.push_back(t);
    path.queues.push_back(traj.level_at(t));
    path.residuals.push_back(0.0);
  }
  EXPECT_NEAR(uoc_distance(path, traj, 3.0), 0.0, 1e-12);
  for (auto& q : path.queues) q[0] += 0.1;
  EXPECT_NEAR(uoc_distance(path, traj, 3.0), 0.1, 1e-12);
  EXPECT_THROW(uoc_distance(path, traj, 4.0), Error);
}

TEST(ScalingProperty, DistanceNondecreasingInTime) {
  const ValidatedSpec spec = preset("tandem");
  const FluidSpec fspec = FluidSpec::from(spec);
  Eigen::VectorXd dir(2);
  dir << 0.7, 0.3;
  const auto seq = make_scaling_sequence(spec, dir, {50, 500}, 10);
  const auto traj = fluid_trajectory(fspec, dir, 4.0);
  for (const auto& pt : seq.points) {
    const auto path = scaled_path(spec, pt.state, pt.r, 4.0, 11);
    double prev = 0.0;
    for (double t = 0.0; t <= 4.0; t += 0.05) {
      const double d = uoc_distance(path, traj, t);
      EXPECT_GE(d, prev);
      prev = d;
    }
  }
}

TEST(Convergence, MM1DistanceBelowThresholdMostSeeds) {
  const ValidatedSpec spec = preset("mm1");
  const FluidSpec fspec = FluidSpec::from(spec);
  const auto seq = make_scaling_sequence(spec, ones(1), {1e4}, 12);
  const auto traj = fluid_trajectory(fspec, ones(1), 3.0);
  int below = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto path = scaled_path(spec, seq.points[0].state, 1e4, 3.0, replication_seed(13, s));
    below += uoc_distance(path, traj, 3.0) < 0.05;
  }
  EXPECT_GE(below, 95);
}

TEST(Convergence, DeterministicNetworkWithinStaircaseBound) {
  const ValidatedSpec spec = deterministic_single_server();
  const auto seq = make_scaling_sequence(spec, ones(1), {10, 100, 1000}, 14);
  const auto table = convergence_experiment(spec, seq, 3.0, 4, 15);
  for (const auto& row : table.rows) EXPECT_LE(row.distance.mean, 5.0 / row.r) << row.r;
}

TEST(Convergence, UnstableNetworkReportsTable) {
  const ValidatedSpec spec = preset("rybko_stolyar_unstable");
  Eigen::VectorXd dir(4);
  dir << 1, 0, 0, 0;
  const auto seq = make_scaling_sequence(spec, dir, {50, 200}, 16);
  const auto table = convergence_experiment(spec, seq, 5.0, 5, 17);
  ASSERT_EQ(table.rows.size(), 2u);
  for (const auto& row : table.rows) EXPECT_TRUE(std::isfinite(row.distance.mean));
  const std::string csv = to_csv(table);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r_n,seed_count,mean_dist,ci_low,ci_high");
}
