#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "mcqn/json_io.hpp"
#include "mcqn/presets.hpp"

using namespace mcqn;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(NetworkJson, ParsesFile) {
  const ValidatedSpec spec = validated(parse_network(slurp(MCQN_TEST_DATA_DIR "/tandem_network.json")));
  EXPECT_EQ(spec.num_classes(), 2);
  EXPECT_EQ(spec.num_stations(), 2);
  EXPECT_DOUBLE_EQ(spec.arrival_rates()[0], 0.5);
  EXPECT_DOUBLE_EQ(spec.arrival_rates()[1], 0.0);
  EXPECT_DOUBLE_EQ(spec.service_rates()[1], 1.0);  // gamma mean 2 * 0.5
  EXPECT_DOUBLE_EQ(spec.routing()(0, 1), 1.0);
  EXPECT_EQ(spec.discipline().kind, DisciplineKind::kWorkConservingDefault);
}

TEST(NetworkJson, RoundTripsPresets) {
  for (const auto& name : preset_names()) {
    const NetworkSpec raw = preset_network(name);
    const NetworkSpec back = parse_network(network_to_json(raw));
    EXPECT_EQ(back.num_classes, raw.num_classes) << name;
    EXPECT_EQ(back.constituency, raw.constituency) << name;
    EXPECT_EQ(back.routing, raw.routing) << name;
    EXPECT_EQ(back.arrival_rates, raw.arrival_rates) << name;
    EXPECT_EQ(back.service_rates, raw.service_rates) << name;
    EXPECT_EQ(back.discipline, raw.discipline) << name;
  }
}

TEST(NetworkJson, Malformed) {
  EXPECT_THROW(parse_network("{"), SpecError);
  EXPECT_THROW(parse_network(R"({"classes": []})"), SpecError);
  EXPECT_THROW(parse_network(R"({"classes": [{"id": 2, "station": 1,
      "service": {"family": "exponential", "params": {"rate": 1}}}]})"),
               SpecError);
  EXPECT_THROW(parse_network(R"({"classes": [{"id": 1, "station": 1,
      "service": {"family": "pareto", "params": {}}}]})"),
               SpecError);
  EXPECT_THROW(parse_network(R"({"classes": [{"id": 1, "station": 1,
      "service": {"family": "exponential", "params": {"rate": 1}},
      "route": [{"to": 3, "prob": 0.5}]}]})"),
               SpecError);
}

TEST(InitialStateJson, AgesAndResiduals) {
  const ValidatedSpec spec = preset("tandem");
  const SimState s = parse_initial_state(R"({"queues": [[3.0, 1.0], []], "u": [0.4, 0], "v": [0.7, 0]})", spec);
  EXPECT_EQ(s.queue_length(0), 2);
  EXPECT_DOUBLE_EQ(s.queues[0][0], -3.0);
  EXPECT_DOUBLE_EQ(s.v[0], 0.7);
  EXPECT_DOUBLE_EQ(s.z[0], 1.0);
  EXPECT_TRUE(check_state(spec, s).empty());
  const SimState again = parse_initial_state(initial_state_to_json(s), spec);
  EXPECT_EQ(again.queues, s.queues);
  EXPECT_EQ(again.u, s.u);
  EXPECT_EQ(again.v, s.v);

  // Busy class without residual service time.
  EXPECT_THROW(parse_initial_state(R"({"queues": [[1.0], []], "u": [0.4, 0], "v": [0, 0]})", spec), SpecError);
  // Younger customer ahead of an older one.
  EXPECT_THROW(parse_initial_state(R"({"queues": [[1.0, 2.0], []], "u": [0.4, 0], "v": [1, 0]})", spec), SpecError);
  EXPECT_THROW(parse_initial_state(R"({"queues": [[]], "u": [0.4], "v": [0]})", spec), SpecError);
}

TEST(TrajectoryJson, RoundTrip) {
  const FluidSpec fspec = FluidSpec::from(preset("single_station_priority"));
  Eigen::VectorXd q0(2);
  q0 << 1.0, 0.5;
  const FluidTrajectory traj = fluid_trajectory(fspec, q0, 8.0);
  const FluidTrajectory back = parse_trajectory(trajectory_to_json(traj));
  EXPECT_EQ(back.times(), traj.times());
  EXPECT_EQ(back.levels(), traj.levels());
  EXPECT_EQ(back.rates(), traj.rates());
  EXPECT_EQ(back.empty_time(), traj.empty_time());
  EXPECT_THROW(parse_trajectory(R"({"breakpoints": [{"time": 1, "level": [0]}]})"), SpecError);
}

TEST(CandidateJson, AllForms) {
  const auto lin = LyapunovCandidate::weighted_linear_squared(Eigen::Vector2d(0.3, 0.7), {0.09, 2},
                                                              {0.49, 2}, {0.1, 1});
  Eigen::MatrixXd a(2, 2);
  a << 2, 0.5, 0.5, 1;
  const auto quad = LyapunovCandidate::weighted_quadratic(a, {0.5, 2}, {3, 2}, {1, 1});
  const auto maxlin = LyapunovCandidate::max_linear_squared(
      {Eigen::Vector2d(1, 0.2), Eigen::Vector2d(0.2, 1)}, {0.04, 2}, {1.44, 2}, {1, 1});
  for (const auto* v : {&lin, &quad, &maxlin}) {
    const auto back = parse_candidate(candidate_to_json(*v));
    EXPECT_EQ(back.form(), v->form());
    const Eigen::Vector2d q(1.5, 0.25);
    EXPECT_DOUBLE_EQ(back.value(Eigen::VectorXd(q)), v->value(Eigen::VectorXd(q)));
    EXPECT_EQ(back.w3().c, v->w3().c);
  }
  EXPECT_THROW(parse_candidate(R"({"form": "weighted_linear_squared", "xi": [1]})"), SpecError);
  EXPECT_THROW(parse_candidate(R"({"form": "cubic"})"), SpecError);
}
