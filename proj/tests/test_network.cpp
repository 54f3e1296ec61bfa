#include <gtest/gtest.h>

#include "mcqn/network.hpp"
#include "mcqn/presets.hpp"
#include "oracles/oracles.hpp"

using namespace mcqn;

namespace {

NetworkSpec single_class(double arrival_mean, double service_mean) {
  return make_network({{0, DistributionSpec::exponential(1.0 / arrival_mean),
                        DistributionSpec::exponential(1.0 / service_mean), {}}},
                      1, {});
}

NetworkSpec with_routing(Eigen::MatrixXd p) {
  const int K = static_cast<int>(p.rows());
  std::vector<ClassSpec> classes(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto& c = classes[static_cast<std::size_t>(k)];
    c.station = 0;
    if (k == 0) c.arrival = DistributionSpec::exponential(0.1);
    c.service = DistributionSpec::exponential(10.0);
    for (int l = 0; l < K; ++l) {
      if (p(k, l) != 0.0) c.routes.emplace_back(l, p(k, l));
    }
  }
  return make_network(classes, 1, {});
}

}  // namespace

TEST(Network, MinimalSpecIsValid) {
  const auto result = validate_spec(single_class(2.0, 1.0));
  ASSERT_TRUE(result.ok());
  EXPECT_TRUE(result.spec->warnings().empty());
  EXPECT_DOUBLE_EQ(result.spec->arrival_rates()[0], 0.5);
  EXPECT_DOUBLE_EQ(result.spec->service_rates()[0], 1.0);
}

TEST(Network, IdentityRoutingRejected) {
  const auto result = validate_spec(with_routing(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_FALSE(result.ok());
  EXPECT_TRUE(result.has(finding_code::kSpectralRadius));
}

TEST(Network, DeterministicArrivalsWarn) {
  NetworkSpec raw = preset_network("tandem");
  raw.arrival_distributions[0] = DistributionSpec::deterministic(2.0);
  const auto result = validate_spec(raw);
  ASSERT_TRUE(result.ok());
  ASSERT_EQ(result.spec->warnings().size(), 1u);
  EXPECT_EQ(result.spec->warnings()[0].code, finding_code::kUnboundedSpreadOut);
}

TEST(Network, StructuralErrors) {
  NetworkSpec raw = preset_network("tandem");
  raw.constituency(0, 1) = 1.0;  // class 2 now at two stations
  EXPECT_TRUE(validate_spec(raw).has(finding_code::kConstituency));

  raw = preset_network("mm1");
  raw.arrival_rates[0] = -1.0;
  EXPECT_FALSE(validate_spec(raw).ok());

  raw = preset_network("tandem");
  raw.routing(0, 0) = 0.5;
  EXPECT_TRUE(validate_spec(raw).has(finding_code::kRoutingRowSum));

  raw = preset_network("rybko_stolyar_unstable");
  raw.discipline.ranks = {0, 0, 1, 0};  // tie at station 1 (classes 1 and 4)
  EXPECT_TRUE(validate_spec(raw).has(finding_code::kPriorityRanks));
}

TEST(Network, EffectiveArrivalRates) {
  EXPECT_NEAR(effective_arrival_rates(preset("mm1"))[0], 0.5, 1e-15);
  const auto tandem = effective_arrival_rates(preset("tandem"));
  EXPECT_NEAR(tandem[0], 0.5, 1e-12);
  EXPECT_NEAR(tandem[1], 0.5, 1e-12);
  const auto rs = effective_arrival_rates(preset("rybko_stolyar_unstable"));
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(rs[k], 1.0, 1e-12);
}

TEST(Network, TrafficIntensity) {
  EXPECT_NEAR(traffic_intensity(preset("mm1"))[0], 0.5, 1e-12);
  const auto unstable = traffic_intensity(preset("rybko_stolyar_unstable"));
  EXPECT_NEAR(unstable[0], 0.7, 1e-12);
  EXPECT_NEAR(unstable[1], 0.7, 1e-12);
  const auto stable = traffic_intensity(preset("rybko_stolyar_stable"));
  EXPECT_NEAR(stable[0], 0.4, 1e-12);
  EXPECT_NEAR(stable[1], 0.4, 1e-12);

  NetworkSpec raw = preset_network("tandem");
  raw.arrival_distributions[0].reset();
  raw.arrival_rates[0] = 0.0;
  EXPECT_EQ(traffic_intensity(validated(raw)), Eigen::VectorXd::Zero(2));
}

TEST(Network, SpectralRadius) {
  Eigen::MatrixXd tandem(2, 2);
  tandem << 0, 1, 0, 0;
  EXPECT_EQ(spectral_radius(tandem).value, 0.0);
  EXPECT_NEAR(spectral_radius(0.5 * Eigen::MatrixXd::Identity(3, 3)).value, 0.5, 1e-12);
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 0.5, 0.5, 0;
  EXPECT_NEAR(spectral_radius(swap).value, 0.5, 1e-12);
}

TEST(Network, SpectralRadiusMatchesEigensolver) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + trial % 6;
    Eigen::MatrixXd p(K, K);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) p(i, j) = unit(rng) < 0.5 ? unit(rng) : 0.0;
      const double s = p.row(i).sum();
      if (s > 0.0) p.row(i) *= unit(rng) / s;
    }
    EXPECT_NEAR(spectral_radius(p).value, oracle::eigen_spectral_radius(p), 1e-9) << p;
  }
}

// Every validated spec: (I - P^T) lambda = alpha, lambda >= alpha, and rho is
// homogeneous of degree 1 in alpha.
TEST(NetworkProperty, FirstMomentIdentities) {
  for (const auto& name : preset_names()) {
    const ValidatedSpec spec = preset(name);
    const Eigen::VectorXd lambda = effective_arrival_rates(spec);
    const int K = spec.num_classes();
    const Eigen::VectorXd residual =
        (Eigen::MatrixXd::Identity(K, K) - spec.routing().transpose()) * lambda - spec.arrival_rates();
    EXPECT_LE(residual.lpNorm<Eigen::Infinity>(), 1e-10) << name;
    EXPECT_TRUE(((lambda - spec.arrival_rates()).array() >= -1e-15).all()) << name;
    EXPECT_LE((lambda - oracle::neumann_arrival_rates(spec.arrival_rates(), spec.routing()))
                  .lpNorm<Eigen::Infinity>(),
              1e-12)
        << name;
    if (spec.routing().isZero()) {
      EXPECT_EQ(lambda, spec.arrival_rates()) << name;
    }

    for (double beta : {0.5, 2.0, 4.0}) {
      NetworkSpec raw = spec.raw();
      raw.arrival_rates *= beta;
      for (auto& d : raw.arrival_distributions) {
        if (d) d = DistributionSpec::exponential(d->first * beta);
      }
      const ValidatedSpec scaled = validated(raw);
      EXPECT_LE((traffic_intensity(scaled) - beta * traffic_intensity(spec)).lpNorm<Eigen::Infinity>(),
                1e-12)
          << name << " beta " << beta;
    }
  }
}

TEST(NetworkProperty, ValidationIsIdempotent) {
  for (const auto& name : preset_names()) {
    const ValidatedSpec once = preset(name);
    const auto twice = validate_spec(once.raw());
    ASSERT_TRUE(twice.ok());
    EXPECT_EQ(twice.spec->warnings(), once.warnings()) << name;
  }
}

TEST(Presets, Definitions) {
  const ValidatedSpec mm1 = preset("mm1");
  EXPECT_EQ(mm1.num_classes(), 1);
  EXPECT_EQ(mm1.num_stations(), 1);
  EXPECT_DOUBLE_EQ(mm1.arrival_rates()[0], 0.5);
  EXPECT_DOUBLE_EQ(mm1.service_rates()[0], 1.0);

  const ValidatedSpec rs = preset("rybko_stolyar_unstable");
  EXPECT_EQ(rs.discipline().kind, DisciplineKind::kStaticPriority);
  // Station 1 serves {1, 4} with priority to 4; station 2 serves {2, 3} with priority to 2.
  EXPECT_EQ(rs.station_of(0), 0);
  EXPECT_EQ(rs.station_of(3), 0);
  EXPECT_EQ(rs.station_of(1), 1);
  EXPECT_EQ(rs.station_of(2), 1);
  EXPECT_LT(rs.discipline().ranks[3], rs.discipline().ranks[0]);
  EXPECT_LT(rs.discipline().ranks[1], rs.discipline().ranks[2]);
  EXPECT_THROW(preset("no_such_network"), SpecError);
}
