#pragma once

#include <cstdint>
#include <random>

#include "mcqn/network.hpp"

namespace mcqn {

/// SplitMix64 finalizer; used only to derive well-separated seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `stream` under master seed `seed`.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Seed for replication `index` of an experiment run under `seed`.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t index) {
  return substream_seed(seed ^ 0xa0761d6478bd642fULL, index);
}

using Engine = std::mt19937_64;

/// One strictly positive draw from `dist`.
double draw_primitive(const DistributionSpec& dist, Engine& engine);

/// Destination class of a routing draw from `row`, or -1 for exit.
int draw_route(const Eigen::Ref<const Eigen::RowVectorXd>& row, Engine& engine);

}  // namespace mcqn
