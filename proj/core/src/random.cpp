#include "mcqn/random.hpp"

namespace mcqn {

double draw_primitive(const DistributionSpec& dist, Engine& engine) {
  switch (dist.family) {
    case DistributionFamily::kDeterministic:
      return dist.first;
    case DistributionFamily::kExponential: {
      std::exponential_distribution<double> law(dist.first);
      double x = 0.0;
      while (!(x > 0.0)) x = law(engine);
      return x;
    }
    case DistributionFamily::kGamma: {
      std::gamma_distribution<double> law(dist.first, dist.second);
      double x = 0.0;
      while (!(x > 0.0)) x = law(engine);
      return x;
    }
    case DistributionFamily::kUniform: {
      std::uniform_real_distribution<double> law(dist.first, dist.second);
      double x = 0.0;
      while (!(x > 0.0)) x = law(engine);
      return x;
    }
  }
  throw Error("unknown distribution family");
}

int draw_route(const Eigen::Ref<const Eigen::RowVectorXd>& row, Engine& engine) {
  const double total = row.sum();
  if (total <= 0.0) return -1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x = unit(engine);
  double cumulative = 0.0;
  for (Eigen::Index l = 0; l < row.size(); ++l) {
    if (row[l] <= 0.0) continue;
    cumulative += row[l];
    if (x < cumulative) return static_cast<int>(l);
  }
  return -1;
}

}  // namespace mcqn
