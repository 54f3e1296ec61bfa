#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace mcqn {

/// Sample mean with a normal-approximation 95% confidence interval.
struct MeanEstimate {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  double half_width() const { return 0.5 * (ci_high - ci_low); }
};

inline constexpr double kNormalQuantile975 = 1.959963984540054;

MeanEstimate estimate_mean(std::span<const double> samples);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Runs body(i) for i in [0, n) on a pool of worker threads. Each index is
/// processed exactly once; callers write results by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mcqn
