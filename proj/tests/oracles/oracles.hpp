#pragma once

// Reference computations that share no code with the library. Each one
// reaches its value by a different route than the code it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Stationary mean number in system of M/M/1: rho / (1 - rho).
inline double mm1_mean_queue(double arrival_rate, double service_rate) {
  const double rho = arrival_rate / service_rate;
  return rho / (1.0 - rho);
}

// Mean time for M/M/1 to empty from n customers: n busy periods of mean 1/(mu - alpha).
inline double mm1_drain_time(double n, double arrival_rate, double service_rate) {
  return n / (service_rate - arrival_rate);
}

// Fluid M/M/1: Q(t) = max(0, q0 - (mu - alpha) t).
inline double mm1_fluid_level(double q0, double arrival_rate, double service_rate, double t) {
  return std::max(0.0, q0 - (service_rate - arrival_rate) * t);
}

// lambda = sum_n (P^T)^n alpha, truncated once the terms are below 1e-15.
inline Eigen::VectorXd neumann_arrival_rates(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& routing) {
  Eigen::VectorXd term = alpha;
  Eigen::VectorXd sum = alpha;
  for (int n = 0; n < 100000 && term.lpNorm<Eigen::Infinity>() > 1e-15; ++n) {
    term = routing.transpose() * term;
    sum += term;
  }
  return sum;
}

// Largest eigenvalue modulus from a general eigensolver.
inline double eigen_spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    best = std::max(best, std::abs(solver.eigenvalues()[i]));
  }
  return best;
}

struct BirthDeathRun {
  double time_average = 0.0;  // time-average queue length
  double idle_fraction = 0.0;
  double end_time = 0.0;
  long long final_queue = 0;
  std::uint64_t events = 0;
};

// Continuous-time birth-death chain with rates (alpha, mu), simulated by
// competing exponential clocks. Stops at `horizon_time` or after `max_events`.
inline BirthDeathRun birth_death_mm1(double alpha, double mu, long long q0, double horizon_time,
                                     std::uint64_t max_events, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BirthDeathRun out;
  long long q = q0;
  double t = 0.0, area = 0.0, idle = 0.0;
  while (out.events < max_events) {
    const double total = q > 0 ? alpha + mu : alpha;
    const double dt = -std::log1p(-unit(rng)) / total;
    const double step = std::min(dt, horizon_time - t);
    area += static_cast<double>(q) * step;
    if (q == 0) idle += step;
    t += step;
    if (t >= horizon_time) break;
    q += unit(rng) * total < alpha ? 1 : -1;
    ++out.events;
  }
  out.end_time = t;
  out.time_average = t > 0.0 ? area / t : 0.0;
  out.idle_fraction = t > 0.0 ? idle / t : 0.0;
  out.final_queue = q;
  return out;
}

// Time for the birth-death chain to first hit 0 from q0.
inline double birth_death_hitting_time(double alpha, double mu, long long q0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long long q = q0;
  double t = 0.0;
  while (q > 0) {
    t += -std::log1p(-unit(rng)) / (alpha + mu);
    q += unit(rng) * (alpha + mu) < alpha ? 1 : -1;
  }
  return t;
}

// Drain time from q0 customers with given residual interarrival and service
// times; later draws are exponential.
inline double mm1_drain_time_from(double alpha, double mu, long long q0, double next_arrival,
                                  double residual_service, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> arrival(alpha), service(mu);
  long long q = q0;
  double departure = residual_service;
  double t = 0.0;
  while (q > 0) {
    if (next_arrival < departure) {
      t = next_arrival;
      ++q;
      next_arrival = t + arrival(rng);
    } else {
      t = departure;
      --q;
      departure = t + service(rng);
    }
  }
  return t;
}

struct SampleStats {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal half-width
};

inline SampleStats summarize(const std::vector<double>& xs) {
  SampleStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  s.half_width = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  return s;
}

}  // namespace oracle
