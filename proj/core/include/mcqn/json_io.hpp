#pragma once

#include <string>

#include "mcqn/fluid.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/network.hpp"
#include "mcqn/simulator.hpp"

namespace mcqn {

/// Network format:
///   {"classes": [{"id": 1, "station": 1,
///                 "arrival": {"family": "exponential", "params": {"rate": 0.5}} | null,
///                 "service": {"family": "gamma", "params": {"shape": 2, "scale": 0.25}},
///                 "route": [{"to": 2, "prob": 0.3}]}, ...],
///    "discipline": {"kind": "static_priority", "ranks": [1, 0, ...]}}
/// Ids and stations are 1-based; ids must be 1..K. Params per family:
/// exponential {rate}, gamma {shape, scale}, deterministic {value},
/// uniform {low, high}. Ranks are listed in class-id order. Rates are the
/// reciprocal means. Throws SpecError on malformed input.
NetworkSpec parse_network(const std::string& text);
std::string network_to_json(const NetworkSpec& spec);

/// {"queues": [[ages, oldest first], ...], "u": [...], "v": [...]} with one
/// entry per class in each array; u is 0 for classes without arrivals.
/// Clock is 0, so a customer of age a entered at -a. Throws SpecError when the
/// state is malformed or violates a state invariant.
SimState parse_initial_state(const std::string& text, const ValidatedSpec& spec);
std::string initial_state_to_json(const SimState& state);

/// Full segment structure: breakpoints (time, level), segments (start, end,
/// rates, slope) and empty_time.
std::string trajectory_to_json(const FluidTrajectory& traj);
FluidTrajectory parse_trajectory(const std::string& text);

/// {"form": "weighted_linear_squared", "xi": [...], "w1": {"c":..,"p":..}, "w2": {...},
///  "w3": {...}}; weighted_quadratic carries "matrix": [[...]], max_linear_squared
/// carries "pieces": [[...], ...].
std::string candidate_to_json(const LyapunovCandidate& v);
LyapunovCandidate parse_candidate(const std::string& text);

}  // namespace mcqn
