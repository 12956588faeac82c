#pragma once

// Exact event-driven simulation of barycentric Brownian bees.
//
// Between branch events the particles are independent Brownian motions; the
// population branches at total rate n (one unit-rate clock per particle), the
// parent is uniform, and once the population is at capacity N the particle
// farthest from the (N+1)-particle barycenter is removed. Positions are only
// ever advanced with the exact Gaussian law over the elapsed duration, so the
// observation grid selects recording instants and introduces no dynamics error.
//
// Randomness is consumed from the replica stream in a fixed order:
//   1. the initial configuration (GaussianCloud only), particle-major;
//   2. the first inter-branch wait;
//   3. for each stop (grid instant or branch event), the Gaussian increments
//      of particles 0..n-1; at a branch event, then the parent index and the
//      next wait.
// The lineage module relies on this order to couple both constructions.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/manifest.hpp"
#include "bbb/rng.hpp"

namespace bbb {

struct BranchEvent {
  double time = 0.0;
  std::size_t parent = 0;
  /// Slot overwritten by the newborn; empty during the growth phase, where
  /// the newborn is appended at index `newborn_slot` instead.
  std::optional<std::size_t> killed;
  std::size_t newborn_slot = 0;
  Point barycenter_before;
};

struct Observation {
  double time = 0.0;
  Configuration config;
  bool on_grid = false;
};

struct Trajectory {
  RunManifest manifest;
  std::vector<Observation> observations;
  std::vector<BranchEvent> events;
};

/// Index of the particle farthest from (x_parent + sum_l x_l) / (N + 1).
/// Squared distances are compared exactly; ties go to the lowest index.
/// Throws DomainError unless c is at capacity and parent < N.
std::size_t kill_index(const Configuration& c, std::size_t parent);

/// Below capacity the parent's copy is appended; at capacity the slot from
/// kill_index is overwritten with the parent's position.
std::pair<Configuration, BranchEvent> apply_branch(const Configuration& c, std::size_t parent,
                                                   double time = 0.0);
BranchEvent apply_branch_in_place(Configuration& c, std::size_t parent, double time = 0.0);

/// Exponential wait with rate n (n >= 1).
double sample_interbranch(RngStream& rng, std::size_t n);

/// Draws the manifest's initial configuration (capacity N).
Configuration initial_configuration(const RunManifest& m, RngStream& rng);

struct SimulationHooks {
  /// Called at every recorded instant: grid times and just after each branch
  /// event. Returning false stops the run.
  std::function<bool(double time, const Configuration& config, bool on_grid)> on_observation;
  std::function<void(const BranchEvent& event)> on_event;
};

/// Runs from `initial` at time 0 and stops at the last entry of `grid`
/// (ascending, first entry 0). Returns the time at which the run ended.
double run_exact(Configuration initial, std::span<const double> grid, RngStream& rng,
                 const SimulationHooks& hooks);

/// Streaming form of simulate: nothing is stored.
double simulate_streaming(const RunManifest& m, RngStream& rng, const SimulationHooks& hooks);

/// Full trajectory for one replica. Throws DomainError for an invalid manifest.
Trajectory simulate(const RunManifest& m, RngStream rng);

/// Barycenter displacement X̄(horizon) - X̄(0) of one replica.
Point barycenter_displacement(const RunManifest& m, RngStream rng);

}  // namespace bbb
