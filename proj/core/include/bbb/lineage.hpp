#pragma once

// Barycentric Brownian bees embedded in a full dyadic branching Brownian
// motion, with ancestry.
//
// Node ids are 0-based and assigned in birth order, so the node born at a
// branch event always has id nodes.size() - 1 at that moment (the 0-based form
// of "the newborn has index N(tau)"). The index vector I(t) maps BBB slots to
// node ids.
//
// Randomness: BBB-indexed particles, the BBB branch clock and parent choices
// use the replica stream in exactly the order the engine uses, so the
// projected BBB coincides pathwise with engine::simulate for the same stream.
// Everything else (motion and branching of BBM particles that are no longer
// in the BBB) uses substream 1 of the same stream.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/engine.hpp"
#include "bbb/manifest.hpp"
#include "bbb/rng.hpp"

namespace bbb {

struct BbmNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  double birth = 0.0;
  /// Time tracking stopped: end of the simulated window, or the pruning time
  /// for lines that left the BBB (see LineageOptions::retain_after_exit).
  double end = 0.0;
  std::vector<std::size_t> children;
  /// Path samples: times[s] with coordinates coords[s * dim, (s + 1) * dim).
  std::vector<double> times;
  std::vector<double> coords;

  std::size_t sample_count() const noexcept { return times.size(); }
  std::span<const double> sample(std::size_t s, std::size_t dim) const {
    return {coords.data() + s * dim, dim};
  }
  /// Sample recorded at time t (within 1e-12 relative); nullopt if none.
  std::optional<std::size_t> sample_at(double t) const;
};

struct IndexChange {
  double time = 0.0;
  std::vector<std::size_t> index;  ///< node id of each BBB slot
};

struct LineageRecord {
  RunManifest manifest;
  double window = 0.0;
  std::size_t dim = 1;
  std::vector<BbmNode> nodes;
  /// Piecewise-constant I(t): entry i holds from its time until the next entry.
  std::vector<IndexChange> index_history;
  std::vector<BranchEvent> events;
  /// Grid instants at which every tracked node was sampled.
  std::vector<double> grid;

  /// I(t), right-continuous (the value just after any change at t).
  const std::vector<std::size_t>& index_at(double t) const;
  /// Position of node `id` at a recorded instant t; throws DomainError otherwise.
  Point position(std::size_t id, double t) const;
  /// True when `id` equals `ancestor` or descends from it.
  bool descends_from(std::size_t id, std::size_t ancestor) const;
  /// Number of nodes ever created.
  std::size_t population() const noexcept { return nodes.size(); }
  /// Nodes alive in the BBM at time t (born at or before t).
  std::size_t population_at(double t) const;
};

struct LineageOptions {
  /// Lines that leave the BBB are simulated for this long afterwards, then
  /// frozen (their `end` is set). Infinity keeps the full BBM.
  double retain_after_exit = std::numeric_limits<double>::infinity();
  /// Resource budget on the number of BBM nodes.
  std::size_t max_nodes = 4'000'000;
  /// Longest window accepted.
  double window_cap = 10.0;
};

/// Simulates the BBM on [0, window] with the BBB embedded via the index
/// vector. The manifest horizon is ignored in favour of `window`.
/// Throws DomainError when window exceeds options.window_cap or is negative,
/// and ResourceError when the population exceeds options.max_nodes (the
/// partial record is discarded).
LineageRecord simulate_bbm_embedded(const RunManifest& m, RngStream rng, double window,
                                    const LineageOptions& options = {});

/// Projects X_j(t) = W_{I_j(t)}(t) at every grid instant and every BBB event.
Trajectory project_bbb(const LineageRecord& rec);

}  // namespace bbb
