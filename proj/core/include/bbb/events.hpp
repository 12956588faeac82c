#pragma once

// Regeneration-event detectors and extent hitting times.
//
// Particle indices are 0-based here: "particle 1" of the mathematical
// description is slot 0. With m = ceil((N + 1) / 2):
//   G' = slots 1 .. m-1      (left cluster, target ball B(-5 e1, r_N))
//   D' = slots m .. N-1      (right cluster, target ball B(5 e1, r_N))
// r_N = 1 / (4 (N + 1)) and gamma = 0 for odd N, -5/(N-1) e1 for even N.
//
// Detection only looks at recorded instants (grid times and event times).
// Branch events are recorded exactly, so the no-branching conditions are
// exact; ball conditions are exact at the window endpoints and checked on the
// grid in the interior. Open balls are used for B(y, r); the descendant
// excursion bound uses <= r_N.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/engine.hpp"
#include "bbb/lineage.hpp"

namespace bbb {

double r_N(std::size_t N);
/// Throws DomainError for N < 3.
Point gamma_center(std::size_t N, std::size_t d);

struct AReport {
  bool no_branching = false;  ///< no BBB branch event in [t, t+1]
  bool clusters = false;      ///< G' near -5 e1 and D' near 5 e1 at t+1
  bool center = false;        ///< slot 0 near gamma at t+1
  bool holds() const noexcept { return no_branching && clusters && center; }
};

struct BReport {
  bool branching = false;   ///< slot-0 line branches >= N-1 times, others never
  bool confined = false;    ///< every descendant stays within r_N of its ancestor
  bool holds() const noexcept { return branching && confined; }
};

struct EventReport {
  double t = 0.0;
  std::optional<AReport> a;
  std::optional<BReport> b;
};

std::string to_json(const EventReport& r);

/// Requires N >= 3 and recorded observations at t and t+1.
AReport detect_A(const Trajectory& traj, double t);

/// Requires N >= 3, a record covering [t+1, t+2], and samples at t+1 for the
/// BBB particles of time t+1.
BReport detect_B(const LineageRecord& rec, double t);

/// Both parts, with A evaluated on the projected BBB trajectory.
EventReport detect_events(const Trajectory& traj, const LineageRecord& rec, double t);

struct SPartition {
  std::vector<std::size_t> G;
  std::vector<std::size_t> C;
  std::vector<std::size_t> D;
};

/// Membership witness for the set S (positions taken as given, no recentering).
/// Each particle is assigned to the ball of radius 2 r_N it lies in; the
/// assignment is forced because the balls are disjoint. Throws DomainError
/// unless c holds exactly N >= 3 particles.
std::optional<SPartition> in_S(const Configuration& c);

/// Earliest recorded time >= 1 (from_one) or >= 0 with extent <= L.
/// With grid_only, event instants are skipped.
std::optional<double> first_extent_time(const Trajectory& traj, double L, bool from_one,
                                        bool grid_only = false);

/// T_1 = first_extent_time(from_one), T_{i+1} = first recorded time >= T_i + 2
/// with extent <= L.
std::vector<double> extent_stopping_times(const Trajectory& traj, double L, bool from_one = true,
                                          bool grid_only = false);

struct RegenerationSearch {
  std::vector<double> T;              ///< extent stopping times examined
  std::vector<EventReport> reports;   ///< one per examined T_i with T_i + 2 covered
  std::vector<double> tau;            ///< T_i + 1 for T_i where A and B hold
  std::vector<double> rho;            ///< T_i + 2 for the same
};

/// Scans grid-only extent stopping times and tests A and B at each.
RegenerationSearch find_regenerations(const Trajectory& traj, const LineageRecord& rec, double L,
                                      bool from_one = true);

/// Every BBB particle at time t+2 descends from the slot-0 particle of time t+1.
bool all_descend_from_leader(const LineageRecord& rec, double t);

}  // namespace bbb
