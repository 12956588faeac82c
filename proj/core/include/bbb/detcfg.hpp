#pragma once

// Deterministic weighted configurations: fixed positions x_1..x_N carrying
// non-negative integer weights that sum to N. Branching at site l adds one to
// w_l; the positive-weight site farthest from the (N+1)-barycenter
// (sum_i w_i x_i + x_l) / (N + 1) loses one.
//
// Indices are 0-based. Distance comparisons are exact on squared distances
// with ties going to the lowest index, matching engine::kill_index.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/rng.hpp"

namespace bbb {

using Weights = std::vector<std::uint32_t>;

/// Zero-weight branch site.
class InvalidBranch : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The input ties two candidate distances within the ambiguity band.
class AmbiguousConfiguration : public DomainError {
 public:
  using DomainError::DomainError;
};

class WeightedConfig {
 public:
  /// Throws DomainError unless positions.size() == weights.size() == N,
  /// sum(weights) == N and positions share one dimension.
  WeightedConfig(std::vector<Point> positions, Weights weights);
  /// All weights one.
  static WeightedConfig uniform(std::vector<Point> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  std::size_t dim() const noexcept { return positions_.front().dim(); }
  const std::vector<Point>& positions() const noexcept { return positions_; }
  const Weights& weights() const noexcept { return weights_; }
  std::size_t positive_sites() const noexcept;

 private:
  std::vector<Point> positions_;
  Weights weights_;
};

/// Lowest-index argmax over positive-weight sites of |x_j - b| with
/// b = (sum w_i x_i + x_l) / (N + 1). Throws InvalidBranch when w_l == 0.
std::size_t select_kill(const std::vector<Point>& x, const Weights& w, std::size_t l);

/// w + e_l - e_k with k = select_kill(x, w, l).
Weights branch_update(const std::vector<Point>& x, const Weights& w, std::size_t l);

/// Phase rule: b0 = N^-1 sum w_i x_i, l = lowest-index argmin over positive
/// sites of |x_i - b0|. Two positive sites of equal weight are an exact tie and
/// return the lower index without comparing distances.
std::size_t closest_to_barycenter(const std::vector<Point>& x, const Weights& w);

struct CollapseTrace {
  std::vector<std::size_t> sequence;   ///< branch sites l_1..l_m
  std::vector<std::size_t> kills;      ///< killed sites k_1..k_m
  std::vector<Weights> weights;        ///< w^(0)..w^(m)
  std::vector<std::size_t> phase_starts;  ///< step index at which each phase began

  std::size_t length() const noexcept { return sequence.size(); }
};

enum class AmbiguityCheck {
  /// Every argmin/argmax decision taken along the trace must be separated from
  /// the runner-up by more than the ambiguity band.
  Decisions,
  /// Additionally require unambiguity_margin(x, MarginScope::Generic) above
  /// the band.
  Global,
};

/// Ambiguity band 1e-9 * (1 + max |x_i|).
double ambiguity_tolerance(const std::vector<Point>& x);

/// Collapses (x, w) to a single positive site by phases: pick l by
/// closest_to_barycenter, branch at l until a kill empties a site, repeat.
/// Throws AmbiguousConfiguration (naming the tying pair and the current
/// weights) when a decision falls inside the ambiguity band, except for the
/// exact equal-weight two-site tie resolved by closest_to_barycenter, and
/// std::logic_error if a step would kill the branching site (which the
/// collapse argument rules out for unambiguous inputs).
CollapseTrace collapse(const WeightedConfig& cfg, AmbiguityCheck check = AmbiguityCheck::Decisions);

/// All non-negative integer N-vectors summing to N+1, lexicographic order.
/// There are C(2N, N-1) of them.
std::vector<Weights> enumerate_compositions(std::size_t N);

enum class MarginScope {
  /// Every composition and every pair.
  All,
  /// Skips the pair (j, k) under the split f = ((N+1)/2)(e_j + e_k). For odd N
  /// that barycenter is the midpoint of x_j and x_k, so the pair ties for every
  /// x. The phase collapse never reaches such a split.
  Generic,
};

/// min over compositions f and pairs j < k of ||x_j - b_f| - |x_k - b_f||,
/// b_f = (N+1)^-1 sum f_i x_i. +infinity for N == 1 by convention.
/// Under MarginScope::All this is identically 0 for odd N >= 3.
double unambiguity_margin(const std::vector<Point>& x, MarginScope scope = MarginScope::All);

/// The composition and pair attaining the margin.
struct MarginWitness {
  double margin = 0.0;
  Weights f;
  std::size_t j = 0;
  std::size_t k = 0;
};
std::optional<MarginWitness> unambiguity_witness(const std::vector<Point>& x, MarginScope scope = MarginScope::All);

struct StabilityResult {
  bool stable = true;
  std::size_t samples = 0;
  std::size_t differing = 0;  ///< perturbations whose trace differs (or is ambiguous)
};

/// Samples `samples` perturbations y with y_i uniform in the open ball
/// B(x_i, radius) and compares collapse traces of (y, w) against (x, w).
/// Throws DomainError unless unambiguity_margin(x, MarginScope::Generic) >=
/// 8 * radius (radius 0 is always accepted).
StabilityResult neighborhood_stability(const WeightedConfig& cfg, double radius, std::size_t samples,
                                       RngStream& rng);

std::string to_json(const CollapseTrace& trace);

}  // namespace bbb
