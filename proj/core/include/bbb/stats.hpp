#pragma once

// Estimators and statistical checks on simulation output.
//
// Conventions: moment checks use 3-standard-error bands, distributional
// checks use KS at the 1% level, and every threshold applied is stored in the
// report's checks so a report can be audited on its own.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/engine.hpp"

namespace bbb {

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string rule;  ///< human-readable comparison, e.g. "|z| <= 3"
  bool passed = false;
};

struct EstimatorReport {
  std::string name;
  std::vector<double> estimate;
  std::vector<double> std_error;
  double ci_level = 0.95;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<double> series;
  std::vector<Check> checks;
  std::vector<std::string> flags;

  double metric(std::string_view key) const;
  bool has_metric(std::string_view key) const;
  const Check& check(std::string_view key) const;
  bool has_check(std::string_view key) const;
  bool has_flag(std::string_view flag) const;
  bool all_passed() const;
};

std::string to_json(const EstimatorReport& r);

/// Adds a check that estimate[index] lies in [lo, hi].
void add_interval_check(EstimatorReport& r, std::string name, double lo, double hi, std::size_t index = 0);

// ---------------------------------------------------------------------------
// Distributions

double normal_cdf(double x);
/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);
/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
double kolmogorov_pvalue(double D, std::size_t n);
/// Two-sided KS statistic of `samples` against a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf);

// ---------------------------------------------------------------------------
// Diffusivity, drift and isotropy

/// sigma^2 estimate from barycenter displacements over horizon m: pooled
/// per-coordinate sample variance divided by m, delete-one jackknife standard
/// error, normal 95% interval. estimate = {pooled, coord_0, ..., coord_{d-1}}.
/// Throws DomainError for fewer than 2 samples or m <= 0.
EstimatorReport estimate_sigma2(std::span<const Point> displacements, double m, std::uint64_t seed = 0);

/// Mean vector with standard errors and drift z-scores; for d >= 2 also
/// off-diagonal covariance z-scores and an equal-variance test (Hotelling T^2
/// on squared-deviation contrasts, chi-square with d-1 dof).
/// Checks: drift_zero, offdiag_zero, homogeneity (p >= 0.01).
EstimatorReport drift_and_isotropy(std::span<const Point> increments, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Hitting-time tails

/// Empirical log-survival fit. With no thresholds, 25 points from the median
/// to the last value with at least 10 samples above it. Weighted least squares
/// of log S(t) on t (weights n S / (1 - S)). Geometric-decay check with
/// c = median and p = P(T <= c): S(k c) <= (1 - p)^k + 3 SE for every k with
/// n (1 - p)^k >= 5. Constant input sets flag "degenerate" and fits nothing.
/// Throws DomainError for fewer than 100 samples.
EstimatorReport fit_tail(std::span<const double> samples, std::span<const double> thresholds = {},
                         std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Minorization

/// Axis-aligned box in R^{d x N}; lower/upper have N * d entries, particle-major.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Product standard-Gaussian mass of a box.
double gaussian_box_mass(const Box& box);
/// exp(-2N) exp(-N L^2 / 2).
double minorization_constant(std::size_t N, double L);

struct MinorizationParams {
  Configuration start;      ///< capacity N, N particles
  double L = 1.0;
  double t = 1.5;           ///< in [1, 2]
  std::vector<Box> boxes;
  std::size_t replicas = 100000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Monte Carlo estimate of P(X(t) - X̄(t) in A) for each box, against
/// gamma(L, N) phi(A). estimate[i] is the box-i frequency; checks box_<i>
/// pass when the estimate is >= the target. Also KS-tests, on replicas without
/// branching in [0, 2], each coordinate of X_i(t) - x̄(0) against
/// N(x_i - x̄(0), t) (check conditioned_marginals, 1% level each).
/// Throws DomainError when extent(start) > L or t is outside [1, 2].
EstimatorReport minorization_check(const MinorizationParams& p);

// ---------------------------------------------------------------------------
// Occupation time

/// Fraction of grid observations at which every recentered particle i lies in
/// the open ball B(centers[i], radius) (a single center is broadcast).
/// series holds the fraction per block of length block_length.
EstimatorReport occupation_fraction(const Trajectory& traj, const std::vector<Point>& centers, double radius,
                                    double block_length);

// ---------------------------------------------------------------------------
// Path rescaling and renewal utilities

/// partial_sums[j] = S(j) for j = 0..M. Returns the path
/// t -> m^{-1/2} (S(floor(t m)) - t m alpha) at t = k / grid_points,
/// k = 0..grid_points. Requires 1 <= m <= M.
std::vector<Point> donsker_rescale(std::span<const Point> partial_sums, std::size_t m, const Point& alpha,
                                   std::size_t grid_points);

/// k[m]: number of renewal times <= m (0 before the first).
std::size_t renewal_index(std::span<const double> renewal_times, double m);

/// Sigma = E[tau_2 - tau_1]^{-1/2} Q with Q Q^T = covariance (Cholesky).
std::vector<std::vector<double>> renewal_scale(double mean_increment,
                                               const std::vector<std::vector<double>>& covariance);
/// alpha = E[X_1(tau_2) - X_1(tau_1)] / E[tau_2 - tau_1].
Point renewal_drift(const Point& mean_displacement, double mean_increment);

/// Statistics of observed renewal times on a trajectory: time increments,
/// slot-0 increments and their within-cycle suprema. Needs >= 3 times, each
/// a recorded instant.
EstimatorReport renewal_diagnostics(const Trajectory& traj, std::span<const double> renewal_times);

/// m^{-1/2} max_{1 <= i < k_m} z_i (0 when k_m <= 1).
double scaled_block_max(std::span<const double> z, std::size_t k_m, double m);
/// sup over recorded instants of |X̄(t) - X_1(t)| (slot 0).
double barycenter_leader_gap(const Trajectory& traj);
/// True when each value is strictly below the previous one.
bool strictly_decreasing(std::span<const double> values);
double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Empirical measure

struct HistogramGrid {
  std::vector<double> lower;        ///< per dimension
  std::vector<double> width;        ///< per dimension, > 0
  std::vector<std::size_t> bins;    ///< per dimension, >= 1

  static HistogramGrid uniform(std::size_t d, double lo, double hi, std::size_t bins_per_dim);
  std::size_t dim() const noexcept { return lower.size(); }
  std::size_t cells() const noexcept;
  std::optional<std::size_t> cell(std::span<const double> x) const;
  std::vector<double> cell_lower(std::size_t cell) const;
};

class Histogram {
 public:
  explicit Histogram(HistogramGrid grid);

  void add(std::span<const double> x);
  const HistogramGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& counts() const noexcept { return counts_; }
  double in_range() const noexcept { return in_range_; }
  std::size_t out_of_range() const noexcept { return out_of_range_; }
  /// Counts divided by the in-range total (sums to 1 when non-empty).
  std::vector<double> normalized() const;
  /// Columns: lower_0..lower_{d-1}, count, mass.
  std::string to_csv() const;

 private:
  HistogramGrid grid_;
  std::vector<double> counts_;
  double in_range_ = 0.0;
  std::size_t out_of_range_ = 0;
};

double l1_distance(const Histogram& a, const Histogram& b);

struct MeasureResult {
  Histogram pooled;
  Histogram first_half;
  Histogram second_half;
  double split_half_l1 = 0.0;
  std::size_t out_of_range = 0;
  std::vector<std::string> warnings;
};

/// Histogram of recentered particle positions pooled over configurations
/// (one per replica). The split-half distance compares replicas [0, n/2) with
/// [n/2, n). Throws DomainError unless every configuration holds N particles.
MeasureResult empirical_measure(const std::vector<Configuration>& configs, const HistogramGrid& grid);

// ---------------------------------------------------------------------------

template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    D = std::max({D, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return D;
}

}  // namespace bbb
