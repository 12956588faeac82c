#include "bbb/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace bbb {
namespace {

using json = nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

void require_samples(std::span<const Point> xs, std::size_t min_count, const char* what) {
  if (xs.size() < min_count)
    throw DomainError(std::string(what) + ": need at least " + std::to_string(min_count) + " samples");
  const std::size_t d = xs.front().dim();
  if (d == 0) throw DomainError(std::string(what) + ": zero-dimensional samples");
  for (const auto& p : xs)
    if (p.dim() != d) throw DomainError(std::string(what) + ": samples differ in dimension");
}

std::vector<double> column_means(std::span<const Point> xs) {
  const std::size_t d = xs.front().dim();
  std::vector<double> m(d, 0.0);
  for (const auto& p : xs)
    for (std::size_t c = 0; c < d; ++c) m[c] += p[c];
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / (n - 1.0);
}

void add_check(EstimatorReport& r, std::string name, double value, double threshold, std::string rule,
               bool passed) {
  r.checks.push_back({std::move(name), value, threshold, std::move(rule), passed});
}

constexpr double kZ95 = 1.959963984540054;

}  // namespace

double EstimatorReport::metric(std::string_view key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  throw DomainError("no metric named " + std::string(key));
}

bool EstimatorReport::has_metric(std::string_view key) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto& kv) { return kv.first == key; });
}

const Check& EstimatorReport::check(std::string_view key) const {
  for (const auto& c : checks)
    if (c.name == key) return c;
  throw DomainError("no check named " + std::string(key));
}

bool EstimatorReport::has_check(std::string_view key) const {
  return std::any_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == key; });
}

bool EstimatorReport::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

bool EstimatorReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string to_json(const EstimatorReport& r) {
  json j;
  j["name"] = r.name;
  j["estimate"] = numbers(r.estimate);
  j["std_error"] = numbers(r.std_error);
  j["ci_level"] = r.ci_level;
  j["ci_lower"] = numbers(r.ci_lower);
  j["ci_upper"] = numbers(r.ci_upper);
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
  j["metrics"] = metrics;
  if (!r.series.empty()) j["series"] = numbers(r.series);
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"value", number(c.value)},
                      {"threshold", number(c.threshold)},
                      {"rule", c.rule},
                      {"passed", c.passed}});
  j["checks"] = checks;
  j["flags"] = r.flags;
  j["passed"] = r.all_passed();
  return j.dump(2);
}

void add_interval_check(EstimatorReport& r, std::string name, double lo, double hi, std::size_t index) {
  if (index >= r.estimate.size()) throw DomainError("add_interval_check: no such estimate");
  const double v = r.estimate[index];
  add_check(r, std::move(name), v, hi, "in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
            v >= lo && v <= hi);
}

// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi_square_sf(double x, double dof) {
  if (!(dof > 0)) throw DomainError("chi_square_sf: dof must be positive");
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

double kolmogorov_pvalue(double D, std::size_t n) {
  if (n == 0) throw DomainError("kolmogorov_pvalue: no samples");
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * D;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

EstimatorReport estimate_sigma2(std::span<const Point> displacements, double m, std::uint64_t seed) {
  require_samples(displacements, 2, "estimate_sigma2");
  if (!(m > 0) || !std::isfinite(m)) throw DomainError("estimate_sigma2: horizon must be positive");
  const std::size_t n = displacements.size();
  const std::size_t d = displacements.front().dim();
  const double nn = static_cast<double>(n);

  // Centred sums keep the leave-one-out updates free of cancellation.
  const auto mean = column_means(displacements);
  std::vector<double> S2(d, 0.0);
  for (const auto& p : displacements)
    for (std::size_t c = 0; c < d; ++c) S2[c] += (p[c] - mean[c]) * (p[c] - mean[c]);

  std::vector<double> coord(d);
  for (std::size_t c = 0; c < d; ++c) coord[c] = S2[c] / (nn - 1.0) / m;
  const double pooled = std::accumulate(coord.begin(), coord.end(), 0.0) / static_cast<double>(d);

  EstimatorReport r;
  r.name = "sigma2";
  r.samples = n;
  r.seed = seed;
  r.estimate.push_back(pooled);
  r.estimate.insert(r.estimate.end(), coord.begin(), coord.end());

  if (n >= 3) {
    // Delete-one jackknife: removing centred value e from a sample whose
    // centred sum is 0 leaves S2' = S2 - e^2 n / (n - 1).
    std::vector<double> pooled_loo(n);
    std::vector<std::vector<double>> coord_loo(d, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double e = displacements[i][c] - mean[c];
        const double s2 = S2[c] - e * e * nn / (nn - 1.0);
        const double v = s2 / (nn - 2.0) / m;
        coord_loo[c][i] = v;
        acc += v;
      }
      pooled_loo[i] = acc / static_cast<double>(d);
    }
    auto jackknife_se = [&](const std::vector<double>& loo) {
      const double bar = std::accumulate(loo.begin(), loo.end(), 0.0) / nn;
      double s = 0.0;
      for (double v : loo) s += (v - bar) * (v - bar);
      return std::sqrt((nn - 1.0) / nn * s);
    };
    r.std_error.push_back(jackknife_se(pooled_loo));
    for (std::size_t c = 0; c < d; ++c) r.std_error.push_back(jackknife_se(coord_loo[c]));
  } else {
    r.std_error.assign(d + 1, std::numeric_limits<double>::quiet_NaN());
    r.flags.push_back("no_standard_error");
  }
  for (std::size_t i = 0; i < r.estimate.size(); ++i) {
    r.ci_lower.push_back(r.estimate[i] - kZ95 * r.std_error[i]);
    r.ci_upper.push_back(r.estimate[i] + kZ95 * r.std_error[i]);
  }
  r.metrics.emplace_back("horizon", m);
  r.metrics.emplace_back("pooled", pooled);
  for (std::size_t c = 0; c < d; ++c) r.metrics.emplace_back("coord_" + std::to_string(c), coord[c]);
  return r;
}

EstimatorReport drift_and_isotropy(std::span<const Point> increments, std::uint64_t seed) {
  require_samples(increments, 3, "drift_and_isotropy");
  const std::size_t n = increments.size();
  const std::size_t d = increments.front().dim();
  const double nn = static_cast<double>(n);
  const auto mean = column_means(increments);

  EstimatorReport r;
  r.name = "drift_isotropy";
  r.samples = n;
  r.seed = seed;

  std::vector<double> var(d, 0.0);
  for (const auto& p : increments)
    for (std::size_t c = 0; c < d; ++c) var[c] += (p[c] - mean[c]) * (p[c] - mean[c]);
  for (double& v : var) v /= nn - 1.0;

  double max_drift_z = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double se = std::sqrt(var[c] / nn);
    const double z = se > 0 ? mean[c] / se : 0.0;
    r.estimate.push_back(mean[c]);
    r.std_error.push_back(se);
    r.ci_lower.push_back(mean[c] - kZ95 * se);
    r.ci_upper.push_back(mean[c] + kZ95 * se);
    r.metrics.emplace_back("drift_z_" + std::to_string(c), z);
    r.metrics.emplace_back("variance_" + std::to_string(c), var[c]);
    max_drift_z = std::max(max_drift_z, std::abs(z));
  }
  add_check(r, "drift_zero", max_drift_z, 3.0, "max |z| <= 3", max_drift_z <= 3.0);

  if (d < 2) {
    r.flags.push_back("isotropy_skipped");
    return r;
  }

  double max_off_z = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      std::vector<double> prod(n);
      for (std::size_t i = 0; i < n; ++i)
        prod[i] = (increments[i][a] - mean[a]) * (increments[i][b] - mean[b]);
      const double cov = std::accumulate(prod.begin(), prod.end(), 0.0) / (nn - 1.0);
      const double se = std::sqrt(sample_variance(prod) / nn);
      const double z = se > 0 ? cov / se : 0.0;
      r.metrics.emplace_back("cov_" + std::to_string(a) + "_" + std::to_string(b), cov);
      r.metrics.emplace_back("cov_z_" + std::to_string(a) + "_" + std::to_string(b), z);
      max_off_z = std::max(max_off_z, std::abs(z));
    }
  }
  add_check(r, "offdiag_zero", max_off_z, 3.0, "max |z| <= 3", max_off_z <= 3.0);

  // Contrasts u_c - u_{d-1} of squared deviations have mean zero under equal
  // variances.
  const std::size_t q = d - 1;
  Eigen::MatrixXd V(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    const double last = (increments[i][q] - mean[q]) * (increments[i][q] - mean[q]);
    for (std::size_t c = 0; c < q; ++c) {
      const double u = (increments[i][c] - mean[c]) * (increments[i][c] - mean[c]);
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = u - last;
    }
  }
  const Eigen::VectorXd vbar = V.colwise().mean();
  const Eigen::MatrixXd centred = V.rowwise() - vbar.transpose();
  const Eigen::MatrixXd S = centred.transpose() * centred / (nn - 1.0);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  double T2 = 0.0;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && S.norm() > 0) {
    T2 = nn * vbar.dot(ldlt.solve(vbar));
  } else {
    r.flags.push_back("homogeneity_singular");
  }
  const double p = chi_square_sf(T2, static_cast<double>(q));
  r.metrics.emplace_back("homogeneity_T2", T2);
  r.metrics.emplace_back("homogeneity_p", p);
  add_check(r, "homogeneity", p, 0.01, "p >= 0.01", p >= 0.01);
  return r;
}

// ---------------------------------------------------------------------------

EstimatorReport occupation_fraction(const Trajectory& traj, const std::vector<Point>& centers, double radius,
                                    double block_length) {
  if (!(radius >= 0)) throw DomainError("occupation_fraction: radius must be non-negative");
  if (!(block_length > 0)) throw DomainError("occupation_fraction: block length must be positive");
  if (centers.empty()) throw DomainError("occupation_fraction: no centers");

  EstimatorReport r;
  r.name = "occupation";
  r.seed = traj.manifest.seed;
  std::size_t hits = 0, total = 0;
  std::vector<std::size_t> block_hits, block_total;
  const double r2 = radius * radius;

  for (const auto& obs : traj.observations) {
    if (!obs.on_grid) continue;
    const auto& c = obs.config;
    if (centers.size() != 1 && centers.size() != c.size())
      throw DomainError("occupation_fraction: need one center or one per particle");
    const Point bar = barycenter(c);
    bool inside = true;
    for (std::size_t i = 0; i < c.size() && inside; ++i) {
      const Point& ctr = centers.size() == 1 ? centers[0] : centers[i];
      if (ctr.dim() != c.dim()) throw DomainError("occupation_fraction: center dimension mismatch");
      double s = 0.0;
      for (std::size_t k = 0; k < c.dim(); ++k) {
        const double diff = c.position(i)[k] - bar[k] - ctr[k];
        s += diff * diff;
      }
      inside = s < r2;
    }
    const auto block = static_cast<std::size_t>(std::floor(obs.time / block_length));
    if (block >= block_total.size()) {
      block_total.resize(block + 1, 0);
      block_hits.resize(block + 1, 0);
    }
    ++total;
    ++block_total[block];
    if (inside) {
      ++hits;
      ++block_hits[block];
    }
  }
  if (total == 0) throw DomainError("occupation_fraction: trajectory has no grid observations");

  const double frac = static_cast<double>(hits) / static_cast<double>(total);
  r.samples = total;
  r.estimate = {frac};
  r.std_error = {std::sqrt(frac * (1 - frac) / static_cast<double>(total))};
  r.ci_lower = {frac - kZ95 * r.std_error[0]};
  r.ci_upper = {frac + kZ95 * r.std_error[0]};
  double min_block = 1.0;
  for (std::size_t b = 0; b < block_total.size(); ++b) {
    if (block_total[b] == 0) continue;
    const double f = static_cast<double>(block_hits[b]) / static_cast<double>(block_total[b]);
    r.series.push_back(f);
    min_block = std::min(min_block, f);
  }
  r.metrics.emplace_back("radius", radius);
  r.metrics.emplace_back("block_length", block_length);
  r.metrics.emplace_back("min_block_fraction", min_block);
  return r;
}

// ---------------------------------------------------------------------------

std::vector<Point> donsker_rescale(std::span<const Point> partial_sums, std::size_t m, const Point& alpha,
                                   std::size_t grid_points) {
  if (partial_sums.empty()) throw DomainError("donsker_rescale: empty path");
  const std::size_t M = partial_sums.size() - 1;
  if (m < 1 || m > M) throw DomainError("donsker_rescale: need 1 <= m <= number of increments");
  if (grid_points < 1) throw DomainError("donsker_rescale: need at least one grid step");
  const std::size_t d = alpha.dim();
  for (const auto& s : partial_sums)
    if (s.dim() != d) throw DomainError("donsker_rescale: dimension mismatch");

  const double mm = static_cast<double>(m);
  const double scale = 1.0 / std::sqrt(mm);
  std::vector<Point> out;
  out.reserve(grid_points + 1);
  for (std::size_t k = 0; k <= grid_points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(grid_points);
    // floor(t m) computed in integers so t = 1 lands exactly on m.
    const std::size_t j = k * m / grid_points;
    std::vector<double> v(d);
    for (std::size_t c = 0; c < d; ++c) v[c] = scale * (partial_sums[j][c] - t * mm * alpha[c]);
    out.emplace_back(std::move(v));
  }
  return out;
}

std::size_t renewal_index(std::span<const double> renewal_times, double m) {
  if (!std::is_sorted(renewal_times.begin(), renewal_times.end()))
    throw DomainError("renewal_index: times must be ascending");
  return static_cast<std::size_t>(std::upper_bound(renewal_times.begin(), renewal_times.end(), m) -
                                  renewal_times.begin());
}

std::vector<std::vector<double>> renewal_scale(double mean_increment,
                                               const std::vector<std::vector<double>>& covariance) {
  if (!(mean_increment > 0)) throw DomainError("renewal_scale: mean increment must be positive");
  const auto d = static_cast<Eigen::Index>(covariance.size());
  if (d == 0) throw DomainError("renewal_scale: empty covariance");
  Eigen::MatrixXd C(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(covariance[static_cast<std::size_t>(i)].size()) != d)
      throw DomainError("renewal_scale: covariance must be square");
    for (Eigen::Index j = 0; j < d; ++j)
      C(i, j) = covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  if (!C.isApprox(C.transpose(), 1e-12)) throw DomainError("renewal_scale: covariance must be symmetric");
  const Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw DomainError("renewal_scale: covariance must be positive definite");
  const Eigen::MatrixXd Q = llt.matrixL();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d)));
  const double s = 1.0 / std::sqrt(mean_increment);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s * Q(i, j);
  return out;
}

Point renewal_drift(const Point& mean_displacement, double mean_increment) {
  if (!(mean_increment > 0)) throw DomainError("renewal_drift: mean increment must be positive");
  std::vector<double> v(mean_displacement.coords().begin(), mean_displacement.coords().end());
  for (double& x : v) x /= mean_increment;
  return Point(std::move(v));
}

EstimatorReport renewal_diagnostics(const Trajectory& traj, std::span<const double> renewal_times) {
  if (renewal_times.size() < 3) throw DomainError("renewal_diagnostics: need at least 3 renewal times");
  if (!std::is_sorted(renewal_times.begin(), renewal_times.end()))
    throw DomainError("renewal_diagnostics: times must be ascending");
  const auto& obs = traj.observations;
  auto locate = [&](double t) {
    for (std::size_t i = 0; i < obs.size(); ++i)
      if (std::abs(obs[i].time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw DomainError("renewal_diagnostics: renewal time is not a recorded instant");
  };

  const std::size_t cycles = renewal_times.size() - 1;
  const std::size_t d = obs.front().config.dim();
  std::vector<double> dt(cycles), sup2(cycles);
  std::vector<std::vector<double>> dx(d, std::vector<double>(cycles));
  for (std::size_t i = 0; i < cycles; ++i) {
    const std::size_t a = locate(renewal_times[i]);
    const std::size_t b = locate(renewal_times[i + 1]);
    dt[i] = renewal_times[i + 1] - renewal_times[i];
    const auto x0 = obs[a].config.position(0);
    double s = 0.0;
    for (std::size_t k = a; k <= b; ++k) s = std::max(s, squared_distance(obs[k].config.position(0), x0));
    sup2[i] = s;
    const auto x1 = obs[b].config.position(0);
    for (std::size_t c = 0; c < d; ++c) dx[c][i] = x1[c] - x0[c];
  }
  const double nc = static_cast<double>(cycles);
  auto mean_of = [&](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / nc; };

  EstimatorReport r;
  r.name = "renewal";
  r.samples = cycles;
  r.seed = traj.manifest.seed;
  const double mdt = mean_of(dt);
  r.estimate.push_back(mdt);
  r.std_error.push_back(cycles > 1 ? std::sqrt(sample_variance(dt) / nc) : std::nan(""));
  r.metrics.emplace_back("mean_increment", mdt);
  r.metrics.emplace_back("increment_second_moment",
                         std::inner_product(dt.begin(), dt.end(), dt.begin(), 0.0) / nc);
  for (std::size_t c = 0; c < d; ++c) {
    r.metrics.emplace_back("mean_displacement_" + std::to_string(c), mean_of(dx[c]));
    if (cycles > 1) r.metrics.emplace_back("displacement_var_" + std::to_string(c), sample_variance(dx[c]));
  }
  r.metrics.emplace_back("mean_sup_sq_excursion", mean_of(sup2));
  r.series = dt;
  return r;
}

double scaled_block_max(std::span<const double> z, std::size_t k_m, double m) {
  if (!(m > 0)) throw DomainError("scaled_block_max: m must be positive");
  if (k_m <= 1) return 0.0;
  if (k_m - 1 > z.size()) throw DomainError("scaled_block_max: not enough blocks");
  return *std::max_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k_m - 1)) / std::sqrt(m);
}

double barycenter_leader_gap(const Trajectory& traj) {
  double gap = 0.0;
  for (const auto& o : traj.observations) {
    const Point b = barycenter(o.config);
    gap = std::max(gap, distance(b.coords(), o.config.position(0)));
  }
  return gap;
}

bool strictly_decreasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return false;
  return true;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace bbb
