#include <cmath>
#include <string>

#include "bbb/parallel.hpp"
#include "bbb/stats.hpp"

namespace bbb {

double gaussian_box_mass(const Box& box) {
  if (box.lower.size() != box.upper.size()) throw DomainError("box: bound lengths differ");
  double mass = 1.0;
  for (std::size_t i = 0; i < box.lower.size(); ++i) {
    if (!(box.lower[i] <= box.upper[i])) throw DomainError("box: lower bound above upper bound");
    mass *= normal_cdf(box.upper[i]) - normal_cdf(box.lower[i]);
  }
  return mass;
}

double minorization_constant(std::size_t N, double L) {
  const double n = static_cast<double>(N);
  return std::exp(-2.0 * n) * std::exp(-n * L * L / 2.0);
}

namespace {

struct ReplicaOutcome {
  std::vector<double> recentered;  // X(t) - X̄(t), N * d
  std::vector<double> shifted;     // X(t) - x̄(0), N * d
  bool quiet = false;              // no branching in [0, 2]
};

bool in_box(const std::vector<double>& x, const Box& b) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < b.lower[i] || x[i] > b.upper[i]) return false;
  return true;
}

}  // namespace

EstimatorReport minorization_check(const MinorizationParams& p) {
  const Configuration& x0 = p.start;
  const std::size_t N = x0.capacity();
  const std::size_t d = x0.dim();
  if (x0.empty() || x0.size() != N) throw DomainError("minorization_check: start must hold N particles");
  if (!(p.t >= 1.0 && p.t <= 2.0)) throw DomainError("minorization_check: t must lie in [1, 2]");
  if (!(p.L > 0)) throw DomainError("minorization_check: L must be positive");
  const double ext = extent(x0);
  if (ext > p.L) throw DomainError("minorization_check: extent of start exceeds L");
  if (p.replicas < 2) throw DomainError("minorization_check: need at least 2 replicas");
  for (const auto& b : p.boxes)
    if (b.lower.size() != N * d || b.upper.size() != N * d)
      throw DomainError("minorization_check: box must have N * d bounds");

  const Point xbar0 = barycenter(x0);
  const std::vector<double> grid = p.t < 2.0 ? std::vector<double>{0.0, p.t, 2.0} : std::vector<double>{0.0, 2.0};

  auto outcomes = parallel_map(p.replicas, p.threads, [&](std::size_t r) {
    RngStream rng(p.seed, r);
    ReplicaOutcome out;
    std::size_t events = 0;
    SimulationHooks hooks;
    hooks.on_observation = [&](double time, const Configuration& c, bool on_grid) {
      if (on_grid && std::abs(time - p.t) < 1e-12) {
        const Point b = barycenter(c);
        out.recentered.resize(N * d);
        out.shifted.resize(N * d);
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t k = 0; k < d; ++k) {
            out.recentered[i * d + k] = c.position(i)[k] - b[k];
            out.shifted[i * d + k] = c.position(i)[k] - xbar0[k];
          }
      }
      return true;
    };
    hooks.on_event = [&](const BranchEvent& e) {
      if (e.time <= 2.0) ++events;
    };
    run_exact(x0, grid, rng, hooks);
    out.quiet = events == 0;
    return out;
  });

  const double gamma = minorization_constant(N, p.L);
  const double n = static_cast<double>(p.replicas);
  EstimatorReport rep;
  rep.name = "minorization";
  rep.samples = p.replicas;
  rep.seed = p.seed;
  rep.metrics.emplace_back("gamma", gamma);
  rep.metrics.emplace_back("L", p.L);
  rep.metrics.emplace_back("t", p.t);
  rep.metrics.emplace_back("start_extent", ext);

  for (std::size_t b = 0; b < p.boxes.size(); ++b) {
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += in_box(o.recentered, p.boxes[b]) ? 1 : 0;
    const double mu = static_cast<double>(hits) / n;
    const double se = std::sqrt(mu * (1 - mu) / n);
    const double phi = gaussian_box_mass(p.boxes[b]);
    const double target = gamma * phi;
    rep.estimate.push_back(mu);
    rep.std_error.push_back(se);
    rep.ci_lower.push_back(mu - 1.959963984540054 * se);
    rep.ci_upper.push_back(mu + 1.959963984540054 * se);
    const std::string tag = std::to_string(b);
    rep.metrics.emplace_back("phi_" + tag, phi);
    rep.metrics.emplace_back("target_" + tag, target);
    rep.checks.push_back({"box_" + tag, mu, target, "mu_hat >= gamma * phi", mu >= target});
  }

  std::vector<std::size_t> quiet;
  for (std::size_t r = 0; r < outcomes.size(); ++r)
    if (outcomes[r].quiet) quiet.push_back(r);
  const double quiet_frac = static_cast<double>(quiet.size()) / n;
  rep.metrics.emplace_back("quiet_fraction", quiet_frac);
  rep.metrics.emplace_back("quiet_lower_bound", std::exp(-2.0 * static_cast<double>(N)));
  rep.metrics.emplace_back("quiet_replicas", static_cast<double>(quiet.size()));

  if (quiet.size() >= 20) {
    double min_p = 1.0;
    const double sd = std::sqrt(p.t);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const double mean = x0.position(i)[k] - xbar0[k];
        std::vector<double> vals;
        vals.reserve(quiet.size());
        for (std::size_t r : quiet) vals.push_back(outcomes[r].shifted[i * d + k]);
        const double D = ks_statistic(std::move(vals), [&](double v) { return normal_cdf((v - mean) / sd); });
        min_p = std::min(min_p, kolmogorov_pvalue(D, quiet.size()));
      }
    }
    rep.metrics.emplace_back("conditioned_min_p", min_p);
    rep.checks.push_back({"conditioned_marginals", min_p, 0.01, "min KS p >= 0.01", min_p >= 0.01});
  } else {
    rep.flags.push_back("too_few_quiet_replicas");
  }
  return rep;
}

}  // namespace bbb
