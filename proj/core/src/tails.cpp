#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bbb/stats.hpp"

namespace bbb {
namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = std::numeric_limits<double>::quiet_NaN();
};

// Weighted least squares of y on x; the residual variance sets the scale of
// the slope's standard error.
LineFit weighted_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xb = sx / sw, yb = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xb) * (x[i] - xb);
    sxy += w[i] * (x[i] - xb) * (y[i] - yb);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = yb - f.slope * xb;
  if (x.size() > 2) {
    double ssr = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      ssr += w[i] * e * e;
    }
    f.slope_se = std::sqrt(ssr / static_cast<double>(x.size() - 2) / sxx);
  }
  return f;
}

}  // namespace

EstimatorReport fit_tail(std::span<const double> samples, std::span<const double> thresholds, std::uint64_t seed) {
  if (samples.size() < 100) throw DomainError("fit_tail: need at least 100 samples");
  for (double s : samples)
    if (!std::isfinite(s)) throw DomainError("fit_tail: samples must be finite");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double nn = static_cast<double>(n);
  auto survival = [&](double t) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(above) / nn;
  };

  EstimatorReport r;
  r.name = "tail";
  r.samples = n;
  r.seed = seed;
  const double c = median(sorted);
  r.metrics.emplace_back("median", c);
  r.metrics.emplace_back("max", sorted.back());

  if (sorted.front() == sorted.back()) {
    r.flags.push_back("degenerate");
    return r;
  }

  std::vector<double> ts;
  if (thresholds.empty()) {
    const double t_max = sorted[n - 10];
    if (t_max > c) {
      constexpr int K = 25;
      for (int k = 0; k < K; ++k) ts.push_back(c + (t_max - c) * k / (K - 1));
    }
  } else {
    ts.assign(thresholds.begin(), thresholds.end());
    std::sort(ts.begin(), ts.end());
  }

  std::vector<double> x, y, w;
  for (double t : ts) {
    const double S = survival(t);
    if (S <= 0.0 || S >= 1.0) continue;
    x.push_back(t);
    y.push_back(std::log(S));
    w.push_back(nn * S / (1.0 - S));
    r.series.push_back(S);
  }
  if (x.size() < 3) {
    r.flags.push_back("degenerate");
    return r;
  }

  const LineFit fit = weighted_fit(x, y, w);
  r.estimate = {fit.slope};
  r.std_error = {fit.slope_se};
  r.ci_lower = {fit.slope - 1.959963984540054 * fit.slope_se};
  r.ci_upper = {fit.slope + 1.959963984540054 * fit.slope_se};
  r.metrics.emplace_back("intercept", fit.intercept);
  r.metrics.emplace_back("fit_points", static_cast<double>(x.size()));
  const double upper = fit.slope + 3.0 * fit.slope_se;
  r.checks.push_back({"negative_slope", upper, 0.0, "slope + 3 SE < 0", upper < 0.0});

  // Curvature: a log-survival that bends upwards (slope flattening with t) is
  // inconsistent with a geometric tail.
  if (x.size() >= 6) {
    const std::size_t h = x.size() / 2;
    auto part = [&](std::size_t a, std::size_t b) {
      return weighted_fit({x.begin() + a, x.begin() + b}, {y.begin() + a, y.begin() + b},
                          {w.begin() + a, w.begin() + b});
    };
    const LineFit lo = part(0, h), hi = part(h, x.size());
    const double diff = hi.slope - lo.slope;
    const double se = std::sqrt(lo.slope_se * lo.slope_se + hi.slope_se * hi.slope_se);
    r.metrics.emplace_back("slope_first_half", lo.slope);
    r.metrics.emplace_back("slope_second_half", hi.slope);
    r.checks.push_back({"not_convex", diff, 3.0 * se, "slope change <= 3 SE", diff <= 3.0 * se});
  }

  // Geometric decay with the median as the step.
  if (c > 0) {
    const double p = 1.0 - survival(c);
    r.metrics.emplace_back("p_hat", p);
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
    for (int k = 1; k < 10000; ++k) {
      const double bound = std::pow(1.0 - p, k);
      if (nn * bound < 5.0) break;
      const double emp = survival(k * c);
      const double slack = 3.0 * std::sqrt(bound * (1.0 - bound) / nn);
      worst = std::max(worst, emp - bound - slack);
      ok = ok && emp <= bound + slack;
      ++steps;
    }
    r.metrics.emplace_back("geometric_steps", static_cast<double>(steps));
    if (steps > 0)
      r.checks.push_back({"geometric_decay", worst, 0.0, "S(kc) - (1-p)^k - 3 SE <= 0", ok});
  } else {
    r.flags.push_back("nonpositive_median");
  }
  return r;
}

}  // namespace bbb
