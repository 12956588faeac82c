#pragma once

// Independent reference implementations used by unit and acceptance tests.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bbb/core.hpp"
#include "bbb/detcfg.hpp"
#include "bbb/rng.hpp"

namespace bbb::testing {

/// Recursive stars-and-bars enumeration of N-vectors summing to `total`.
inline void compositions(std::size_t N, std::uint32_t total, const std::function<void(const Weights&)>& fn) {
  Weights f(N, 0);
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t left) {
    if (i + 1 == N) {
      f[i] = left;
      fn(f);
      return;
    }
    for (std::uint32_t v = 0; v <= left; ++v) {
      f[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, total);
}

inline double euclid(const Point& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.dim(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

/// Direct loop over compositions and pairs. `generic` drops the pair (j, k)
/// under f = ((N+1)/2)(e_j + e_k).
inline double brute_margin(const std::vector<Point>& x, bool generic = false) {
  const std::size_t N = x.size(), d = x.front().dim();
  if (N == 1) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  compositions(N, static_cast<std::uint32_t>(N + 1), [&](const Weights& f) {
    std::vector<double> b(d, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < d; ++k) b[k] += f[i] * x[i][k];
    for (double& v : b) v /= static_cast<double>(N + 1);
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t k = j + 1; k < N; ++k) {
        if (generic && f[j] == f[k] && f[j] + f[k] == N + 1) continue;
        best = std::min(best, std::abs(euclid(x[j], b) - euclid(x[k], b)));
      }
  });
  return best;
}

/// Reference selection rule.
inline std::size_t brute_kill(const std::vector<Point>& x, const Weights& w, std::size_t l) {
  const std::size_t N = x.size(), d = x.front().dim();
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < d; ++k) b[k] += w[i] * x[i][k];
  for (std::size_t k = 0; k < d; ++k) b[k] = (b[k] + x[l][k]) / static_cast<double>(N + 1);
  std::size_t best = N;
  double bd = -1;
  for (std::size_t j = 0; j < N; ++j) {
    if (w[j] == 0) continue;
    const double dj = euclid(x[j], b);
    if (dj > bd) {
      bd = dj;
      best = j;
    }
  }
  return best;
}

/// Random positions uniform in [-scale, scale]^d, resampled until the generic
/// margin exceeds `min_margin`.
inline std::vector<Point> random_unambiguous(std::size_t N, std::size_t d, double scale, double min_margin,
                                             RngStream& rng) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<Point> x;
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> p(d);
      for (double& v : p) v = scale * (2.0 * rng.uniform() - 1.0);
      x.emplace_back(std::move(p));
    }
    if (brute_margin(x, true) > min_margin) return x;
  }
  throw std::runtime_error("random_unambiguous: no sample above the requested margin");
}

/// Uniform random weight vector summing to N with every entry drawn by
/// scattering N units over the sites.
inline Weights random_weights(std::size_t N, RngStream& rng) {
  Weights w(N, 0);
  for (std::size_t u = 0; u < N; ++u) ++w[rng.uniform_index(N)];
  return w;
}

}  // namespace bbb::testing
