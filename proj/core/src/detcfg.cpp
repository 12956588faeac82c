#include "bbb/detcfg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bbb {
namespace {

std::string weights_str(const Weights& w) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
  os << ')';
  return os.str();
}

std::vector<double> weighted_sum(const std::vector<Point>& x, const Weights& w) {
  std::vector<double> s(x.front().dim(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0) continue;
    const double wi = static_cast<double>(w[i]);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += wi * x[i][k];
  }
  return s;
}

std::vector<double> branch_barycenter(const std::vector<Point>& x, const Weights& w, std::size_t l) {
  std::vector<double> b = weighted_sum(x, w);
  const double denom = static_cast<double>(x.size() + 1);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = (b[k] + x[l][k]) / denom;
  return b;
}

void check_shape(const std::vector<Point>& x, const Weights& w) {
  if (x.empty() || x.size() != w.size()) throw DomainError("weighted configuration: size mismatch");
}

// Best and runner-up among positive-weight sites under `better`, by distance.
struct Decision {
  std::size_t best = 0;
  double best_dist = 0.0;
  std::optional<std::size_t> runner_up;
  double runner_up_dist = 0.0;
};

template <typename Better>
Decision decide(const std::vector<Point>& x, const Weights& w, std::span<const double> b, Better better) {
  Decision d;
  bool have = false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (w[j] == 0) continue;
    const double dist = distance(x[j].coords(), b);
    if (!have) {
      d.best = j;
      d.best_dist = dist;
      have = true;
    } else if (better(dist, d.best_dist)) {
      d.runner_up = d.best;
      d.runner_up_dist = d.best_dist;
      d.best = j;
      d.best_dist = dist;
    } else if (!d.runner_up || better(dist, d.runner_up_dist)) {
      d.runner_up = j;
      d.runner_up_dist = dist;
    }
  }
  return d;
}

void require_separated(const Decision& d, double tol, const Weights& w, const char* what) {
  if (d.runner_up && std::abs(d.best_dist - d.runner_up_dist) <= tol) {
    std::ostringstream os;
    os << "ambiguous configuration: " << what << " ties sites " << std::min(d.best, *d.runner_up) + 1
       << " and " << std::max(d.best, *d.runner_up) + 1 << " (|diff|=" << std::abs(d.best_dist - d.runner_up_dist)
       << ") at weights " << weights_str(w);
    throw AmbiguousConfiguration(os.str());
  }
}

// Lower site of a two-site split with equal weights. b0 is then the exact
// midpoint of the pair, which ties for every x.
std::optional<std::size_t> balanced_pair(const Weights& w) {
  std::optional<std::size_t> first;
  std::size_t count = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0) continue;
    if (++count > 2) return std::nullopt;
    if (!first) {
      first = i;
    } else if (w[i] != w[*first]) {
      return std::nullopt;
    }
  }
  return count == 2 ? first : std::nullopt;
}

void for_each_composition(std::size_t N, const std::function<void(const Weights&)>& fn) {
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
  rec(0, static_cast<std::uint32_t>(N + 1));
}

}  // namespace

WeightedConfig::WeightedConfig(std::vector<Point> positions, Weights weights)
    : positions_(std::move(positions)), weights_(std::move(weights)) {
  check_shape(positions_, weights_);
  const std::size_t d = positions_.front().dim();
  if (d == 0) throw DomainError("weighted configuration: zero-dimensional positions");
  for (const auto& p : positions_) {
    if (p.dim() != d) throw DomainError("weighted configuration: mixed dimensions");
  }
  const auto total = std::accumulate(weights_.begin(), weights_.end(), std::uint64_t{0});
  if (total != positions_.size()) {
    throw DomainError("weighted configuration: weights sum to " + std::to_string(total) + ", expected " +
                      std::to_string(positions_.size()));
  }
}

WeightedConfig WeightedConfig::uniform(std::vector<Point> positions) {
  Weights w(positions.size(), 1);
  return {std::move(positions), std::move(w)};
}

std::size_t WeightedConfig::positive_sites() const noexcept {
  return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](auto v) { return v > 0; }));
}

std::size_t select_kill(const std::vector<Point>& x, const Weights& w, std::size_t l) {
  check_shape(x, w);
  if (l >= x.size()) throw DomainError("select_kill: site out of range");
  if (w[l] == 0) throw InvalidBranch("select_kill: branch site " + std::to_string(l + 1) + " has zero weight");
  const auto b = branch_barycenter(x, w, l);
  std::size_t best = l;
  double best_d2 = -1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (w[j] == 0) continue;
    const double d2 = squared_distance(x[j].coords(), b);
    if (d2 > best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

Weights branch_update(const std::vector<Point>& x, const Weights& w, std::size_t l) {
  const std::size_t k = select_kill(x, w, l);
  Weights g = w;
  ++g[l];
  --g[k];
  return g;
}

std::size_t closest_to_barycenter(const std::vector<Point>& x, const Weights& w) {
  check_shape(x, w);
  if (const auto pair = balanced_pair(w)) return *pair;
  std::vector<double> b0 = weighted_sum(x, w);
  for (double& v : b0) v /= static_cast<double>(x.size());
  std::size_t best = x.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0) continue;
    const double d2 = squared_distance(x[i].coords(), b0);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  if (best == x.size()) throw DomainError("closest_to_barycenter: no positive weight");
  return best;
}

double ambiguity_tolerance(const std::vector<Point>& x) {
  double m = 0.0;
  for (const auto& p : x) m = std::max(m, p.norm());
  return 1e-9 * (1.0 + m);
}

CollapseTrace collapse(const WeightedConfig& cfg, AmbiguityCheck check) {
  const auto& x = cfg.positions();
  const std::size_t N = cfg.size();
  const double tol = ambiguity_tolerance(x);

  if (check == AmbiguityCheck::Global && N > 1) {
    const auto wit = unambiguity_witness(x, MarginScope::Generic);
    if (wit && wit->margin <= tol) {
      std::ostringstream os;
      os << "ambiguous configuration: sites " << wit->j + 1 << " and " << wit->k + 1
         << " tie for composition " << weights_str(wit->f) << " (margin " << wit->margin
         << ") at weights " << weights_str(cfg.weights());
      throw AmbiguousConfiguration(os.str());
    }
  }

  CollapseTrace trace;
  Weights w = cfg.weights();
  trace.weights.push_back(w);
  const std::size_t limit = (N - 1) * (N - 1);
  const auto positive = [&] { return std::count_if(w.begin(), w.end(), [](auto v) { return v > 0; }); };

  while (positive() > 1) {
    trace.phase_starts.push_back(trace.length());
    std::vector<double> b0 = weighted_sum(x, w);
    for (double& v : b0) v /= static_cast<double>(N);
    std::size_t l = 0;
    if (const auto pair = balanced_pair(w)) {
      l = *pair;
    } else {
      const Decision pick = decide(x, w, b0, std::less<>{});
      require_separated(pick, tol, w, "branch-site choice");
      l = pick.best;
    }

    for (;;) {
      const auto b = branch_barycenter(x, w, l);
      const Decision kill = decide(x, w, b, std::greater<>{});
      require_separated(kill, tol, w, "kill choice");
      const std::size_t k = kill.best;
      if (k == l) {
        throw std::logic_error("collapse: branching site " + std::to_string(l + 1) + " selected for killing at " +
                               weights_str(w));
      }
      ++w[l];
      --w[k];
      trace.sequence.push_back(l);
      trace.kills.push_back(k);
      trace.weights.push_back(w);
      if (trace.length() > limit) throw std::logic_error("collapse: exceeded (N-1)^2 branchings");
      if (w[k] == 0) break;
    }
  }
  return trace;
}

std::vector<Weights> enumerate_compositions(std::size_t N) {
  if (N == 0) throw DomainError("enumerate_compositions: N must be >= 1");
  std::vector<Weights> out;
  for_each_composition(N, [&](const Weights& f) { out.push_back(f); });
  return out;
}

std::optional<MarginWitness> unambiguity_witness(const std::vector<Point>& x, MarginScope scope) {
  if (x.empty()) throw DomainError("unambiguity_margin: empty configuration");
  const std::size_t N = x.size();
  if (N == 1) return std::nullopt;
  const std::size_t d = x.front().dim();

  MarginWitness best;
  best.margin = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::size_t>> dist(N);
  std::vector<double> b(d);
  const double denom = static_cast<double>(N + 1);
  const std::uint32_t half = static_cast<std::uint32_t>((N + 1) / 2);
  const bool skip_splits = scope == MarginScope::Generic && N % 2 == 1;

  for_each_composition(N, [&](const Weights& f) {
    // Sites of a midpoint split, when f is one.
    std::size_t s0 = N, s1 = N;
    if (skip_splits) {
      for (std::size_t i = 0; i < N; ++i) {
        if (f[i] == 0) continue;
        if (f[i] != half) {
          s0 = s1 = N;
          break;
        }
        (s0 == N ? s0 : s1) = i;
      }
    }
    std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      if (f[i] == 0) continue;
      for (std::size_t k = 0; k < d; ++k) b[k] += static_cast<double>(f[i]) * x[i][k];
    }
    for (double& v : b) v /= denom;
    for (std::size_t i = 0; i < N; ++i) dist[i] = {distance(x[i].coords(), b), i};
    std::sort(dist.begin(), dist.end());
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const std::size_t a = std::min(dist[i].second, dist[i + 1].second);
      const std::size_t c = std::max(dist[i].second, dist[i + 1].second);
      if (a == s0 && c == s1) continue;
      const double gap = dist[i + 1].first - dist[i].first;
      if (gap < best.margin) {
        best.margin = gap;
        best.f = f;
        best.j = a;
        best.k = c;
      }
    }
  });
  return best;
}

double unambiguity_margin(const std::vector<Point>& x, MarginScope scope) {
  const auto w = unambiguity_witness(x, scope);
  return w ? w->margin : std::numeric_limits<double>::infinity();
}

StabilityResult neighborhood_stability(const WeightedConfig& cfg, double radius, std::size_t samples,
                                       RngStream& rng) {
  if (!(radius >= 0.0)) throw DomainError("neighborhood_stability: radius must be >= 0");
  StabilityResult res;
  if (radius == 0.0) {
    res.samples = samples;
    return res;
  }
  if (unambiguity_margin(cfg.positions(), MarginScope::Generic) < 8.0 * radius) {
    throw DomainError("neighborhood_stability: radius exceeds margin / 8");
  }
  const CollapseTrace base = collapse(cfg);
  const std::size_t d = cfg.dim();
  std::vector<double> dir(d);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<Point> y;
    y.reserve(cfg.size());
    for (const auto& p : cfg.positions()) {
      double n2 = 0.0;
      do {
        n2 = 0.0;
        for (double& v : dir) {
          v = rng.normal();
          n2 += v * v;
        }
      } while (n2 == 0.0);
      const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(n2);
      std::vector<double> q(p.coords().begin(), p.coords().end());
      for (std::size_t k = 0; k < d; ++k) q[k] += r * dir[k];
      y.emplace_back(std::move(q));
    }
    ++res.samples;
    try {
      const CollapseTrace t = collapse(WeightedConfig(std::move(y), cfg.weights()));
      if (t.sequence != base.sequence || t.kills != base.kills) ++res.differing;
    } catch (const AmbiguousConfiguration&) {
      ++res.differing;
    }
  }
  res.stable = res.differing == 0;
  return res;
}

std::string to_json(const CollapseTrace& trace) {
  nlohmann::json j;
  j["index_base"] = 1;
  std::vector<std::size_t> seq, kills, phases;
  for (auto l : trace.sequence) seq.push_back(l + 1);
  for (auto k : trace.kills) kills.push_back(k + 1);
  j["length"] = trace.length();
  j["sequence"] = seq;
  j["kills"] = kills;
  j["weights"] = trace.weights;
  j["phase_starts"] = trace.phase_starts;
  return j.dump();
}

}  // namespace bbb
