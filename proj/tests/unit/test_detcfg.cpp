#include <cmath>

#include "bbb/detcfg.hpp"
#include "doctest.h"
#include "geometry.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace bbb;
using namespace bbb::testing;

namespace {

std::vector<Point> line(std::initializer_list<double> xs) {
  std::vector<Point> out;
  for (double v : xs) out.push_back(Point{v});
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("weighted configuration validation") {
  CHECK_THROWS_AS(WeightedConfig(line({0, 1}), {1, 2}), DomainError);
  CHECK_THROWS_AS(WeightedConfig(line({0, 1}), {2}), DomainError);
  CHECK_THROWS_AS(WeightedConfig({Point{0.0}, Point{0.0, 1.0}}, {1, 1}), DomainError);
  const auto c = WeightedConfig::uniform(line({0, 1, 3}));
  CHECK(c.weights() == Weights{1, 1, 1});
  CHECK(c.positive_sites() == 3);
}

TEST_CASE("select_kill worked examples") {
  const auto x = line({0, 1, 3});
  CHECK(select_kill(x, {1, 1, 1}, 1) == 2);
  CHECK(select_kill(x, {1, 2, 0}, 1) == 0);
  CHECK(select_kill(x, {0, 3, 0}, 1) == 1);
  CHECK_THROWS_AS(select_kill(x, {1, 2, 0}, 2), InvalidBranch);
  CHECK_THROWS_AS(select_kill(x, {1, 1, 1}, 3), DomainError);
}

TEST_CASE("branch_update worked examples") {
  const auto x = line({0, 1, 3});
  CHECK(branch_update(x, {1, 1, 1}, 1) == Weights{1, 2, 0});
  CHECK(branch_update(x, {1, 2, 0}, 1) == Weights{0, 3, 0});
  CHECK(branch_update(x, {0, 3, 0}, 1) == Weights{0, 3, 0});
}

TEST_CASE("collapse worked example") {
  const auto t = collapse(WeightedConfig::uniform(line({0, 1, 3})));
  CHECK(t.sequence == std::vector<std::size_t>{1, 1});
  CHECK(t.kills == std::vector<std::size_t>{2, 0});
  REQUIRE(t.weights.size() == 3);
  CHECK(t.weights[1] == Weights{1, 2, 0});
  CHECK(t.weights[2] == Weights{0, 3, 0});
  CHECK(t.phase_starts == std::vector<std::size_t>{0, 1});
  const auto j = nlohmann::json::parse(to_json(t));
  CHECK(j["sequence"] == nlohmann::json::array({2, 2}));
  CHECK(j["kills"] == nlohmann::json::array({3, 1}));
  // The same input has a tying composition, so the global check refuses it.
  CHECK_THROWS_AS(collapse(WeightedConfig::uniform(line({0, 1, 3})), AmbiguityCheck::Global),
                  AmbiguousConfiguration);
}

TEST_CASE("collapse of an already collapsed configuration is empty") {
  const auto t = collapse(WeightedConfig(line({0, 1, 3}), {0, 3, 0}));
  CHECK(t.length() == 0);
  CHECK(t.weights.size() == 1);
}

TEST_CASE("collapse rejects tied decisions") {
  // Branching at the centre leaves -1 and 1 tied for the kill.
  CHECK_THROWS_AS(collapse(WeightedConfig(line({-1, 0, 1}), {1, 1, 1})), AmbiguousConfiguration);
  try {
    collapse(WeightedConfig(line({-1, 0, 1}), {1, 1, 1}));
  } catch (const AmbiguousConfiguration& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,1,1)") != std::string::npos);
  }
}

TEST_CASE("closest_to_barycenter") {
  CHECK(closest_to_barycenter(line({0, 1, 3}), {1, 1, 1}) == 1);
  CHECK(closest_to_barycenter(line({0, 1, 3}), {1, 0, 2}) == 2);
  CHECK_THROWS_AS(closest_to_barycenter(line({0, 1}), {0, 0}), DomainError);
}

TEST_CASE("compositions") {
  CHECK(enumerate_compositions(1) == std::vector<Weights>{{2}});
  CHECK(enumerate_compositions(2) == std::vector<Weights>{{0, 3}, {1, 2}, {2, 1}, {3, 0}});
  CHECK(enumerate_compositions(3).size() == 15);
  for (std::size_t N = 1; N <= 8; ++N) {
    const auto all = enumerate_compositions(N);
    CHECK(all.size() == binomial(2 * N, N - 1));
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1] < all[i]);
    for (const auto& f : all) {
      std::uint32_t s = 0;
      for (auto v : f) s += v;
      CHECK(s == N + 1);
    }
  }
  CHECK_THROWS_AS(enumerate_compositions(0), DomainError);
}

TEST_CASE("margin examples") {
  CHECK(unambiguity_margin(line({0, 1})) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(unambiguity_margin(line({-1, 0, 1})) == 0.0);
  CHECK(unambiguity_margin(line({0, 1, 3})) == 0.0);
  CHECK(unambiguity_margin(line({2, 5, 2})) == 0.0);
  CHECK(std::isinf(unambiguity_margin(line({4}))));
  CHECK_FALSE(unambiguity_witness(line({4})).has_value());
  const auto w = unambiguity_witness(line({-1, 0, 1}));
  REQUIRE(w.has_value());
  CHECK(w->margin == 0.0);
}

TEST_CASE("generic margin examples") {
  // N even: no midpoint splits, both scopes agree.
  CHECK(unambiguity_margin(line({0, 1}), MarginScope::Generic) == unambiguity_margin(line({0, 1})));
  // f = (1,2,1) puts b at 0.
  CHECK(unambiguity_margin(line({-1, 0, 1}), MarginScope::Generic) == 0.0);
  // f = (0,3,1) puts b at 1.5, equidistant from 0 and 3.
  const auto w = unambiguity_witness(line({0, 1, 3}), MarginScope::Generic);
  REQUIRE(w.has_value());
  CHECK(w->margin == 0.0);
  CHECK(w->f == Weights{0, 3, 1});
  CHECK(w->j == 0);
  CHECK(w->k == 2);
  // The literal margin of {0, 1, 3.4} is attained by the split (0,2,2).
  const auto lit = unambiguity_witness(line({0, 1, 3.4}));
  REQUIRE(lit.has_value());
  CHECK(lit->margin == 0.0);
  CHECK(unambiguity_margin(line({0, 1, 3.4}), MarginScope::Generic) > 0.01);
}

TEST_CASE("property: the literal margin vanishes for odd N") {
  RngStream rng(209, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = 3 + 2 * rng.uniform_index(3);
    const auto x = random_points(N, 1 + rng.uniform_index(3), 4.0, rng);
    CHECK(unambiguity_margin(x) <= 1e-12);
  }
}

TEST_CASE("property: generic margin matches the brute-force oracle") {
  RngStream rng(210, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t N = 2 + rng.uniform_index(5);
    const std::size_t d = 1 + rng.uniform_index(2);
    const auto x = random_points(N, d, 3.0, rng);
    CHECK(std::abs(unambiguity_margin(x, MarginScope::Generic) - brute_margin(x, true)) <= 1e-12);
  }
}

TEST_CASE("property: margin matches the brute-force oracle") {
  RngStream rng(201, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t N = 2 + rng.uniform_index(4);
    const std::size_t d = 1 + rng.uniform_index(2);
    const auto x = random_points(N, d, 3.0, rng);
    CHECK(std::abs(unambiguity_margin(x) - brute_margin(x)) <= 1e-12);
  }
}

TEST_CASE("property: margin is isometry invariant and 1-homogeneous") {
  RngStream rng(202, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t N = 2 + rng.uniform_index(3);
    const std::size_t d = 1 + rng.uniform_index(3);
    const auto x = random_points(N, d, 2.0, rng);
    const double m = unambiguity_margin(x);
    std::vector<double> shift(d);
    for (double& s : shift) s = 5.0 * rng.normal();
    const auto y = transform(x, random_orthogonal(d, rng), shift);
    CHECK(unambiguity_margin(y) == doctest::Approx(m).epsilon(1e-8).scale(1.0));
    const double c = 0.1 + 5.0 * rng.uniform();
    std::vector<Point> z;
    for (const auto& p : x) {
      std::vector<double> q(p.coords().begin(), p.coords().end());
      for (double& v : q) v *= c;
      z.emplace_back(std::move(q));
    }
    CHECK(unambiguity_margin(z) == doctest::Approx(c * m).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("property: select_kill agrees with the reference rule and is isometry invariant") {
  RngStream rng(203, 0);
  int compared = 0, skipped = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t N = 2 + rng.uniform_index(4);
    const std::size_t d = 1 + rng.uniform_index(3);
    const auto x = random_unambiguous(N, d, 2.0, 1e-6, rng);
    const auto w = random_weights(N, rng);
    std::size_t l = rng.uniform_index(N);
    while (w[l] == 0) l = (l + 1) % N;
    // w + e_l splitting evenly over two sites ties them for every x.
    Weights f = w;
    ++f[l];
    std::size_t halves = 0;
    for (auto v : f) halves += 2 * v == N + 1;
    if (halves == 2) {
      ++skipped;
      continue;
    }
    const std::size_t k = select_kill(x, w, l);
    CHECK(k == brute_kill(x, w, l));
    CHECK(w[k] > 0);
    std::vector<double> shift(d);
    for (double& s : shift) s = 3.0 * rng.normal();
    CHECK(select_kill(transform(x, random_orthogonal(d, rng), shift), w, l) == k);
    ++compared;
  }
  CHECK(compared + skipped == 2000);
  CHECK(compared > 1800);
}

TEST_CASE("property: close branching for every weight vector on random unambiguous inputs") {
  RngStream rng(204, 0);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t N = 3 + rng.uniform_index(3);
    const std::size_t d = 1 + rng.uniform_index(2);
    const auto x = random_unambiguous(N, d, 2.0, 1e-6, rng);
    compositions(N, static_cast<std::uint32_t>(N), [&](const Weights& w) {
      std::size_t positive = 0;
      for (auto v : w) positive += v > 0;
      if (positive < 2) return;
      const std::size_t l = closest_to_barycenter(x, w);
      CHECK(select_kill(x, w, l) != l);
    });
  }
}

TEST_CASE("property: exhaustive collapse for N = 3, d = 1 over all weight vectors") {
  RngStream rng(205, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_unambiguous(3, 1, 5.0, 1e-6, rng);
    compositions(3, 3, [&](const Weights& w) {
      const auto t = collapse(WeightedConfig(x, w), AmbiguityCheck::Global);
      CHECK(t.length() <= 4);
      std::size_t nonzero = 0;
      for (auto v : t.weights.back()) nonzero += v > 0;
      CHECK(nonzero == 1);
      // Replay with the reference rule.
      Weights cur = w;
      for (std::size_t i = 0; i < t.length(); ++i) {
        CHECK(cur[t.sequence[i]] > 0);
        CHECK(brute_kill(x, cur, t.sequence[i]) == t.kills[i]);
        ++cur[t.sequence[i]];
        --cur[t.kills[i]];
        CHECK(cur == t.weights[i + 1]);
      }
    });
  }
}

TEST_CASE("neighborhood stability") {
  RngStream rng(206, 0);
  const auto cfg = WeightedConfig::uniform(line({0, 1, 3}));
  CHECK(neighborhood_stability(cfg, 0.0, 10, rng).stable);
  CHECK_THROWS_AS(neighborhood_stability(cfg, 1e-3, 10, rng), DomainError);
  CHECK_THROWS_AS(neighborhood_stability(cfg, -1.0, 10, rng), DomainError);

  const auto x = line({0, 1, 3.4});
  const double m = unambiguity_margin(x, MarginScope::Generic);
  REQUIRE(m > 0.01);
  const auto res = neighborhood_stability(WeightedConfig::uniform(x), m / 8 * (1 - 1e-9), 1000, rng);
  CHECK(res.samples == 1000);
  CHECK(res.stable);
  CHECK(res.differing == 0);
}

TEST_CASE("property: traces are locally constant on random unambiguous inputs") {
  RngStream rng(207, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t N = 3 + rng.uniform_index(2);
    const std::size_t d = 1 + rng.uniform_index(2);
    const auto x = random_unambiguous(N, d, 2.0, 1e-3, rng);
    const auto w = random_weights(N, rng);
    const double m = unambiguity_margin(x, MarginScope::Generic);
    CHECK(neighborhood_stability(WeightedConfig(x, w), m / 8, 100, rng).stable);
  }
}

TEST_CASE("negative control: large perturbations change some traces") {
  RngStream rng(208, 0);
  std::size_t differing = 0;
  for (int trial = 0; trial < 50 && differing == 0; ++trial) {
    const auto x = random_unambiguous(4, 1, 2.0, 1e-3, rng);
    const WeightedConfig cfg = WeightedConfig::uniform(x);
    const auto base = collapse(cfg);
    const double radius = 10.0 * unambiguity_margin(x, MarginScope::Generic);
    for (int s = 0; s < 200; ++s) {
      std::vector<Point> y;
      for (const auto& p : x) y.push_back(Point{p[0] + radius * (2.0 * rng.uniform() - 1.0)});
      try {
        const auto t = collapse(WeightedConfig::uniform(y));
        if (t.sequence != base.sequence || t.kills != base.kills) ++differing;
      } catch (const AmbiguousConfiguration&) {
        ++differing;
      }
    }
  }
  CHECK(differing > 0);
}
