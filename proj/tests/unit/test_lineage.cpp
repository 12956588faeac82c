#include <cmath>

#include "bbb/lineage.hpp"
#include "doctest.h"

using namespace bbb;

namespace {

RunManifest manifest(std::size_t N, std::size_t d, double dt = 0.25) {
  RunManifest m;
  m.N = N;
  m.d = d;
  m.horizon = 1.0;
  m.dt_obs = dt;
  m.initial = InitialCondition::gaussian(1.0);
  return m;
}

}  // namespace

TEST_CASE("window 0 keeps only the roots") {
  const auto rec = simulate_bbm_embedded(manifest(3, 2), RngStream(1, 0), 0.0);
  CHECK(rec.nodes.size() == 3);
  CHECK(rec.grid == std::vector<double>{0.0});
  CHECK(rec.events.empty());
  CHECK(rec.index_at(0.0) == std::vector<std::size_t>{0, 1, 2});
  const auto tr = project_bbb(rec);
  REQUIRE(tr.observations.size() == 1);
  CHECK(tr.observations[0].config.size() == 3);
}

TEST_CASE("projection coincides with the event-driven engine on the same stream") {
  for (std::size_t N : {1, 2, 3, 5}) {
    for (std::uint64_t r = 0; r < 20; ++r) {
      auto m = manifest(N, 2);
      m.horizon = 3.0;
      const auto rec = simulate_bbm_embedded(m, RngStream(5, r), 3.0);
      const auto proj = project_bbb(rec);
      const auto direct = simulate(m, RngStream(5, r));
      REQUIRE(proj.observations.size() == direct.observations.size());
      REQUIRE(proj.events.size() == direct.events.size());
      for (std::size_t i = 0; i < proj.observations.size(); ++i) {
        CHECK(proj.observations[i].time == direct.observations[i].time);
        CHECK(proj.observations[i].on_grid == direct.observations[i].on_grid);
        CHECK(proj.observations[i].config == direct.observations[i].config);
      }
      for (std::size_t e = 0; e < proj.events.size(); ++e) {
        CHECK(proj.events[e].parent == direct.events[e].parent);
        CHECK(proj.events[e].killed == direct.events[e].killed);
      }
    }
  }
}

TEST_CASE("newborn at each BBB event is the most recent node") {
  auto m = manifest(4, 1);
  const auto rec = simulate_bbm_embedded(m, RngStream(6, 0), 4.0);
  REQUIRE_FALSE(rec.events.empty());
  for (const auto& ev : rec.events) {
    const auto& after = rec.index_at(ev.time);
    const std::size_t id = after[ev.newborn_slot];
    const auto& node = rec.nodes[id];
    CHECK(node.birth == ev.time);
    REQUIRE(node.parent.has_value());
    // Ids are birth-ordered: nothing born at or before the event is newer.
    for (const auto& other : rec.nodes)
      if (other.birth <= ev.time) CHECK(other.id <= id);
    // Parent of the newborn is the node that occupied the parent slot.
    auto before = rec.index_history.front().index;
    for (const auto& ch : rec.index_history)
      if (ch.time < ev.time) before = ch.index;
    CHECK(*node.parent == before[ev.parent]);
    CHECK(rec.descends_from(id, *node.parent));
  }
}

TEST_CASE("tree structure: ids, parents, children, samples") {
  const auto rec = simulate_bbm_embedded(manifest(3, 2), RngStream(7, 0), 2.0);
  for (const auto& n : rec.nodes) {
    CHECK(n.id < rec.nodes.size());
    if (n.parent) {
      CHECK(*n.parent < n.id);
      const auto& ch = rec.nodes[*n.parent].children;
      CHECK(std::find(ch.begin(), ch.end(), n.id) != ch.end());
      CHECK(n.birth >= rec.nodes[*n.parent].birth);
      // Born at the parent's position.
      const auto s = rec.nodes[*n.parent].sample_at(n.birth);
      REQUIRE(s.has_value());
    }
    CHECK(n.times.front() == n.birth);
    CHECK(n.coords.size() == n.times.size() * 2);
    for (std::size_t s = 1; s < n.times.size(); ++s) CHECK(n.times[s] >= n.times[s - 1]);
    CHECK(n.end == 2.0);
    for (double t : rec.grid)
      if (t >= n.birth) CHECK(n.sample_at(t).has_value());
  }
  CHECK(rec.population_at(0.0) == 3);
  CHECK(rec.population_at(2.0) == rec.nodes.size());
  CHECK_THROWS_AS(rec.position(0, 0.123456), DomainError);
  CHECK_THROWS_AS(rec.position(rec.nodes.size(), 0.0), DomainError);
  CHECK_THROWS_AS(rec.index_at(-1.0), DomainError);
}

TEST_CASE("BBM population follows the Yule mean N e^t") {
  const std::size_t N = 3;
  const double t = 2.0;
  const int reps = 1000;
  double s = 0;
  auto m = manifest(N, 1, 1.0);
  for (int r = 0; r < reps; ++r)
    s += static_cast<double>(
        simulate_bbm_embedded(m, RngStream(8, static_cast<std::uint64_t>(r)), t).population_at(t));
  const double mean = s / reps;
  CHECK(std::abs(mean - N * std::exp(t)) <= 0.05 * N * std::exp(t));
}

TEST_CASE("retention prunes exited lines without touching the BBB") {
  auto m = manifest(3, 1);
  LineageOptions opt;
  opt.retain_after_exit = 0.0;
  const auto pruned = simulate_bbm_embedded(m, RngStream(9, 1), 3.0, opt);
  const auto full = simulate_bbm_embedded(m, RngStream(9, 1), 3.0);
  CHECK(pruned.nodes.size() <= full.nodes.size());
  const auto a = project_bbb(pruned), b = project_bbb(full);
  REQUIRE(a.observations.size() == b.observations.size());
  for (std::size_t i = 0; i < a.observations.size(); ++i) CHECK(a.observations[i].config == b.observations[i].config);
}

TEST_CASE("lineage limits") {
  auto m = manifest(3, 1);
  CHECK_THROWS_AS(simulate_bbm_embedded(m, RngStream(1, 0), -1.0), DomainError);
  CHECK_THROWS_AS(simulate_bbm_embedded(m, RngStream(1, 0), 11.0), DomainError);
  LineageOptions opt;
  opt.max_nodes = 10;
  CHECK_THROWS_AS(simulate_bbm_embedded(m, RngStream(1, 0), 8.0, opt), ResourceError);
  opt = {};
  opt.retain_after_exit = -1.0;
  CHECK_THROWS_AS(simulate_bbm_embedded(m, RngStream(1, 0), 1.0, opt), DomainError);
}
