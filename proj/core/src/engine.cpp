#include "bbb/engine.hpp"

#include <cmath>
#include <string>

namespace bbb {

std::size_t kill_index(const Configuration& c, std::size_t parent) {
  const std::size_t n = c.size();
  if (n == 0 || n != c.capacity()) {
    throw DomainError("kill_index: configuration must hold exactly N particles (has " +
                      std::to_string(n) + " of " + std::to_string(c.capacity()) + ")");
  }
  if (parent >= n) throw DomainError("kill_index: parent index out of range");

  const std::size_t dim = c.dim();
  std::vector<double> b(c.position(parent).begin(), c.position(parent).end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = c.position(i);
    for (std::size_t k = 0; k < dim; ++k) b[k] += x[k];
  }
  const double denom = static_cast<double>(n + 1);
  for (double& v : b) v /= denom;

  std::size_t best = 0;
  double best_d2 = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d2 = squared_distance(c.position(j), b);
    if (d2 > best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

BranchEvent apply_branch_in_place(Configuration& c, std::size_t parent, double time) {
  if (parent >= c.size()) throw DomainError("apply_branch: parent index out of range");
  BranchEvent ev;
  ev.time = time;
  ev.parent = parent;
  ev.barycenter_before = barycenter(c);
  if (c.full()) {
    const std::size_t k = kill_index(c, parent);
    c.copy_particle(parent, k);
    ev.killed = k;
    ev.newborn_slot = k;
  } else {
    const std::vector<double> copy(c.position(parent).begin(), c.position(parent).end());
    c.push_back(copy);
    ev.newborn_slot = c.size() - 1;
  }
  return ev;
}

std::pair<Configuration, BranchEvent> apply_branch(const Configuration& c, std::size_t parent,
                                                   double time) {
  Configuration out = c;
  BranchEvent ev = apply_branch_in_place(out, parent, time);
  return {std::move(out), std::move(ev)};
}

double sample_interbranch(RngStream& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_interbranch: population must be >= 1");
  return rng.exponential(static_cast<double>(n));
}

Configuration initial_configuration(const RunManifest& m, RngStream& rng) {
  const auto& ic = m.initial;
  Configuration c(m.d, m.N);
  switch (ic.kind) {
    case InitialCondition::Kind::PointMass: {
      const Point center = ic.center.dim() == 0 ? Point::zero(m.d) : ic.center;
      const std::size_t count = ic.count == 0 ? m.N : ic.count;
      for (std::size_t i = 0; i < count; ++i) c.push_back(center.coords());
      break;
    }
    case InitialCondition::Kind::Explicit:
      for (const auto& p : ic.points) c.push_back(p.coords());
      break;
    case InitialCondition::Kind::GaussianCloud: {
      const std::size_t count = ic.count == 0 ? m.N : ic.count;
      std::vector<double> x(m.d);
      for (std::size_t i = 0; i < count; ++i) {
        for (double& v : x) v = ic.scale * rng.normal();
        c.push_back(x);
      }
      break;
    }
  }
  return c;
}

double run_exact(Configuration x, std::span<const double> grid, RngStream& rng,
                 const SimulationHooks& hooks) {
  if (grid.empty() || grid.front() != 0.0) throw DomainError("run_exact: grid must start at 0");
  if (x.empty()) throw DomainError("run_exact: empty initial configuration");

  const auto observe = [&](double t, bool on_grid) {
    return !hooks.on_observation || hooks.on_observation(t, x, on_grid);
  };

  double t = 0.0;
  double next_event = t + sample_interbranch(rng, x.size());
  if (!observe(t, true)) return t;

  std::size_t gi = 1;
  while (gi < grid.size()) {
    const double tg = grid[gi];
    if (next_event < tg) {
      brownian_increment_in_place(x, next_event - t, rng);
      t = next_event;
      const std::size_t parent = rng.uniform_index(x.size());
      const BranchEvent ev = apply_branch_in_place(x, parent, t);
      if (hooks.on_event) hooks.on_event(ev);
      next_event = t + sample_interbranch(rng, x.size());
      if (!observe(t, false)) return t;
    } else {
      brownian_increment_in_place(x, tg - t, rng);
      t = tg;
      ++gi;
      if (!observe(t, true)) return t;
    }
  }
  return t;
}

double simulate_streaming(const RunManifest& m, RngStream& rng, const SimulationHooks& hooks) {
  m.validate();
  Configuration x = initial_configuration(m, rng);
  const auto grid = observation_grid(m);
  return run_exact(std::move(x), grid, rng, hooks);
}

Trajectory simulate(const RunManifest& m, RngStream rng) {
  Trajectory traj;
  traj.manifest = m;
  SimulationHooks hooks;
  hooks.on_observation = [&](double t, const Configuration& c, bool on_grid) {
    traj.observations.push_back({t, c, on_grid});
    return true;
  };
  hooks.on_event = [&](const BranchEvent& ev) { traj.events.push_back(ev); };
  simulate_streaming(m, rng, hooks);
  return traj;
}

Point barycenter_displacement(const RunManifest& m, RngStream rng) {
  m.validate();
  Configuration x = initial_configuration(m, rng);
  const Point start = barycenter(x);
  Point end = start;
  const double grid[] = {0.0, m.horizon};
  SimulationHooks hooks;
  hooks.on_observation = [&](double t, const Configuration& c, bool on_grid) {
    if (on_grid && t == m.horizon) end = barycenter(c);
    return true;
  };
  run_exact(std::move(x), m.horizon > 0.0 ? std::span<const double>(grid, 2)
                                          : std::span<const double>(grid, 1),
            rng, hooks);
  std::vector<double> diff(m.d);
  for (std::size_t k = 0; k < m.d; ++k) diff[k] = end[k] - start[k];
  return Point(std::move(diff));
}

}  // namespace bbb
