#include "bbb/lineage.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bbb {
namespace {

constexpr double kTimeTol = 1e-12;

bool same_time(double a, double b) { return std::abs(a - b) <= kTimeTol * std::max(1.0, std::abs(a)); }

class BbmSimulation {
 public:
  BbmSimulation(const RunManifest& m, RngStream rng, double window, const LineageOptions& opt)
      : m_(m), main_(rng), aux_(rng.substream(1)), window_(window), opt_(opt) {
    rec_.manifest = m;
    rec_.window = window;
    rec_.dim = m.d;
    rec_.grid = observation_grid(window, m.dt_obs);
  }

  LineageRecord run() {
    const Configuration x0 = initial_configuration(m_, main_);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const auto p = x0.position(i);
      const std::size_t id = new_node(std::nullopt, 0.0, {p.begin(), p.end()});
      slots_.push_back(id);
      in_bbb_[id] = 1;
    }
    rec_.index_history.push_back({0.0, slots_});

    next_main_ = t_main_ + sample_interbranch(main_, slots_.size());
    reschedule_aux(0.0);

    std::size_t gi = 1;
    while (gi < rec_.grid.size()) {
      const double tg = rec_.grid[gi];
      if (next_aux_ < next_main_ && next_aux_ < tg) {
        aux_branch(next_aux_);
      } else if (next_main_ < tg) {
        main_branch(next_main_);
      } else {
        grid_stop(tg);
        ++gi;
      }
    }
    for (auto& node : rec_.nodes) {
      if (node.end == kOpen) node.end = window_;
    }
    return std::move(rec_);
  }

 private:
  static constexpr double kOpen = -1.0;

  std::size_t new_node(std::optional<std::size_t> parent, double t, std::vector<double> pos) {
    if (rec_.nodes.size() >= opt_.max_nodes) {
      throw ResourceError("BBM population exceeded the budget of " + std::to_string(opt_.max_nodes) +
                          " nodes");
    }
    BbmNode node;
    node.id = rec_.nodes.size();
    node.parent = parent;
    node.birth = t;
    node.end = kOpen;
    node.times.push_back(t);
    node.coords.assign(pos.begin(), pos.end());
    rec_.nodes.push_back(std::move(node));
    current_.push_back(std::move(pos));
    last_.push_back(t);
    in_bbb_.push_back(0);
    retain_until_.push_back(std::numeric_limits<double>::infinity());
    if (parent) rec_.nodes[*parent].children.push_back(rec_.nodes.size() - 1);
    return rec_.nodes.size() - 1;
  }

  void record(std::size_t id, double t) {
    auto& node = rec_.nodes[id];
    if (node.times.back() == t) return;
    node.times.push_back(t);
    node.coords.insert(node.coords.end(), current_[id].begin(), current_[id].end());
  }

  void advance(std::size_t id, double t, RngStream& rng) {
    const double dt = t - last_[id];
    if (dt > 0.0) {
      const double scale = std::sqrt(dt);
      for (double& v : current_[id]) v += scale * rng.normal();
    }
    last_[id] = t;
  }

  // Same draw order and arithmetic as brownian_increment_in_place over the
  // slot-ordered configuration.
  void advance_bbb(double t) {
    const double dt = t - t_main_;
    if (dt > 0.0) {
      const double scale = std::sqrt(dt);
      for (std::size_t id : slots_) {
        for (double& v : current_[id]) v += scale * main_.normal();
        last_[id] = t;
      }
    }
    t_main_ = t;
  }

  void reschedule_aux(double t) {
    next_aux_ = aux_nodes_.empty()
                    ? std::numeric_limits<double>::infinity()
                    : t + aux_.exponential(static_cast<double>(aux_nodes_.size()));
  }

  void main_branch(double t) {
    advance_bbb(t);
    for (std::size_t id : slots_) record(id, t);

    Configuration x(m_.d, m_.N);
    for (std::size_t id : slots_) x.push_back(current_[id]);
    const std::size_t parent_slot = main_.uniform_index(slots_.size());
    const BranchEvent ev = apply_branch_in_place(x, parent_slot, t);

    const std::size_t parent_id = slots_[parent_slot];
    const std::size_t newborn = new_node(parent_id, t, current_[parent_id]);
    in_bbb_[newborn] = 1;
    if (ev.killed) {
      const std::size_t exiting = slots_[*ev.killed];
      slots_[*ev.killed] = newborn;
      in_bbb_[exiting] = 0;
      retain_until_[exiting] = t + opt_.retain_after_exit;
      aux_nodes_.push_back(exiting);
    } else {
      slots_.push_back(newborn);
    }
    rec_.events.push_back(ev);
    rec_.index_history.push_back({t, slots_});

    next_main_ = t + sample_interbranch(main_, slots_.size());
    reschedule_aux(t);
  }

  void aux_branch(double t) {
    const std::size_t parent_id = aux_nodes_[aux_.uniform_index(aux_nodes_.size())];
    advance(parent_id, t, aux_);
    record(parent_id, t);
    const std::size_t child = new_node(parent_id, t, current_[parent_id]);
    retain_until_[child] = retain_until_[parent_id];
    aux_nodes_.push_back(child);
    reschedule_aux(t);
  }

  void grid_stop(double t) {
    advance_bbb(t);
    for (std::size_t id : slots_) record(id, t);
    bool pruned = false;
    std::vector<std::size_t> keep;
    keep.reserve(aux_nodes_.size());
    for (std::size_t id : aux_nodes_) {
      advance(id, t, aux_);
      record(id, t);
      if (retain_until_[id] <= t) {
        rec_.nodes[id].end = t;
        pruned = true;
      } else {
        keep.push_back(id);
      }
    }
    if (pruned) {
      aux_nodes_.swap(keep);
      reschedule_aux(t);
    }
  }

  RunManifest m_;
  RngStream main_;
  RngStream aux_;
  double window_;
  LineageOptions opt_;
  LineageRecord rec_;

  std::vector<std::vector<double>> current_;
  std::vector<double> last_;
  std::vector<char> in_bbb_;
  std::vector<double> retain_until_;
  std::vector<std::size_t> slots_;
  std::vector<std::size_t> aux_nodes_;
  double t_main_ = 0.0;
  double next_main_ = 0.0;
  double next_aux_ = 0.0;
};

}  // namespace

std::optional<std::size_t> BbmNode::sample_at(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t - kTimeTol * std::max(1.0, std::abs(t)));
  if (it == times.end() || !same_time(*it, t)) return std::nullopt;
  // Prefer the last sample at this instant.
  while (std::next(it) != times.end() && same_time(*std::next(it), t)) ++it;
  return static_cast<std::size_t>(it - times.begin());
}

const std::vector<std::size_t>& LineageRecord::index_at(double t) const {
  if (index_history.empty()) throw DomainError("lineage record has no index history");
  auto it = std::upper_bound(index_history.begin(), index_history.end(), t,
                             [](double v, const IndexChange& c) { return v < c.time; });
  if (it == index_history.begin()) throw DomainError("index_at: time precedes the record");
  return std::prev(it)->index;
}

Point LineageRecord::position(std::size_t id, double t) const {
  if (id >= nodes.size()) throw DomainError("position: unknown node id");
  const auto s = nodes[id].sample_at(t);
  if (!s) {
    throw DomainError("position: node " + std::to_string(id) + " has no sample at t=" +
                      std::to_string(t));
  }
  return Point(nodes[id].sample(*s, dim));
}

bool LineageRecord::descends_from(std::size_t id, std::size_t ancestor) const {
  std::optional<std::size_t> cur = id;
  while (cur) {
    if (*cur == ancestor) return true;
    cur = nodes.at(*cur).parent;
  }
  return false;
}

std::size_t LineageRecord::population_at(double t) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [t](const BbmNode& n) { return n.birth <= t; }));
}

LineageRecord simulate_bbm_embedded(const RunManifest& m, RngStream rng, double window,
                                    const LineageOptions& options) {
  m.validate();
  if (!(window >= 0.0) || !std::isfinite(window)) throw DomainError("lineage: window must be >= 0");
  if (window > options.window_cap) {
    throw DomainError("lineage: window " + std::to_string(window) + " exceeds the cap of " +
                      std::to_string(options.window_cap));
  }
  if (!(options.retain_after_exit >= 0.0)) throw DomainError("lineage: retention must be >= 0");
  return BbmSimulation(m, rng, window, options).run();
}

Trajectory project_bbb(const LineageRecord& rec) {
  Trajectory traj;
  traj.manifest = rec.manifest;
  traj.manifest.horizon = rec.window;
  traj.events = rec.events;

  const auto snapshot = [&](double t) {
    const auto& index = rec.index_at(t);
    Configuration c(rec.dim, rec.manifest.N);
    for (std::size_t id : index) c.push_back(rec.position(id, t).coords());
    return c;
  };

  std::size_t gi = 0;
  std::size_t ei = 0;
  while (gi < rec.grid.size() || ei < rec.events.size()) {
    if (ei == rec.events.size() || (gi < rec.grid.size() && rec.grid[gi] <= rec.events[ei].time)) {
      traj.observations.push_back({rec.grid[gi], snapshot(rec.grid[gi]), true});
      ++gi;
    } else {
      traj.observations.push_back({rec.events[ei].time, snapshot(rec.events[ei].time), false});
      ++ei;
    }
  }
  return traj;
}

}  // namespace bbb
