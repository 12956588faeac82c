#include "bbb/events.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace bbb {
namespace {

constexpr double kTimeTol = 1e-9;

bool same_time(double a, double b) { return std::abs(a - b) <= kTimeTol * std::max(1.0, std::abs(a)); }

void require_three(std::size_t N) {
  if (N < 3) throw DomainError("event detectors require N >= 3");
}

// Last observation recorded at time t (post-event when an event sits at t).
const Observation& observation_at(const Trajectory& traj, double t) {
  const Observation* found = nullptr;
  for (const auto& obs : traj.observations) {
    if (same_time(obs.time, t)) found = &obs;
    if (obs.time > t + kTimeTol) break;
  }
  if (!found) {
    std::ostringstream os;
    os << "trajectory has no observation at t=" << t;
    throw DomainError(os.str());
  }
  return *found;
}

bool in_open_ball(std::span<const double> x, std::span<const double> shift, std::span<const double> center,
                  double r) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - shift[k] - center[k];
    s += diff * diff;
  }
  return s < r * r;
}

Point axis_point(double v, std::size_t d) {
  std::vector<double> x(d, 0.0);
  x[0] = v;
  return Point(std::move(x));
}

std::size_t cluster_split(std::size_t N) { return (N + 2) / 2; }  // ceil((N+1)/2)

}  // namespace

double r_N(std::size_t N) { return 1.0 / (4.0 * (static_cast<double>(N) + 1.0)); }

Point gamma_center(std::size_t N, std::size_t d) {
  require_three(N);
  const double up = static_cast<double>((N - 1 + 1) / 2);  // ceil((N-1)/2)
  const double down = static_cast<double>((N - 1) / 2);    // floor((N-1)/2)
  return axis_point((-5.0 * up + 5.0 * down) / static_cast<double>(N - 1), d);
}

AReport detect_A(const Trajectory& traj, double t) {
  const std::size_t N = traj.manifest.N;
  require_three(N);
  const Observation& start = observation_at(traj, t);
  const Observation& end = observation_at(traj, t + 1.0);
  if (start.config.size() != N || end.config.size() != N) {
    throw DomainError("detect_A: population below N in the window");
  }
  const std::size_t d = start.config.dim();
  const Point shift = barycenter(start.config);
  const double r = r_N(N);

  AReport rep;
  rep.no_branching = true;
  for (const auto& ev : traj.events) {
    if (ev.time >= t - kTimeTol && ev.time <= t + 1.0 + kTimeTol) {
      rep.no_branching = false;
      break;
    }
  }

  const Point left = axis_point(-5.0, d);
  const Point right = axis_point(5.0, d);
  const std::size_t m = cluster_split(N);
  rep.clusters = true;
  for (std::size_t j = 1; j < N; ++j) {
    const Point& target = j < m ? left : right;
    if (!in_open_ball(end.config.position(j), shift.coords(), target.coords(), r)) {
      rep.clusters = false;
      break;
    }
  }
  rep.center = in_open_ball(end.config.position(0), shift.coords(), gamma_center(N, d).coords(), r);
  return rep;
}

BReport detect_B(const LineageRecord& rec, double t) {
  const std::size_t N = rec.manifest.N;
  require_three(N);
  const double t1 = t + 1.0;
  const double t2 = t + 2.0;
  if (rec.window < t2 - kTimeTol) throw DomainError("detect_B: record does not cover [t+1, t+2]");
  const auto ancestors = rec.index_at(t1);
  if (ancestors.size() != N) throw DomainError("detect_B: population below N at t+1");
  const double r = r_N(N);

  BReport rep;
  rep.confined = true;
  std::size_t leader_branchings = 0;
  bool others_quiet = true;

  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t root = ancestors[j];
    const Point anchor = rec.position(root, t1);
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
      const std::size_t id = stack.back();
      stack.pop_back();
      const BbmNode& node = rec.nodes.at(id);
      if (node.end < t2 - kTimeTol) {
        throw DomainError("detect_B: node " + std::to_string(id) + " is not tracked through t+2");
      }
      for (std::size_t s = 0; s < node.sample_count(); ++s) {
        const double ts = node.times[s];
        if (ts < t1 - kTimeTol) continue;
        if (ts > t2 + kTimeTol) break;
        if (squared_distance(node.sample(s, rec.dim), anchor.coords()) > r * r) rep.confined = false;
      }
      for (std::size_t child : node.children) {
        const double born = rec.nodes[child].birth;
        if (born < t1 - kTimeTol || born > t2 + kTimeTol) continue;
        if (j == 0) {
          ++leader_branchings;
        } else {
          others_quiet = false;
        }
        stack.push_back(child);
      }
    }
  }
  rep.branching = others_quiet && leader_branchings >= N - 1;
  return rep;
}

EventReport detect_events(const Trajectory& traj, const LineageRecord& rec, double t) {
  EventReport r;
  r.t = t;
  r.a = detect_A(traj, t);
  r.b = detect_B(rec, t);
  return r;
}

std::string to_json(const EventReport& r) {
  nlohmann::json j;
  j["t"] = r.t;
  if (r.a) {
    j["A"] = {{"holds", r.a->holds()},
              {"A1_no_branching", r.a->no_branching},
              {"A2_clusters", r.a->clusters},
              {"A3_center", r.a->center}};
  }
  if (r.b) {
    j["B"] = {{"holds", r.b->holds()}, {"B1_branching", r.b->branching}, {"B2_confined", r.b->confined}};
  }
  return j.dump();
}

std::optional<SPartition> in_S(const Configuration& c) {
  const std::size_t N = c.capacity();
  require_three(N);
  if (c.size() != N) throw DomainError("in_S: configuration must hold exactly N particles");
  const std::size_t d = c.dim();
  const double r2 = 2.0 * r_N(N);
  const Point g = gamma_center(N, d);
  const Point left = axis_point(-5.0, d);
  const Point right = axis_point(5.0, d);
  const std::vector<double> no_shift(d, 0.0);

  SPartition part;
  for (std::size_t i = 0; i < N; ++i) {
    const auto x = c.position(i);
    if (in_open_ball(x, no_shift, g.coords(), r2)) {
      part.C.push_back(i);
    } else if (in_open_ball(x, no_shift, left.coords(), r2)) {
      part.G.push_back(i);
    } else if (in_open_ball(x, no_shift, right.coords(), r2)) {
      part.D.push_back(i);
    } else {
      return std::nullopt;
    }
  }
  const std::size_t need_left = (N - 1 + 1) / 2 + 1;  // ceil((N-1)/2) + 1
  const std::size_t need_right = (N - 1) / 2 + 1;     // floor((N-1)/2) + 1
  if (part.C.empty()) return std::nullopt;
  if (part.G.size() + part.C.size() < need_left) return std::nullopt;
  if (part.D.size() + part.C.size() < need_right) return std::nullopt;
  return part;
}

std::optional<double> first_extent_time(const Trajectory& traj, double L, bool from_one,
                                        bool grid_only) {
  const double start = from_one ? 1.0 : 0.0;
  for (const auto& obs : traj.observations) {
    if (obs.time < start - kTimeTol) continue;
    if (grid_only && !obs.on_grid) continue;
    if (extent(obs.config) <= L) return obs.time;
  }
  return std::nullopt;
}

std::vector<double> extent_stopping_times(const Trajectory& traj, double L, bool from_one,
                                          bool grid_only) {
  std::vector<double> out;
  double start = from_one ? 1.0 : 0.0;
  for (const auto& obs : traj.observations) {
    if (obs.time < start - kTimeTol) continue;
    if (grid_only && !obs.on_grid) continue;
    if (extent(obs.config) <= L) {
      out.push_back(obs.time);
      start = obs.time + 2.0;
    }
  }
  return out;
}

RegenerationSearch find_regenerations(const Trajectory& traj, const LineageRecord& rec, double L,
                                      bool from_one) {
  RegenerationSearch out;
  out.T = extent_stopping_times(traj, L, from_one, true);
  const double covered = std::min(rec.window, traj.manifest.horizon);
  for (double T : out.T) {
    if (T + 2.0 > covered + kTimeTol) break;
    EventReport rep = detect_events(traj, rec, T);
    if (rep.a->holds() && rep.b->holds()) {
      out.tau.push_back(T + 1.0);
      out.rho.push_back(T + 2.0);
    }
    out.reports.push_back(std::move(rep));
  }
  return out;
}

bool all_descend_from_leader(const LineageRecord& rec, double t) {
  const std::size_t leader = rec.index_at(t + 1.0).at(0);
  for (std::size_t id : rec.index_at(t + 2.0)) {
    if (!rec.descends_from(id, leader)) return false;
  }
  return true;
}

}  // namespace bbb
