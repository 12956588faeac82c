#include "bbb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace bbb {
namespace {

using nlohmann::json;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DomainError("malformed number '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DomainError("malformed index '" + s + "'");
  return v;
}

std::size_t parse_one_based(const std::string& s) {
  const std::size_t v = parse_index(s);
  if (v == 0) throw DomainError("indices in artifacts are 1-based");
  return v - 1;
}

/// Reads the optional preamble and the header row; returns the header fields.
std::vector<std::string> read_head(std::istream& is, std::optional<Preamble>& pre, const char* what) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind('#', 0) == 0) {
      if (!pre) pre = parse_preamble(line);
      continue;
    }
    if (!line.empty()) return split_csv(line);
  }
  throw DomainError(std::string(what) + ": missing header row");
}

std::map<std::size_t, std::vector<BranchEvent>> read_events(std::istream& is) {
  std::optional<Preamble> pre;
  const auto eh = read_head(is, pre, "events CSV");
  if (eh.size() != 4 || eh[0] != "replica" || eh[1] != "time" || eh[2] != "parent" || eh[3] != "killed")
    throw DomainError("events CSV: unexpected header");
  std::map<std::size_t, std::vector<BranchEvent>> events;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw DomainError("events CSV: wrong field count in '" + line + "'");
    BranchEvent ev;
    ev.time = parse_double(f[1]);
    ev.parent = parse_one_based(f[2]);
    if (!f[3].empty()) ev.killed = parse_one_based(f[3]);
    events[parse_index(f[0])].push_back(std::move(ev));
  }
  return events;
}

void write_coords(std::ostream& os, std::span<const double> xs) {
  for (double x : xs) os << ',' << format_double(x);
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DomainError("cannot write " + p.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DomainError("cannot read " + p.string());
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string artifact_preamble(const RunManifest& m) {
  return "# bbb manifest_hash=" + manifest_hash_hex(m) + " seed=" + std::to_string(m.seed) +
         " manifest=" + to_json(m) + "\n";
}

std::optional<Preamble> parse_preamble(std::string_view line) {
  constexpr std::string_view tag = "# bbb ";
  if (line.substr(0, tag.size()) != tag) return std::nullopt;
  Preamble p;
  auto field = [&](std::string_view key) -> std::optional<std::string_view> {
    const auto pos = line.find(key);
    if (pos == std::string_view::npos) return std::nullopt;
    auto rest = line.substr(pos + key.size());
    return rest;
  };
  if (auto h = field("manifest_hash=")) p.manifest_hash = std::string(h->substr(0, h->find(' ')));
  if (auto s = field(" seed=")) {
    const auto v = s->substr(0, s->find(' '));
    std::from_chars(v.data(), v.data() + v.size(), p.seed);
  }
  if (auto j = field(" manifest=")) {
    std::string_view text = *j;
    while (!text.empty() && (text.back() == '\r' || text.back() == '\n')) text.remove_suffix(1);
    p.manifest = manifest_from_json(text);
  }
  return p;
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& replicas) {
  if (replicas.empty()) throw DomainError("write_trajectory_csv: nothing to write");
  const RunManifest& m = replicas.front().manifest;
  os << artifact_preamble(m);
  os << "replica,time,particle_index";
  for (std::size_t k = 0; k < m.d; ++k) os << ",coord_" << k;
  os << '\n';
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    for (const auto& obs : replicas[r].observations) {
      const std::string t = format_double(obs.time);
      for (std::size_t i = 0; i < obs.config.size(); ++i) {
        os << r << ',' << t << ',' << (i + 1);
        write_coords(os, obs.config.position(i));
        os << '\n';
      }
    }
  }
}

void write_trajectory_jsonl(std::ostream& os, const std::vector<Trajectory>& replicas) {
  if (replicas.empty()) throw DomainError("write_trajectory_jsonl: nothing to write");
  os << artifact_preamble(replicas.front().manifest);
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    for (const auto& obs : replicas[r].observations) {
      json pos = json::array();
      for (std::size_t i = 0; i < obs.config.size(); ++i) {
        const auto p = obs.config.position(i);
        pos.push_back(std::vector<double>(p.begin(), p.end()));
      }
      json rec = {{"replica", r}, {"time", obs.time}, {"on_grid", obs.on_grid}, {"positions", pos}};
      os << rec.dump() << '\n';
    }
  }
}

void write_events_csv(std::ostream& os, const std::vector<Trajectory>& replicas) {
  if (replicas.empty()) throw DomainError("write_events_csv: nothing to write");
  os << artifact_preamble(replicas.front().manifest);
  os << "replica,time,parent,killed\n";
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    for (const auto& ev : replicas[r].events) {
      os << r << ',' << format_double(ev.time) << ',' << (ev.parent + 1) << ',';
      if (ev.killed) os << (*ev.killed + 1);
      os << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& trajectory_csv, std::istream* events_csv) {
  std::optional<Preamble> pre;
  const auto header = read_head(trajectory_csv, pre, "trajectory CSV");
  if (header.size() < 4 || header[0] != "replica" || header[1] != "time" || header[2] != "particle_index")
    throw DomainError("trajectory CSV: unexpected header");
  const std::size_t d = header.size() - 3;

  struct Row {
    double time;
    std::size_t particle;
    std::vector<double> x;
  };
  std::map<std::size_t, std::vector<Row>> rows;
  std::string line;
  while (std::getline(trajectory_csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw DomainError("trajectory CSV: wrong field count in '" + line + "'");
    Row row{parse_double(f[1]), parse_one_based(f[2]), {}};
    for (std::size_t k = 0; k < d; ++k) row.x.push_back(parse_double(f[3 + k]));
    rows[parse_index(f[0])].push_back(std::move(row));
  }

  std::map<std::size_t, std::vector<BranchEvent>> events;
  if (events_csv) events = read_events(*events_csv);

  std::size_t max_pop = 0;
  for (auto& [r, rs] : rows) {
    std::stable_sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
    for (std::size_t i = 0; i < rs.size();) {
      std::size_t j = i;
      while (j < rs.size() && rs[j].time == rs[i].time) ++j;
      max_pop = std::max(max_pop, j - i);
      i = j;
    }
  }
  RunManifest m;
  if (pre && pre->manifest) {
    m = *pre->manifest;
    if (m.d != d) throw DomainError("trajectory CSV: coordinate columns disagree with the manifest");
    if (max_pop > m.N) throw DomainError("trajectory CSV: population exceeds the manifest's N");
  } else {
    m.N = max_pop;
    m.d = d;
    m.horizon = 0.0;
    if (pre) m.seed = pre->seed;
  }

  std::vector<Trajectory> out;
  for (auto& [r, rs] : rows) {
    Trajectory tr;
    tr.manifest = m;
    auto& evs = events[r];
    std::sort(evs.begin(), evs.end(), [](const BranchEvent& a, const BranchEvent& b) { return a.time < b.time; });
    tr.events = evs;
    for (std::size_t i = 0; i < rs.size();) {
      std::size_t j = i;
      while (j < rs.size() && rs[j].time == rs[i].time) ++j;
      Configuration c(d, m.N);
      for (std::size_t k = i; k < j; ++k) {
        if (rs[k].particle != k - i) throw DomainError("trajectory CSV: particle indices must run 1..n per instant");
        c.push_back(rs[k].x);
      }
      const double t = rs[i].time;
      const bool is_event =
          std::any_of(evs.begin(), evs.end(), [&](const BranchEvent& e) { return same_time(e.time, t); });
      tr.observations.push_back({t, std::move(c), !is_event});
      i = j;
    }
    if (!(pre && pre->manifest)) tr.manifest.horizon = tr.observations.back().time;
    out.push_back(std::move(tr));
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_lineage(const std::filesystem::path& dir, const LineageRecord& rec) {
  std::filesystem::create_directories(dir);
  const std::string pre = artifact_preamble(rec.manifest);
  {
    auto os = open_out(dir / "nodes.jsonl");
    os << pre;
    os << json({{"type", "meta"}, {"window", rec.window}, {"dim", rec.dim}, {"grid", rec.grid}}).dump() << '\n';
    for (const auto& n : rec.nodes) {
      json j = {{"type", "node"}, {"id", n.id}, {"birth", n.birth}, {"death", n.end}, {"children", n.children}};
      j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
      os << j.dump() << '\n';
    }
  }
  {
    auto os = open_out(dir / "paths.csv");
    os << pre << "node_id,time";
    for (std::size_t k = 0; k < rec.dim; ++k) os << ",coord_" << k;
    os << '\n';
    for (const auto& n : rec.nodes) {
      for (std::size_t s = 0; s < n.sample_count(); ++s) {
        os << n.id << ',' << format_double(n.times[s]);
        write_coords(os, n.sample(s, rec.dim));
        os << '\n';
      }
    }
  }
  {
    auto os = open_out(dir / "index.csv");
    os << pre << "time,slot,node_id\n";
    for (const auto& ch : rec.index_history) {
      for (std::size_t j = 0; j < ch.index.size(); ++j)
        os << format_double(ch.time) << ',' << (j + 1) << ',' << ch.index[j] << '\n';
    }
  }
  {
    Trajectory tr;
    tr.manifest = rec.manifest;
    tr.events = rec.events;
    auto os = open_out(dir / "events.csv");
    write_events_csv(os, {tr});
  }
}

LineageRecord read_lineage(const std::filesystem::path& dir) {
  LineageRecord rec;
  bool have_meta = false;
  {
    auto is = open_in(dir / "nodes.jsonl");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        auto p = parse_preamble(line);
        if (!p || !p->manifest) throw DomainError("nodes.jsonl: preamble must carry the manifest");
        rec.manifest = *p->manifest;
        continue;
      }
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw DomainError(std::string("nodes.jsonl: ") + e.what());
      }
      if (j.at("type") == "meta") {
        rec.window = j.at("window").get<double>();
        rec.dim = j.at("dim").get<std::size_t>();
        rec.grid = j.at("grid").get<std::vector<double>>();
        have_meta = true;
      } else {
        BbmNode n;
        n.id = j.at("id").get<std::size_t>();
        if (!j.at("parent").is_null()) n.parent = j.at("parent").get<std::size_t>();
        n.birth = j.at("birth").get<double>();
        n.end = j.at("death").get<double>();
        n.children = j.at("children").get<std::vector<std::size_t>>();
        if (n.id != rec.nodes.size()) throw DomainError("nodes.jsonl: ids must be consecutive from 0");
        rec.nodes.push_back(std::move(n));
      }
    }
  }
  if (!have_meta) throw DomainError("nodes.jsonl: missing meta record");
  {
    auto is = open_in(dir / "paths.csv");
    std::optional<Preamble> pre;
    const auto h = read_head(is, pre, "paths.csv");
    if (h.size() != 2 + rec.dim) throw DomainError("paths.csv: unexpected header");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto f = split_csv(line);
      if (f.size() != h.size()) throw DomainError("paths.csv: wrong field count");
      const std::size_t id = parse_index(f[0]);
      if (id >= rec.nodes.size()) throw DomainError("paths.csv: unknown node id");
      rec.nodes[id].times.push_back(parse_double(f[1]));
      for (std::size_t k = 0; k < rec.dim; ++k) rec.nodes[id].coords.push_back(parse_double(f[2 + k]));
    }
  }
  {
    auto is = open_in(dir / "index.csv");
    std::optional<Preamble> pre;
    const auto h = read_head(is, pre, "index.csv");
    if (h.size() != 3) throw DomainError("index.csv: unexpected header");
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto f = split_csv(line);
      if (f.size() != 3) throw DomainError("index.csv: wrong field count");
      const double t = parse_double(f[0]);
      const std::size_t slot = parse_one_based(f[1]);
      if (rec.index_history.empty() || rec.index_history.back().time != t) {
        if (slot != 0) throw DomainError("index.csv: each change must list slots from 1");
        rec.index_history.push_back({t, {}});
      }
      auto& idx = rec.index_history.back().index;
      if (slot != idx.size()) throw DomainError("index.csv: slots out of order");
      idx.push_back(parse_index(f[2]));
    }
  }
  {
    auto is = open_in(dir / "events.csv");
    auto evs = read_events(is);
    if (evs.size() > 1) throw DomainError("events.csv: lineage holds a single replica");
    if (!evs.empty()) rec.events = std::move(evs.begin()->second);
  }
  return rec;
}

}  // namespace bbb
