#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bbb/core.hpp"
#include "bbb/detcfg.hpp"
#include "bbb/engine.hpp"
#include "bbb/events.hpp"
#include "bbb/io.hpp"
#include "bbb/lineage.hpp"
#include "bbb/manifest.hpp"
#include "bbb/parallel.hpp"
#include "bbb/stats.hpp"
#include "json.hpp"

namespace bbb::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string out_dir = ".";
  std::size_t threads = 0;
  std::size_t resolved_threads() const { return resolve_threads(threads ? std::optional(threads) : std::nullopt); }
};

struct ManifestFlags {
  std::size_t N = 1;
  std::size_t d = 1;
  double horizon = 1.0;
  double dt_obs = 0.1;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::string init = "point";
  std::string manifest_path;
  std::vector<CLI::Option*> options;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out,-o", c.out_dir, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads (default: $BBB_THREADS, else all cores)");
}

void add_manifest_flags(CLI::App* sub, ManifestFlags& f) {
  f.options.push_back(sub->add_option("--N", f.N, "Particle capacity")->capture_default_str());
  f.options.push_back(sub->add_option("--d", f.d, "Spatial dimension")->capture_default_str());
  f.options.push_back(sub->add_option("--horizon", f.horizon, "Time horizon")->capture_default_str());
  f.options.push_back(sub->add_option("--dt_obs,--dt-obs", f.dt_obs, "Observation grid step")->capture_default_str());
  f.options.push_back(sub->add_option("--seed", f.seed, "Master seed")->capture_default_str());
  f.options.push_back(sub->add_option("--replicas", f.replicas, "Independent replicas")->capture_default_str());
  f.options.push_back(sub->add_option("--initial", f.init,
                                      "point[:x,..] | gaussian:<scale> | spread:<extent> | explicit:<x,..;x,..>")
                          ->capture_default_str());
  sub->add_option("--manifest", f.manifest_path, "Manifest JSON (overrides flags)");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DomainError("malformed number '" + tok + "' in --initial");
    }
  }
  return v;
}

InitialCondition parse_initial(const std::string& spec, std::size_t N, std::size_t d) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "point") {
    if (arg.empty()) return InitialCondition::point_mass(Point::zero(d));
    return InitialCondition::point_mass(Point(parse_list(arg)));
  }
  if (kind == "gaussian") return InitialCondition::gaussian(arg.empty() ? 1.0 : parse_list(arg).at(0));
  if (kind == "spread") {
    // N points evenly spaced along the first axis with the given extent.
    const double e = arg.empty() ? 1.0 : parse_list(arg).at(0);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> x(d, 0.0);
      x[0] = N == 1 ? 0.0 : -e / 2 + e * static_cast<double>(i) / static_cast<double>(N - 1);
      pts.emplace_back(std::move(x));
    }
    return InitialCondition::explicit_points(std::move(pts));
  }
  if (kind == "explicit") {
    std::vector<Point> pts;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ';')) pts.emplace_back(parse_list(tok));
    return InitialCondition::explicit_points(std::move(pts));
  }
  throw DomainError("unknown --initial kind '" + kind + "'");
}

RunManifest resolve_manifest(const ManifestFlags& f, std::ostream& err) {
  if (!f.manifest_path.empty()) {
    for (const auto* o : f.options)
      if (o->count() > 0) err << "warning: manifest file overrides " << o->get_name() << '\n';
    return load_manifest(f.manifest_path);
  }
  RunManifest m;
  m.N = f.N;
  m.d = f.d;
  m.horizon = f.horizon;
  m.dt_obs = f.dt_obs;
  m.seed = f.seed;
  m.replicas = f.replicas;
  m.initial = parse_initial(f.init, f.N, f.d);
  m.validate();
  return m;
}

json header_json(const std::string& command, const RunManifest& m) {
  return {{"command", command},
          {"manifest", json::parse(to_json(m))},
          {"manifest_hash", manifest_hash_hex(m)},
          {"seed", m.seed}};
}

json report_json(const EstimatorReport& r) { return json::parse(to_json(r)); }

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DomainError("output directory not writable: " + c.out_dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DomainError("cannot write " + p.string());
  os << text;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DomainError(path + ": " + e.what());
  }
}

std::vector<Point> points_from_json(const json& j) {
  std::vector<Point> pts;
  for (const auto& p : j) {
    if (p.is_number()) {
      pts.push_back(Point{p.get<double>()});
    } else {
      pts.emplace_back(p.get<std::vector<double>>());
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const ManifestFlags& f, const Common& c, const std::string& format, bool lineage,
                 std::ostream& out, std::ostream& err) {
  const RunManifest m = resolve_manifest(f, err);
  const auto dir = prepare_out(c);
  auto trajs = parallel_map(m.replicas, c.resolved_threads(), [&](std::size_t r) { return simulate(m, RngStream(m.seed, r)); });
  if (format == "jsonl") {
    std::ofstream os(dir / "trajectory.jsonl", std::ios::binary);
    write_trajectory_jsonl(os, trajs);
  } else {
    std::ofstream os(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(os, trajs);
  }
  {
    std::ofstream os(dir / "events.csv", std::ios::binary);
    write_events_csv(os, trajs);
  }
  if (lineage) {
    for (std::size_t r = 0; r < m.replicas; ++r) {
      const auto rec = simulate_bbm_embedded(m, RngStream(m.seed, r), m.horizon);
      write_lineage(dir / ("lineage_" + std::to_string(r)), rec);
    }
  }
  std::size_t events = 0;
  for (const auto& t : trajs) events += t.events.size();
  out << "simulated " << m.replicas << " replica(s), " << events << " branch events, manifest_hash "
      << manifest_hash_hex(m) << '\n';
  return 0;
}

int cmd_diffusivity(const ManifestFlags& f, const Common& c, std::ostream& out, std::ostream& err) {
  const RunManifest m = resolve_manifest(f, err);
  if (m.replicas < 3) throw DomainError("diffusivity needs at least 3 replicas");
  if (!(m.horizon > 0)) throw DomainError("diffusivity needs a positive horizon");
  const auto dir = prepare_out(c);
  auto disp = parallel_map(m.replicas, c.resolved_threads(),
                           [&](std::size_t r) { return barycenter_displacement(m, RngStream(m.seed, r)); });
  const auto s2 = estimate_sigma2(disp, m.horizon, m.seed);
  const auto di = drift_and_isotropy(disp, m.seed);
  json j = header_json("diffusivity", m);
  j["sigma2"] = report_json(s2);
  j["drift_isotropy"] = report_json(di);
  write_file(dir / "diffusivity.json", j.dump(2) + "\n");
  out << "sigma2 = " << format_double(s2.estimate[0]) << " (SE " << format_double(s2.std_error[0])
      << "), drift/isotropy checks " << (di.all_passed() ? "passed" : "FAILED") << '\n';
  return 0;
}

int cmd_extent_tails(const ManifestFlags& f, const Common& c, double L, bool from_zero, std::ostream& out,
                     std::ostream& err) {
  const RunManifest m = resolve_manifest(f, err);
  if (!(L > 0)) throw DomainError("--L must be positive");
  const auto dir = prepare_out(c);
  const auto grid = observation_grid(m);
  const double start = from_zero ? 0.0 : 1.0;
  struct Hit {
    double time;
    bool hit;
  };
  auto hits = parallel_map(m.replicas, c.resolved_threads(), [&](std::size_t r) {
    RngStream rng(m.seed, r);
    Configuration x0 = initial_configuration(m, rng);
    Hit h{m.horizon, false};
    SimulationHooks hooks;
    hooks.on_observation = [&](double t, const Configuration& cfg, bool) {
      if (t >= start && cfg.size() > 0 && extent(cfg) <= L) {
        h = {t, true};
        return false;
      }
      return true;
    };
    run_exact(std::move(x0), grid, rng, hooks);
    return h;
  });
  std::vector<double> times;
  std::size_t censored = 0;
  std::ostringstream csv;
  csv << artifact_preamble(m) << "replica,time,censored\n";
  for (std::size_t r = 0; r < hits.size(); ++r) {
    csv << r << ',' << format_double(hits[r].time) << ',' << (hits[r].hit ? 0 : 1) << '\n';
    if (hits[r].hit) {
      times.push_back(hits[r].time);
    } else {
      ++censored;
    }
  }
  write_file(dir / "hitting_times.csv", csv.str());
  auto rep = fit_tail(times, {}, m.seed);
  rep.metrics.emplace_back("L", L);
  rep.metrics.emplace_back("censored", static_cast<double>(censored));
  if (censored > 0) rep.flags.push_back("censored_at_horizon");
  json j = header_json("extent-tails", m);
  j["tail"] = report_json(rep);
  write_file(dir / "extent_tails.json", j.dump(2) + "\n");
  out << "hits " << times.size() << "/" << m.replicas;
  if (!rep.estimate.empty()) out << ", log-survival slope " << format_double(rep.estimate[0]);
  out << ", checks " << (rep.all_passed() ? "passed" : "FAILED") << '\n';
  return 0;
}

int cmd_collapse(const std::string& config_path, bool global, const Common& c, std::ostream& out) {
  const std::string text = read_text(config_path);
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(config_path + ": " + e.what());
  }
  const auto pts = points_from_json(cfg.at("positions"));
  Weights w = cfg.contains("weights") ? cfg.at("weights").get<Weights>() : Weights(pts.size(), 1);
  const WeightedConfig wc(pts, w);
  const auto dir = prepare_out(c);
  const auto trace = collapse(wc, global ? AmbiguityCheck::Global : AmbiguityCheck::Decisions);
  json j = json::parse(to_json(trace));
  j["command"] = "collapse";
  j["manifest_hash"] = hex64(fnv1a(text));
  j["seed"] = 0;
  if (pts.size() <= 9) {
    j["margin"] = unambiguity_margin(pts);
    j["generic_margin"] = unambiguity_margin(pts, MarginScope::Generic);
  }
  write_file(dir / "collapse.json", j.dump(2) + "\n");
  out << "sequence (" << [&] {
    std::string s;
    for (std::size_t i = 0; i < trace.sequence.size(); ++i) s += (i ? "," : "") + std::to_string(trace.sequence[i] + 1);
    return s;
  }() << ") kills (" << [&] {
    std::string s;
    for (std::size_t i = 0; i < trace.kills.size(); ++i) s += (i ? "," : "") + std::to_string(trace.kills[i] + 1);
    return s;
  }() << ")\n";
  return 0;
}

int cmd_unambiguity(const std::string& configs_path, std::size_t N, std::size_t d, std::size_t count,
                    std::uint64_t seed, double scale, const Common& c, std::ostream& out) {
  std::vector<std::vector<Point>> configs;
  std::string hash_source;
  if (!configs_path.empty()) {
    hash_source = read_text(configs_path);
    json j;
    try {
      j = json::parse(hash_source);
    } catch (const json::exception& e) {
      throw DomainError(configs_path + ": " + e.what());
    }
    const json& list = j.is_object() ? j.at("configs") : j;
    for (const auto& cj : list) configs.push_back(points_from_json(cj.is_object() ? cj.at("positions") : cj));
  } else {
    if (N == 0 || d == 0 || count == 0) throw DomainError("random configs need --N, --d, --count >= 1");
    if (N > 9) throw DomainError("unambiguity margins are limited to N <= 9");
    hash_source = "random N=" + std::to_string(N) + " d=" + std::to_string(d) + " count=" + std::to_string(count) +
                  " seed=" + std::to_string(seed) + " scale=" + format_double(scale);
    for (std::size_t i = 0; i < count; ++i) {
      RngStream rng(seed, i);
      std::vector<Point> pts;
      for (std::size_t p = 0; p < N; ++p) {
        std::vector<double> x(d);
        for (double& v : x) v = scale * (2.0 * rng.uniform() - 1.0);
        pts.emplace_back(std::move(x));
      }
      configs.push_back(std::move(pts));
    }
  }
  const auto dir = prepare_out(c);
  auto margins = parallel_map(configs.size(), c.resolved_threads(), [&](std::size_t i) {
    if (configs[i].size() > 9) throw DomainError("unambiguity margins are limited to N <= 9");
    return std::pair{unambiguity_margin(configs[i]), unambiguity_margin(configs[i], MarginScope::Generic)};
  });
  std::ostringstream csv;
  csv << "# bbb manifest_hash=" << hex64(fnv1a(hash_source)) << " seed=" << seed << '\n';
  csv << "config_id,margin,generic_margin\n";
  for (std::size_t i = 0; i < margins.size(); ++i)
    csv << (i + 1) << ',' << format_double(margins[i].first) << ',' << format_double(margins[i].second) << '\n';
  write_file(dir / "margins.csv", csv.str());
  double lo = std::numeric_limits<double>::infinity(), lo_generic = lo;
  for (const auto& [m, g] : margins) {
    lo = std::min(lo, m);
    lo_generic = std::min(lo_generic, g);
  }
  out << margins.size() << " margin(s), smallest " << format_double(lo) << ", smallest generic "
      << format_double(lo_generic) << '\n';
  return 0;
}

std::vector<Box> default_boxes(std::size_t N, std::size_t d) {
  const std::size_t n = N * d;
  auto cube = [&](double a) { return Box{std::vector<double>(n, -a), std::vector<double>(n, a)}; };
  auto split = [&](double lo0, double hi0, double lo, double hi) {
    Box b{std::vector<double>(n, lo), std::vector<double>(n, hi)};
    for (std::size_t k = 0; k < d; ++k) {
      b.lower[k] = lo0;
      b.upper[k] = hi0;
    }
    return b;
  };
  return {cube(1.0),          cube(0.5),          split(0.0, 2.0, -2.0, 0.0),
          split(-2.0, 0.0, 0.0, 2.0), cube(3.0), split(0.5, 1.5, -1.5, -0.5)};
}

int cmd_minorization(const ManifestFlags& f, const Common& c, double L, double t, const std::string& boxes_path,
                     std::ostream& out, std::ostream& err) {
  ManifestFlags g = f;
  if (g.init == "point") g.init = "spread:" + format_double(L);
  RunManifest m = resolve_manifest(g, err);
  m.horizon = 2.0;
  const auto dir = prepare_out(c);
  RngStream init_rng(m.seed, std::numeric_limits<std::uint64_t>::max());
  MinorizationParams p;
  p.start = initial_configuration(m, init_rng);
  p.L = L;
  p.t = t;
  p.replicas = m.replicas;
  p.seed = m.seed;
  p.threads = c.resolved_threads();
  if (boxes_path.empty()) {
    p.boxes = default_boxes(m.N, m.d);
  } else {
    for (const auto& bj : parse_json_file(boxes_path))
      p.boxes.push_back({bj.at("lower").get<std::vector<double>>(), bj.at("upper").get<std::vector<double>>()});
  }
  const auto rep = minorization_check(p);
  json j = header_json("minorization", m);
  json boxes = json::array();
  for (const auto& b : p.boxes) boxes.push_back({{"lower", b.lower}, {"upper", b.upper}});
  j["boxes"] = boxes;
  j["report"] = report_json(rep);
  write_file(dir / "minorization.json", j.dump(2) + "\n");
  out << "gamma = " << format_double(rep.metric("gamma")) << ", " << p.boxes.size() << " boxes, checks "
      << (rep.all_passed() ? "passed" : "FAILED") << '\n';
  return 0;
}

int cmd_measure(const ManifestFlags& f, const Common& c, double lo, double hi, std::size_t bins, std::ostream& out,
                std::ostream& err) {
  const RunManifest m = resolve_manifest(f, err);
  const auto dir = prepare_out(c);
  const std::vector<double> grid{0.0, m.horizon};
  auto finals = parallel_map(m.replicas, c.resolved_threads(), [&](std::size_t r) {
    RngStream rng(m.seed, r);
    Configuration x = initial_configuration(m, rng);
    Configuration last = x;
    SimulationHooks hooks;
    hooks.on_observation = [&](double, const Configuration& cfg, bool) {
      last = cfg;
      return true;
    };
    run_exact(std::move(x), m.horizon > 0 ? std::span<const double>(grid) : std::span<const double>(grid.data(), 1),
              rng, hooks);
    return last;
  });
  const auto res = empirical_measure(finals, HistogramGrid::uniform(m.d, lo, hi, bins));
  write_file(dir / "histogram.csv", artifact_preamble(m) + res.pooled.to_csv());
  json j = header_json("measure", m);
  j["split_half_l1"] = res.split_half_l1;
  j["out_of_range"] = res.out_of_range;
  j["warnings"] = res.warnings;
  write_file(dir / "measure.json", j.dump(2) + "\n");
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';
  out << "histogram over " << res.pooled.grid().cells() << " cells, split-half L1 "
      << format_double(res.split_half_l1) << '\n';
  return 0;
}

struct EventsOptions {
  std::string trajectory;
  std::string events_file;
  std::string lineage_dir;
  std::vector<double> times;
  double L = 1.0;
  double window = 0.0;
  double retain = std::numeric_limits<double>::infinity();
};

int cmd_events(const ManifestFlags& f, const Common& c, const EventsOptions& e, std::ostream& out,
               std::ostream& err) {
  const auto dir = prepare_out(c);
  std::ostringstream lines;
  std::size_t examined = 0, regenerations = 0;
  auto emit = [&](std::size_t replica, const EventReport& rep) {
    json j = json::parse(to_json(rep));
    j["replica"] = replica;
    lines << j.dump() << '\n';
    ++examined;
  };

  if (!e.trajectory.empty()) {
    std::ifstream ts(e.trajectory, std::ios::binary);
    if (!ts) throw DomainError("cannot read " + e.trajectory);
    std::ifstream es;
    if (!e.events_file.empty()) {
      es.open(e.events_file, std::ios::binary);
      if (!es) throw DomainError("cannot read " + e.events_file);
    } else {
      err << "warning: no events file; branching is treated as absent\n";
    }
    auto trajs = read_trajectories(ts, e.events_file.empty() ? nullptr : &es);
    std::optional<LineageRecord> rec;
    if (!e.lineage_dir.empty()) {
      rec = read_lineage(e.lineage_dir);
      if (trajs.size() != 1) throw DomainError("--lineage applies to a single-replica trajectory");
    }
    lines << artifact_preamble(trajs.front().manifest);
    for (std::size_t r = 0; r < trajs.size(); ++r) {
      const auto& tr = trajs[r];
      std::vector<double> ts_list = e.times;
      if (ts_list.empty()) ts_list = extent_stopping_times(tr, e.L, true, true);
      for (double t : ts_list) {
        EventReport rep;
        rep.t = t;
        try {
          rep.a = detect_A(tr, t);
        } catch (const DomainError& ex) {
          err << "warning: A not evaluated at t=" << format_double(t) << ": " << ex.what() << '\n';
        }
        if (rec) {
          try {
            rep.b = detect_B(*rec, t);
          } catch (const DomainError& ex) {
            err << "warning: B not evaluated at t=" << format_double(t) << ": " << ex.what() << '\n';
          }
        }
        if (rep.a && rep.b && rep.a->holds() && rep.b->holds()) ++regenerations;
        emit(r, rep);
      }
    }
  } else {
    const RunManifest m = resolve_manifest(f, err);
    const double window = e.window > 0 ? e.window : m.horizon;
    LineageOptions opts;
    opts.retain_after_exit = e.retain;
    lines << artifact_preamble(m);
    auto results = parallel_map(m.replicas, c.resolved_threads(), [&](std::size_t r) {
      RunManifest mr = m;
      mr.horizon = window;
      const auto rec = simulate_bbm_embedded(mr, RngStream(m.seed, r), window, opts);
      const auto tr = project_bbb(rec);
      std::vector<EventReport> reps;
      if (e.times.empty()) {
        reps = find_regenerations(tr, rec, e.L).reports;
      } else {
        for (double t : e.times) reps.push_back(detect_events(tr, rec, t));
      }
      return reps;
    });
    for (std::size_t r = 0; r < results.size(); ++r)
      for (const auto& rep : results[r]) {
        if (rep.a && rep.b && rep.a->holds() && rep.b->holds()) ++regenerations;
        emit(r, rep);
      }
  }
  write_file(dir / "events.jsonl", lines.str());
  out << examined << " instant(s) examined, " << regenerations << " with A and B\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Barycentric Brownian bees: simulation and verification", "bbb"};
  app.require_subcommand(1);

  Common common;
  ManifestFlags mf;

  auto* sim = app.add_subcommand("simulate", "Simulate trajectories and export CSV/JSONL");
  add_manifest_flags(sim, mf);
  add_common(sim, common);
  std::string format = "csv";
  bool lineage = false;
  sim->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  sim->add_flag("--lineage", lineage, "Also export the embedded BBM lineage per replica");

  auto* dif = app.add_subcommand("diffusivity", "Estimate sigma^2, drift and isotropy of the barycenter");
  add_manifest_flags(dif, mf);
  add_common(dif, common);

  auto* ext = app.add_subcommand("extent-tails", "Extent hitting times and tail fit");
  add_manifest_flags(ext, mf);
  add_common(ext, common);
  double L = 1.0;
  bool from_zero = false;
  ext->add_option("--L", L, "Extent level")->capture_default_str();
  ext->add_flag("--from-zero", from_zero, "Allow hitting at time 0");

  auto* col = app.add_subcommand("collapse", "Collapse a weighted configuration");
  add_common(col, common);
  std::string config_path;
  bool global = false;
  col->add_option("--config", config_path, "JSON {positions, weights}")->required();
  col->add_flag("--global", global, "Also require a positive unambiguity margin");

  auto* una = app.add_subcommand("unambiguity", "Unambiguity margins for a batch of configurations");
  add_common(una, common);
  std::string configs_path;
  std::size_t uN = 0, ud = 1, ucount = 0;
  std::uint64_t useed = 0;
  double uscale = 1.0;
  una->add_option("--configs", configs_path, "JSON list of configurations");
  una->add_option("--N", uN, "Random configs: particles");
  una->add_option("--d", ud, "Random configs: dimension");
  una->add_option("--count", ucount, "Random configs: how many");
  una->add_option("--seed", useed, "Random configs: seed");
  una->add_option("--scale", uscale, "Random configs: coordinates uniform in [-scale, scale]");

  auto* mino = app.add_subcommand("minorization", "Monte Carlo minorization check");
  add_manifest_flags(mino, mf);
  add_common(mino, common);
  double mL = 1.0, mt = 1.5;
  std::string boxes_path;
  mino->add_option("--L", mL, "Extent bound")->capture_default_str();
  mino->add_option("--t", mt, "Time in [1, 2]")->capture_default_str();
  mino->add_option("--boxes", boxes_path, "JSON list of {lower, upper}");

  auto* mea = app.add_subcommand("measure", "Empirical measure of the recentered configuration");
  add_manifest_flags(mea, mf);
  add_common(mea, common);
  double lo = -3.0, hi = 3.0;
  std::size_t bins = 30;
  mea->add_option("--lo", lo, "Histogram lower bound")->capture_default_str();
  mea->add_option("--hi", hi, "Histogram upper bound")->capture_default_str();
  mea->add_option("--bins", bins, "Bins per dimension")->capture_default_str();

  auto* evt = app.add_subcommand("events", "Detect regeneration events");
  add_manifest_flags(evt, mf);
  add_common(evt, common);
  EventsOptions eo;
  evt->add_option("--trajectory", eo.trajectory, "Trajectory CSV to analyse instead of simulating");
  evt->add_option("--events-file", eo.events_file, "Events CSV matching --trajectory");
  evt->add_option("--lineage", eo.lineage_dir, "Lineage directory matching --trajectory");
  evt->add_option("--t", eo.times, "Window starts to test (default: extent stopping times)");
  evt->add_option("--L", eo.L, "Extent level for stopping times")->capture_default_str();
  evt->add_option("--window", eo.window, "Lineage window (default: horizon)");
  evt->add_option("--retain", eo.retain, "Track exited lines this long");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(mf, common, format, lineage, out, err);
    if (*dif) return cmd_diffusivity(mf, common, out, err);
    if (*ext) return cmd_extent_tails(mf, common, L, from_zero, out, err);
    if (*col) return cmd_collapse(config_path, global, common, out);
    if (*una) return cmd_unambiguity(configs_path, uN, ud, ucount, useed, uscale, common, out);
    if (*mino) return cmd_minorization(mf, common, mL, mt, boxes_path, out, err);
    if (*mea) return cmd_measure(mf, common, lo, hi, bins, out, err);
    if (*evt) return cmd_events(mf, common, eo, out, err);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bbb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bbb::cli
