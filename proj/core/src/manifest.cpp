#include "bbb/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bbb {
namespace {

using nlohmann::json;

json point_to_json(const Point& p) { return json(std::vector<double>(p.coords().begin(), p.coords().end())); }

Point point_from_json(const json& j) { return Point(j.get<std::vector<double>>()); }

json initial_to_json(const InitialCondition& ic) {
  json j;
  switch (ic.kind) {
    case InitialCondition::Kind::PointMass:
      j["kind"] = "point";
      j["center"] = point_to_json(ic.center);
      if (ic.count != 0) j["count"] = ic.count;
      break;
    case InitialCondition::Kind::Explicit: {
      j["kind"] = "explicit";
      json pts = json::array();
      for (const auto& p : ic.points) pts.push_back(point_to_json(p));
      j["points"] = std::move(pts);
      break;
    }
    case InitialCondition::Kind::GaussianCloud:
      j["kind"] = "gaussian";
      j["scale"] = ic.scale;
      if (ic.count != 0) j["count"] = ic.count;
      break;
  }
  return j;
}

InitialCondition initial_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  InitialCondition ic;
  if (kind == "point") {
    ic.kind = InitialCondition::Kind::PointMass;
    if (j.contains("center")) ic.center = point_from_json(j.at("center"));
    ic.count = j.value("count", std::size_t{0});
  } else if (kind == "explicit") {
    ic.kind = InitialCondition::Kind::Explicit;
    for (const auto& p : j.at("points")) ic.points.push_back(point_from_json(p));
  } else if (kind == "gaussian") {
    ic.kind = InitialCondition::Kind::GaussianCloud;
    ic.scale = j.at("scale").get<double>();
    ic.count = j.value("count", std::size_t{0});
  } else {
    throw DomainError("unknown initial condition kind '" + kind + "'");
  }
  return ic;
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["N"] = m.N;
  j["d"] = m.d;
  j["horizon"] = m.horizon;
  j["dt_obs"] = m.dt_obs;
  j["seed"] = m.seed;
  j["replicas"] = m.replicas;
  j["initial"] = initial_to_json(m.initial);
  return j;
}

}  // namespace

InitialCondition InitialCondition::point_mass(Point center, std::size_t count) {
  InitialCondition ic;
  ic.kind = Kind::PointMass;
  ic.center = std::move(center);
  ic.count = count;
  return ic;
}

InitialCondition InitialCondition::explicit_points(std::vector<Point> points) {
  InitialCondition ic;
  ic.kind = Kind::Explicit;
  ic.points = std::move(points);
  return ic;
}

InitialCondition InitialCondition::gaussian(double scale, std::size_t count) {
  InitialCondition ic;
  ic.kind = Kind::GaussianCloud;
  ic.scale = scale;
  ic.count = count;
  return ic;
}

void RunManifest::validate() const {
  if (N < 1) throw DomainError("manifest: N must be >= 1");
  if (d < 1) throw DomainError("manifest: d must be >= 1");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("manifest: horizon must be >= 0");
  if (!(dt_obs > 0.0) || !std::isfinite(dt_obs)) throw DomainError("manifest: dt_obs must be > 0");
  if (replicas < 1) throw DomainError("manifest: replicas must be >= 1");
  switch (initial.kind) {
    case InitialCondition::Kind::PointMass:
      if (initial.center.dim() != 0 && initial.center.dim() != d)
        throw DomainError("manifest: initial center has wrong dimension");
      if (initial.count > N) throw DomainError("manifest: initial count exceeds N");
      break;
    case InitialCondition::Kind::Explicit:
      if (initial.points.empty()) throw DomainError("manifest: explicit initial condition is empty");
      if (initial.points.size() > N) throw DomainError("manifest: more initial points than N");
      for (const auto& p : initial.points) {
        if (p.dim() != d) throw DomainError("manifest: initial point has wrong dimension");
      }
      break;
    case InitialCondition::Kind::GaussianCloud:
      if (!(initial.scale > 0.0) || !std::isfinite(initial.scale))
        throw DomainError("manifest: gaussian scale must be > 0");
      if (initial.count > N) throw DomainError("manifest: initial count exceeds N");
      break;
  }
}

std::string to_json(const RunManifest& m) { return manifest_to_json(m).dump(); }

RunManifest manifest_from_json(std::string_view text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.N = j.at("N").get<std::size_t>();
    m.d = j.at("d").get<std::size_t>();
    m.horizon = j.at("horizon").get<double>();
    m.dt_obs = j.at("dt_obs").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.replicas = j.at("replicas").get<std::size_t>();
    m.initial = initial_from_json(j.at("initial"));
  } catch (const json::exception& e) {
    throw DomainError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open manifest '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

std::uint64_t manifest_hash(const RunManifest& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(m)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string manifest_hash_hex(const RunManifest& m) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(manifest_hash(m)));
  return buf;
}

std::vector<double> observation_grid(double horizon, double dt_obs) {
  if (!(dt_obs > 0.0)) throw DomainError("observation grid: dt_obs must be > 0");
  if (!(horizon >= 0.0)) throw DomainError("observation grid: horizon must be >= 0");
  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::floor(horizon / dt_obs + 1e-9));
  grid.reserve(steps + 2);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt_obs;
    if (t > horizon) break;
    grid.push_back(t);
  }
  if (grid.back() < horizon) {
    if (horizon - grid.back() <= 1e-9 * std::max(1.0, horizon)) {
      grid.back() = horizon;
    } else {
      grid.push_back(horizon);
    }
  }
  return grid;
}

}  // namespace bbb
