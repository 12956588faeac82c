#pragma once

// RunManifest: the reproducibility unit of an experiment.
//
// JSON schema (all keys required unless noted):
//   {
//     "N": <int >= 1>,            particle capacity
//     "d": <int >= 1>,            spatial dimension
//     "horizon": <real >= 0>,
//     "dt_obs": <real > 0>,       observation grid step
//     "seed": <uint64>,
//     "replicas": <int >= 1>,
//     "initial": one of
//        {"kind": "point",    "center": [d reals], "count": <int, optional, default N>}
//        {"kind": "explicit", "points": [[d reals], ...]}
//        {"kind": "gaussian", "scale": <real > 0>, "count": <int, optional, default N>}
//   }
// Floating-point fields are written with shortest round-trip precision.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bbb/core.hpp"

namespace bbb {

struct InitialCondition {
  enum class Kind { PointMass, Explicit, GaussianCloud };

  Kind kind = Kind::PointMass;
  Point center;                ///< PointMass; empty means the origin
  std::vector<Point> points;   ///< Explicit
  double scale = 1.0;          ///< GaussianCloud: per-coordinate standard deviation
  std::size_t count = 0;       ///< PointMass / GaussianCloud; 0 means N

  static InitialCondition point_mass(Point center = {}, std::size_t count = 0);
  static InitialCondition explicit_points(std::vector<Point> points);
  static InitialCondition gaussian(double scale, std::size_t count = 0);
};

struct RunManifest {
  std::size_t N = 1;
  std::size_t d = 1;
  double horizon = 1.0;
  double dt_obs = 0.1;
  InitialCondition initial;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;

  /// Throws DomainError on any violated field constraint.
  void validate() const;
};

std::string to_json(const RunManifest& m);
/// Parses and validates; throws DomainError on malformed input.
RunManifest manifest_from_json(std::string_view json);
RunManifest load_manifest(const std::string& path);

/// FNV-1a 64 of the canonical JSON text.
std::uint64_t manifest_hash(const RunManifest& m);
std::string manifest_hash_hex(const RunManifest& m);

/// Observation instants 0, dt, 2 dt, ..., plus `horizon` itself when it is
/// not a grid multiple. Grid times are computed as k * dt_obs.
std::vector<double> observation_grid(double horizon, double dt_obs);
inline std::vector<double> observation_grid(const RunManifest& m) {
  return observation_grid(m.horizon, m.dt_obs);
}

}  // namespace bbb
