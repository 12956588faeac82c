#pragma once

// Artifact formats.
//
// Every file starts with a preamble line
//   # bbb manifest_hash=<16 hex> seed=<uint64> manifest=<compact JSON>
// followed by the header row. CSV uses ',' and '\n'; doubles are written in
// shortest round-trip form. Particle indices and BBB slots are 1-based in all
// files; BBM node ids are 0-based identifiers.
//
// Trajectory CSV:  replica,time,particle_index,coord_0..coord_{d-1}
// Events CSV:      replica,time,parent,killed        (killed empty while growing)
// Trajectory JSONL: {"replica","time","on_grid","positions":[[...],...]}
// Lineage directory:
//   nodes.jsonl  first line {"type":"meta",window,dim,grid}, then
//                {"type":"node",id,parent,birth,death,children}
//   paths.csv    node_id,time,coord_0..
//   index.csv    time,slot,node_id
//   events.csv   replica,time,parent,killed

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbb/engine.hpp"
#include "bbb/lineage.hpp"
#include "bbb/manifest.hpp"

namespace bbb {

std::string format_double(double v);

std::string artifact_preamble(const RunManifest& m);

struct Preamble {
  std::string manifest_hash;
  std::uint64_t seed = 0;
  std::optional<RunManifest> manifest;
};
/// Parses a preamble line; nullopt if the line is not one.
std::optional<Preamble> parse_preamble(std::string_view line);

/// Replica r of `replicas` is written with replica id r. The preamble uses
/// the first trajectory's manifest.
void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& replicas);
void write_trajectory_jsonl(std::ostream& os, const std::vector<Trajectory>& replicas);
void write_events_csv(std::ostream& os, const std::vector<Trajectory>& replicas);

/// Rebuilds trajectories from a trajectory CSV and, optionally, its events
/// CSV. Instants that coincide with a recorded event time are marked off-grid.
/// Without a manifest in the preamble, N is the largest population seen and
/// the horizon is the last time. Throws DomainError on malformed input.
std::vector<Trajectory> read_trajectories(std::istream& trajectory_csv, std::istream* events_csv = nullptr);

void write_lineage(const std::filesystem::path& dir, const LineageRecord& rec);
LineageRecord read_lineage(const std::filesystem::path& dir);

}  // namespace bbb
