#pragma once

#include "dmriqc/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc {

/// Artifact kinds a node needs, derived from its checks, panels and explicit
/// artifact list. Per-unit kinds need one file per unit.
struct RequiredArtifacts {
  std::set<std::string> global;
  std::set<std::string> per_unit;
};

/// Artifact kinds that hold one file per unit of a per-unit node.
auto is_per_unit_kind(std::string_view kind) -> bool;
/// Throws InvalidArgument for an unknown check or panel name.
auto required_artifacts(const PipelineNode &node) -> RequiredArtifacts;

struct ScanRecord {
  EntityRef entity;
  /// node -> kind -> path, resolved against the manifest directory.
  std::map<std::string, std::map<std::string, std::filesystem::path>> artifacts;
  /// node -> kind -> unit -> path.
  std::map<std::string, std::map<std::string, std::map<std::string, std::filesystem::path>>>
      unit_artifacts;

  [[nodiscard]] auto artifact(const std::string &node, const std::string &kind) const
      -> std::optional<std::filesystem::path>;
  [[nodiscard]] auto unit_artifact(const std::string &node, const std::string &kind,
                                   const std::string &unit) const
      -> std::optional<std::filesystem::path>;
};

/// Manifest document:
///   {"version": 1, "graph": "graph.json" (optional, default pipelines),
///    "output_dir": "qc",
///    "subjects": [{"id", "sessions": [{"id", "scans": [{"id",
///        "artifacts": {"<node>": {"<kind>": "path" | {"<unit>": "path"}}}}]}]}]}
/// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::filesystem::path source;
  std::optional<std::filesystem::path> graph_path;
  DependencyGraph graph;
  std::filesystem::path output_dir;
  /// Authored order.
  std::vector<ScanRecord> scans;

  [[nodiscard]] auto find_scan(std::string_view scan_id) const -> const ScanRecord *;
  [[nodiscard]] auto entities() const -> std::vector<EntityRef>;
};

/// Errors: SchemaViolation, DuplicateScanId, UnknownNodeReference, plus graph
/// errors from the referenced definition.
auto parse_manifest(const nlohmann::json &doc, const std::filesystem::path &base_dir)
    -> DatasetManifest;
auto load_manifest(const std::filesystem::path &path) -> DatasetManifest;
auto manifest_to_json(const DatasetManifest &manifest) -> nlohmann::json;

/// Every required artifact is listed and exists on disk. Throws MissingArtifact
/// naming each scan/node/kind that is absent.
auto validate_manifest(const DatasetManifest &manifest) -> void;

struct LedgerLoad {
  std::vector<QcVerdict> verdicts;
  /// One entry per tolerated defect (torn final line).
  std::vector<std::string> warnings;
};

/// Appends one line under an exclusive file lock and syncs it to disk. A torn
/// last line left by a crashed writer is cut back before writing, so it never
/// merges with the new record. Errors: IoFailure, InvalidArgument (unsafe ids).
auto append_verdict(const std::filesystem::path &ledger, const QcVerdict &verdict) -> void;
/// A missing file is an empty ledger. A final line without its newline that
/// fails to parse is skipped with a warning; any other bad line throws
/// SchemaViolation with its line number.
auto load_ledger(const std::filesystem::path &ledger) -> LedgerLoad;
auto parse_ledger(std::string_view text) -> LedgerLoad;

} // namespace dmriqc
