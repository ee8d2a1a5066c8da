#pragma once

#include "dmriqc/diagnostics.hpp"
#include "dmriqc/store.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc {

/// Advisory results for one (scan, node), as stored in the QC bundle file.
struct NodeDiagnostics {
  std::string scan;
  std::string node;
  std::vector<DiagnosticResult> results;
  /// Per-unit results for per-unit checks, keyed by unit.
  std::map<std::string, std::vector<DiagnosticResult>> units;
  /// Content digest per input artifact ("kind" or "kind/unit").
  std::map<std::string, std::string> inputs;
  nlohmann::json thresholds;
  std::vector<std::string> assets;

  auto operator==(const NodeDiagnostics &) const -> bool = default;
};

auto node_diagnostics_to_json(const NodeDiagnostics &d) -> nlohmann::json;
/// Throws SchemaViolation.
auto node_diagnostics_from_json(const nlohmann::json &doc) -> NodeDiagnostics;

/// {output_dir}/{scan}/{scan}_{node}.qc.json
auto qc_bundle_path(const std::filesystem::path &output_dir, std::string_view scan,
                    std::string_view node) -> std::filesystem::path;
/// {output_dir}/{scan}/{scan}_{node}.render.json, recording what the panels
/// were rendered from.
auto render_stamp_path(const std::filesystem::path &output_dir, std::string_view scan,
                       std::string_view node) -> std::filesystem::path;
/// {output_dir}/{scan}/{scan}_{node}_{asset}.png
auto panel_path(const std::filesystem::path &output_dir, std::string_view scan,
                std::string_view node, std::string_view asset) -> std::filesystem::path;

/// Asset names the render step produces for `node`, in panel order; per-unit
/// panels expand to one asset per unit.
auto node_assets(const PipelineNode &node) -> std::vector<std::string>;

/// 64-bit FNV-1a of the file contents as 16 hex digits.
auto file_digest(const std::filesystem::path &path) -> std::string;
auto input_digests(const ScanRecord &scan, const PipelineNode &node)
    -> std::map<std::string, std::string>;

/// Runs every check of `node` on the scan's artifacts. A check that cannot run
/// on its inputs yields a Fail result explaining why instead of aborting.
auto run_node_diagnostics(const ScanRecord &scan, const PipelineNode &node,
                          const Thresholds &thresholds = {}) -> NodeDiagnostics;

struct StepOutcome {
  std::size_t written = 0;
  std::size_t skipped = 0;
};

/// Writes the QC bundle unless one exists for the same inputs and thresholds.
auto diagnose_node(const DatasetManifest &manifest, const ScanRecord &scan,
                   const PipelineNode &node, const Thresholds &thresholds, bool force)
    -> StepOutcome;
/// Writes the node's panels unless the render stamp matches the inputs.
auto render_node(const DatasetManifest &manifest, const ScanRecord &scan,
                 const PipelineNode &node, bool force) -> StepOutcome;

/// Loads a bundle file if present. Throws SchemaViolation when unreadable.
auto load_node_diagnostics(const std::filesystem::path &path) -> std::optional<NodeDiagnostics>;

} // namespace dmriqc
