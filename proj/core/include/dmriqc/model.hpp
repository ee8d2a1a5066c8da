#pragma once

#include "dmriqc/error.hpp"

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc {

struct EntityRef {
  std::string subject_id;
  std::string session_id;
  std::string scan_id;

  auto operator<=>(const EntityRef &) const = default;
};

/// One processing stage. An empty `units` list means the node is rated once
/// per scan; otherwise every unit (e.g. a white matter bundle) gets its own
/// verdict.
struct PipelineNode {
  std::string name;
  std::vector<std::string> deps;
  std::vector<std::string> units;
  std::vector<std::string> criteria;
  /// Advisory checks run by `diagnose` for this node.
  std::vector<std::string> checks;
  /// Review panels produced by `render` for this node.
  std::vector<std::string> panels;
  /// Artifact kinds required beyond what the checks and panels imply.
  std::vector<std::string> artifacts;

  [[nodiscard]] auto per_unit() const noexcept -> bool { return !units.empty(); }
  [[nodiscard]] auto has_unit(std::string_view unit) const -> bool;
};

/// Validated, acyclic pipeline hierarchy. Nodes are stored in topological
/// order with ties broken lexicographically.
class DependencyGraph {
public:
  [[nodiscard]] auto nodes() const noexcept -> std::span<const PipelineNode> {
    return nodes_;
  }
  [[nodiscard]] auto size() const noexcept -> std::size_t { return nodes_.size(); }
  [[nodiscard]] auto contains(std::string_view name) const -> bool;
  /// Throws UnknownNode.
  [[nodiscard]] auto at(std::string_view name) const -> const PipelineNode &;
  [[nodiscard]] auto index_of(std::string_view name) const -> std::size_t;
  /// Ancestors of `name` in topological order, excluding `name`.
  [[nodiscard]] auto ancestors_ordered(std::string_view name) const
      -> const std::vector<std::string> &;
  [[nodiscard]] auto roots() const -> std::vector<std::string>;

private:
  friend auto build_graph(std::vector<PipelineNode> defs) -> DependencyGraph;

  std::vector<PipelineNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> ancestors_;
};

/// Errors: CycleDetected, UnknownDependency, DuplicateNode, InvalidGraph.
auto build_graph(std::vector<PipelineNode> defs) -> DependencyGraph;

/// Transitive closure of deps, excluding the node itself. Throws UnknownNode.
auto ancestors(const DependencyGraph &graph, std::string_view node)
    -> std::set<std::string>;

enum class VerdictStatus { Pass, Fail, NotRun };

auto to_string(VerdictStatus status) -> std::string_view;
auto parse_verdict_status(std::string_view text) -> std::optional<VerdictStatus>;
/// NotRun counts as a failure for classification.
constexpr auto passed(VerdictStatus status) noexcept -> bool {
  return status == VerdictStatus::Pass;
}

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// ISO-8601 UTC with millisecond precision, e.g. 2024-05-01T12:00:00.000Z.
auto format_timestamp(Timestamp ts) -> std::string;
/// Accepts `YYYY-MM-DDTHH:MM:SS[.f]Z` with 1-9 fraction digits; digits past
/// the millisecond are dropped. Throws InvalidArgument.
auto parse_timestamp(std::string_view text) -> Timestamp;

struct QcVerdict {
  EntityRef entity;
  std::string node;
  std::optional<std::string> unit;
  VerdictStatus status = VerdictStatus::NotRun;
  std::string rater_id;
  Timestamp timestamp{};
  std::map<std::string, bool> checklist;
  std::optional<std::string> comment;
  std::string verdict_uid;

  auto operator==(const QcVerdict &) const -> bool = default;
};

struct VerdictKey {
  EntityRef entity;
  std::string node;
  std::optional<std::string> unit;

  auto operator<=>(const VerdictKey &) const = default;
};

auto key_of(const QcVerdict &verdict) -> VerdictKey;

using VerdictMap = std::map<VerdictKey, QcVerdict>;

/// Last write wins by timestamp; equal timestamps resolve to the greatest
/// verdict_uid.
auto latest_verdicts(std::span<const QcVerdict> ledger) -> VerdictMap;

enum class OutcomeCategory {
  BothPassed,
  DepPassedOutcomeFailed,
  DepFailedOutcomePassed,
  BothFailed,
  Pending,
};

inline constexpr OutcomeCategory kAllCategories[] = {
    OutcomeCategory::BothPassed, OutcomeCategory::DepPassedOutcomeFailed,
    OutcomeCategory::DepFailedOutcomePassed, OutcomeCategory::BothFailed,
    OutcomeCategory::Pending};

auto to_string(OutcomeCategory category) -> std::string_view;

// Serialization. All JSON produced here is compact with sorted keys, so equal
// values always give equal bytes.

auto verdict_to_json(const QcVerdict &verdict) -> nlohmann::json;
/// Throws SchemaViolation naming the offending field.
auto verdict_from_json(const nlohmann::json &doc) -> QcVerdict;

/// Graph definition document:
///   {"version": 1, "nodes": [{"name", "deps", "units", "criteria",
///                             "checks", "panels", "artifacts"}, ...]}
/// Only "name" is required per node. Throws InvalidGraph on schema errors.
auto parse_graph_definition(const nlohmann::json &doc) -> std::vector<PipelineNode>;
auto graph_to_json(const DependencyGraph &graph) -> nlohmann::json;
auto load_graph_file(const std::filesystem::path &path) -> DependencyGraph;

/// The seven deployed pipelines with their rating criteria.
auto default_pipeline_nodes() -> std::vector<PipelineNode>;
/// The 72 Tractseg bundle names.
auto tractseg_bundles() -> std::vector<std::string>;

/// Identifiers used in file names and item ids: [A-Za-z0-9_.-]+.
auto is_safe_identifier(std::string_view id) noexcept -> bool;

} // namespace dmriqc
