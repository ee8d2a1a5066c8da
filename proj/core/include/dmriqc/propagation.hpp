#pragma once

#include "dmriqc/model.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmriqc {

struct OutcomeRecord {
  EntityRef entity;
  std::string node;
  std::optional<std::string> unit;
  OutcomeCategory category = OutcomeCategory::Pending;
  /// Ancestors whose roll-up failed, in topological order.
  std::vector<std::string> failing_ancestors;
};

/// Maps own and dependency statuses onto the four outcome classes. NotRun
/// counts as Fail; an empty dependency list counts as all-pass.
auto classify(VerdictStatus own, std::span<const VerdictStatus> deps) -> OutcomeCategory;

/// Node-level status for one scan. For per-unit nodes: Fail if any unit is
/// Fail, else NotRun if any unit is NotRun, else Pass when every unit is
/// rated Pass, else absent.
auto node_rollup(const DependencyGraph &graph, const VerdictMap &verdicts,
                 const EntityRef &entity, std::string_view node)
    -> std::optional<VerdictStatus>;

/// Classifies one (scan, node[, unit]). For a per-unit node, omitting the unit
/// classifies the node roll-up. Throws UnknownNode, UnknownUnit.
auto classify_scan(const DependencyGraph &graph, const VerdictMap &verdicts,
                   const EntityRef &entity, std::string_view node,
                   const std::optional<std::string> &unit = std::nullopt) -> OutcomeRecord;

/// Every (scan, node[, unit]) record in report order: topological node order,
/// then entity order; rows for a per-unit node list the roll-up first, then
/// each unit in configured order.
auto classify_all(const DependencyGraph &graph, const VerdictMap &verdicts,
                  std::span<const EntityRef> entities) -> std::vector<OutcomeRecord>;

struct CategoryCounts {
  std::array<std::size_t, 5> counts{};

  [[nodiscard]] auto operator[](OutcomeCategory c) const -> std::size_t {
    return counts[static_cast<std::size_t>(c)];
  }
  auto operator[](OutcomeCategory c) -> std::size_t & {
    return counts[static_cast<std::size_t>(c)];
  }
  [[nodiscard]] auto total() const -> std::size_t;
  /// Records excluding Pending.
  [[nodiscard]] auto rated() const -> std::size_t;
  /// Share of `c` among non-Pending records; 0 when nothing is rated.
  [[nodiscard]] auto proportion(OutcomeCategory c) const -> double;

  auto operator==(const CategoryCounts &) const -> bool = default;
};

struct ReportRow {
  std::string node;
  std::optional<std::string> unit;
  CategoryCounts counts;

  auto operator==(const ReportRow &) const -> bool = default;
};

struct DatasetTotals {
  std::size_t scans = 0;
  std::size_t sessions = 0;
  std::size_t subjects = 0;

  auto operator==(const DatasetTotals &) const -> bool = default;
};

struct Report {
  std::vector<ReportRow> rows;
  DatasetTotals totals;

  [[nodiscard]] auto find(std::string_view node,
                          const std::optional<std::string> &unit = std::nullopt) const
      -> const ReportRow *;
  auto operator==(const Report &) const -> bool = default;
};

auto count_entities(std::span<const EntityRef> entities) -> DatasetTotals;

auto aggregate(const DependencyGraph &graph, std::span<const QcVerdict> ledger,
               std::span<const EntityRef> entities) -> Report;

/// Machine-readable records export (compact JSON, newline-terminated).
auto report_to_records(const Report &report) -> std::string;
/// CSV with header `node,unit,category,count`; unit is empty for node rows.
/// Rows follow report order, categories in enum order.
auto report_to_csv(const Report &report) -> std::string;

auto outcome_records_to_csv(std::span<const OutcomeRecord> records) -> std::string;
auto outcome_records_to_json(std::span<const OutcomeRecord> records) -> std::string;

} // namespace dmriqc
