#pragma once

#include "dmriqc/pipeline.hpp"
#include "dmriqc/propagation.hpp"
#include "dmriqc/store.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc {

struct Lease {
  std::string rater_id;
  Timestamp expiry{};
};

struct QueueItem {
  std::string id;
  EntityRef entity;
  std::string node;
  std::optional<std::string> unit;
  std::vector<std::string> criteria;
  std::vector<std::string> assets;
  std::vector<DiagnosticResult> diagnostics;
  /// Every ancestor of `node`; nullopt when not yet rated.
  std::map<std::string, std::optional<VerdictStatus>> dependency_statuses;
  std::optional<Lease> lease;
};

auto queue_item_to_json(const QueueItem &item) -> nlohmann::json;

/// "{scan}~{node}" or "{scan}~{node}~{unit}".
auto make_item_id(std::string_view scan, std::string_view node,
                  const std::optional<std::string> &unit = std::nullopt) -> std::string;

struct ItemRef {
  std::string scan;
  std::string node;
  std::optional<std::string> unit;
};

auto parse_item_id(std::string_view id) -> std::optional<ItemRef>;

struct ServiceOptions {
  std::chrono::milliseconds lease_duration = std::chrono::minutes(15);
  /// Required as "Authorization: Bearer <token>" when set.
  std::optional<std::string> token;
};

using Clock = std::function<Timestamp()>;

auto system_clock_now() -> Timestamp;

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

enum class ReportFormat { Records, Csv };

auto parse_report_format(std::string_view text) -> std::optional<ReportFormat>;

/// The exact bytes served by GET /api/report and printed by `report`.
auto render_report(const DatasetManifest &manifest, std::span<const QcVerdict> ledger,
                   ReportFormat format) -> std::string;

/// Transport-independent implementation of the review API. Every request
/// reads a fresh ledger snapshot; appends go through one mutex.
class QcApi {
public:
  QcApi(DatasetManifest manifest, std::filesystem::path ledger, ServiceOptions options = {},
        Clock clock = system_clock_now);

  /// Route one request. `path` excludes the query string.
  auto handle(std::string_view method, std::string_view path,
              const std::map<std::string, std::string> &query, std::string_view body,
              std::optional<std::string_view> authorization) -> ApiResponse;

  auto next_item(const std::string &rater) -> std::optional<QueueItem>;
  auto submit_verdict(std::string_view item_id, std::string_view body) -> ApiResponse;
  auto asset(std::string_view item_id, std::string_view name) -> ApiResponse;
  auto report(ReportFormat format) -> ApiResponse;
  auto graph() -> ApiResponse;

  /// Every reviewable item in queue order.
  [[nodiscard]] auto all_items() const -> std::vector<ItemRef>;
  [[nodiscard]] auto manifest() const -> const DatasetManifest & { return manifest_; }

private:
  auto build_item(const ItemRef &ref, const VerdictMap &latest) const -> QueueItem;
  auto authorized(std::optional<std::string_view> authorization) const -> bool;

  DatasetManifest manifest_;
  std::filesystem::path ledger_;
  ServiceOptions options_;
  Clock clock_;
  std::vector<ItemRef> items_;
  std::mutex lease_mutex_;
  std::map<std::string, Lease> leases_;
  std::mutex write_mutex_;
};

} // namespace dmriqc
