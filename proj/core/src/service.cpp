#include "dmriqc/service.hpp"

#include "dmriqc/error.hpp"
#include "dmriqc/io.hpp"
#include "dmriqc/render.hpp"

#include <algorithm>

namespace dmriqc {

namespace fs = std::filesystem;
using nlohmann::json;

auto system_clock_now() -> Timestamp {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

auto make_item_id(std::string_view scan, std::string_view node, const std::optional<std::string> &unit) -> std::string {
  std::string id = std::string(scan) + "~" + std::string(node);
  if (unit) id += "~" + *unit;
  return id;
}

auto parse_item_id(std::string_view id) -> std::optional<ItemRef> {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto t = id.find('~', start);
    parts.emplace_back(id.substr(start, t == std::string_view::npos ? std::string_view::npos : t - start));
    if (t == std::string_view::npos) break;
    start = t + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  for (const auto &p : parts) {
    if (!is_safe_identifier(p)) return std::nullopt;
  }
  ItemRef ref{parts[0], parts[1], std::nullopt};
  if (parts.size() == 3) ref.unit = parts[2];
  return ref;
}

auto queue_item_to_json(const QueueItem &item) -> json {
  json deps = json::object();
  for (const auto &[name, status] : item.dependency_statuses) {
    deps[name] = status ? json(std::string(to_string(*status))) : json(nullptr);
  }
  json diags = json::array();
  for (const auto &d : item.diagnostics) diags.push_back(diagnostic_to_json(d));
  json lease = nullptr;
  if (item.lease) lease = {{"rater", item.lease->rater_id}, {"expires", format_timestamp(item.lease->expiry)}};
  return {{"id", item.id},
          {"subject", item.entity.subject_id},
          {"session", item.entity.session_id},
          {"scan", item.entity.scan_id},
          {"node", item.node},
          {"unit", item.unit ? json(*item.unit) : json(nullptr)},
          {"criteria", item.criteria},
          {"assets", item.assets},
          {"diagnostics", diags},
          {"dependency_statuses", deps},
          {"lease", lease}};
}

auto parse_report_format(std::string_view text) -> std::optional<ReportFormat> {
  if (text == "records") return ReportFormat::Records;
  if (text == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

auto render_report(const DatasetManifest &manifest, std::span<const QcVerdict> ledger, ReportFormat format)
    -> std::string {
  const auto entities = manifest.entities();
  const auto report = aggregate(manifest.graph, ledger, entities);
  return format == ReportFormat::Csv ? report_to_csv(report) : report_to_records(report);
}

namespace {

auto error_response(int status, std::string_view code, const std::string &message) -> ApiResponse {
  ApiResponse r;
  r.status = status;
  r.body = json{{"error", std::string(code)}, {"message", message}}.dump() + "\n";
  return r;
}

auto status_for(ErrorCode code) -> int {
  switch (code) {
  case ErrorCode::UnknownNode:
  case ErrorCode::UnknownUnit: return 404;
  case ErrorCode::SchemaViolation:
  case ErrorCode::InvalidArgument: return 422;
  default: return 500;
  }
}

auto json_response(int status, const json &doc) -> ApiResponse {
  ApiResponse r;
  r.status = status;
  r.body = doc.dump() + "\n";
  return r;
}

} // namespace

QcApi::QcApi(DatasetManifest manifest, fs::path ledger, ServiceOptions options, Clock clock)
    : manifest_(std::move(manifest)), ledger_(std::move(ledger)), options_(std::move(options)),
      clock_(std::move(clock)) {
  if (options_.lease_duration <= std::chrono::milliseconds::zero()) {
    throw Error(ErrorCode::InvalidArgument, "lease duration must be positive");
  }
  std::vector<const ScanRecord *> scans;
  for (const auto &s : manifest_.scans) scans.push_back(&s);
  std::sort(scans.begin(), scans.end(),
            [](const ScanRecord *a, const ScanRecord *b) { return a->entity.scan_id < b->entity.scan_id; });
  for (const auto &node : manifest_.graph.nodes()) {
    for (const auto *s : scans) {
      if (node.per_unit()) {
        for (const auto &u : node.units) items_.push_back({s->entity.scan_id, node.name, u});
      } else {
        items_.push_back({s->entity.scan_id, node.name, std::nullopt});
      }
    }
  }
}

auto QcApi::all_items() const -> std::vector<ItemRef> { return items_; }

auto QcApi::authorized(std::optional<std::string_view> authorization) const -> bool {
  if (!options_.token) return true;
  if (!authorization) return false;
  return *authorization == "Bearer " + *options_.token;
}

auto QcApi::build_item(const ItemRef &ref, const VerdictMap &latest) const -> QueueItem {
  const auto *scan = manifest_.find_scan(ref.scan);
  const auto &node = manifest_.graph.at(ref.node);
  QueueItem item;
  item.id = make_item_id(ref.scan, ref.node, ref.unit);
  item.entity = scan->entity;
  item.node = ref.node;
  item.unit = ref.unit;
  item.criteria = node.criteria;
  for (const auto &panel : node.panels) {
    std::string asset;
    if (panel == "bundle" && node.per_unit()) {
      if (!ref.unit) continue;
      asset = panel_asset_name(panel, *ref.unit);
    } else {
      asset = panel_asset_name(panel);
    }
    if (fs::is_regular_file(panel_path(manifest_.output_dir, ref.scan, ref.node, asset))) item.assets.push_back(asset);
  }
  try {
    if (auto d = load_node_diagnostics(qc_bundle_path(manifest_.output_dir, ref.scan, ref.node))) {
      item.diagnostics = d->results;
      if (ref.unit) {
        if (auto u = d->units.find(*ref.unit); u != d->units.end()) {
          item.diagnostics.insert(item.diagnostics.end(), u->second.begin(), u->second.end());
        }
      }
    }
  } catch (const Error &) {
    // Advisory only: an unreadable bundle shows no diagnostics.
  }
  for (const auto &anc : manifest_.graph.ancestors_ordered(ref.node)) {
    item.dependency_statuses[anc] = node_rollup(manifest_.graph, latest, scan->entity, anc);
  }
  return item;
}

auto QcApi::next_item(const std::string &rater) -> std::optional<QueueItem> {
  const auto ledger = load_ledger(ledger_);
  const auto latest = latest_verdicts(ledger.verdicts);
  const auto now = clock_();
  std::lock_guard lock(lease_mutex_);
  for (const auto &ref : items_) {
    const auto *scan = manifest_.find_scan(ref.scan);
    if (latest.contains(VerdictKey{scan->entity, ref.node, ref.unit})) continue;
    const auto id = make_item_id(ref.scan, ref.node, ref.unit);
    auto it = leases_.find(id);
    // A rater asking again gets back the item they already hold.
    if (it != leases_.end() && it->second.expiry > now && it->second.rater_id != rater) continue;
    Lease lease{rater, now + options_.lease_duration};
    leases_[id] = lease;
    auto item = build_item(ref, latest);
    item.lease = lease;
    return item;
  }
  return std::nullopt;
}

auto QcApi::submit_verdict(std::string_view item_id, std::string_view body) -> ApiResponse {
  const auto ref = parse_item_id(item_id);
  if (!ref) return error_response(404, "UnknownItem", "no item '" + std::string(item_id) + "'");
  const auto *scan = manifest_.find_scan(ref->scan);
  if (!scan || !manifest_.graph.contains(ref->node)) {
    return error_response(404, "UnknownItem", "no item '" + std::string(item_id) + "'");
  }
  const auto &node = manifest_.graph.at(ref->node);
  if (ref->unit && !node.per_unit()) {
    return error_response(409, "GranularityMismatch", "node '" + node.name + "' is rated once per scan");
  }
  if (ref->unit && !node.has_unit(*ref->unit)) {
    return error_response(404, "UnknownItem", "node '" + node.name + "' has no unit '" + *ref->unit + "'");
  }
  if (!ref->unit && node.per_unit()) {
    return error_response(409, "GranularityMismatch", "node '" + node.name + "' is rated per unit");
  }

  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error &e) {
    return error_response(422, "SchemaViolation", e.what());
  }
  if (!doc.is_object()) return error_response(422, "SchemaViolation", "verdict must be an object");

  auto mismatch = [&](const char *field, const std::string &expected) {
    auto it = doc.find(field);
    return it != doc.end() && !it->is_null() && (!it->is_string() || it->get<std::string>() != expected);
  };
  if (mismatch("subject", scan->entity.subject_id) || mismatch("session", scan->entity.session_id) ||
      mismatch("scan", scan->entity.scan_id) || mismatch("node", node.name)) {
    return error_response(409, "ItemMismatch", "verdict body names a different item than " + std::string(item_id));
  }
  if (auto u = doc.find("unit"); u != doc.end() && !u->is_null()) {
    if (!node.per_unit()) {
      return error_response(409, "GranularityMismatch", "node '" + node.name + "' takes no unit");
    }
    if (!u->is_string() || u->get<std::string>() != *ref->unit) {
      return error_response(409, "GranularityMismatch", "verdict unit differs from item unit");
    }
  }

  QcVerdict v;
  try {
    json filled = doc;
    filled["subject"] = scan->entity.subject_id;
    filled["session"] = scan->entity.session_id;
    filled["scan"] = scan->entity.scan_id;
    filled["node"] = node.name;
    filled["unit"] = ref->unit ? json(*ref->unit) : json(nullptr);
    if (!filled.contains("timestamp") || filled["timestamp"].is_null()) filled["timestamp"] = format_timestamp(clock_());
    if (!filled.contains("checklist")) filled["checklist"] = json::object();
    v = verdict_from_json(filled);
  } catch (const Error &e) {
    return error_response(422, to_string(e.code()), e.detail());
  }
  if (!is_safe_identifier(v.verdict_uid)) {
    return error_response(422, "SchemaViolation", "verdict_uid must match [A-Za-z0-9_.-]+");
  }
  if (v.rater_id.empty()) return error_response(422, "SchemaViolation", "rater must be non-empty");
  for (const auto &[criterion, answer] : v.checklist) {
    if (std::find(node.criteria.begin(), node.criteria.end(), criterion) == node.criteria.end()) {
      return error_response(422, "SchemaViolation", "unknown criterion '" + criterion + "' for node '" + node.name + "'");
    }
  }

  std::lock_guard lock(write_mutex_);
  const auto ledger = load_ledger(ledger_);
  for (const auto &existing : ledger.verdicts) {
    if (existing.verdict_uid != v.verdict_uid) continue;
    if (key_of(existing) == key_of(v)) return json_response(200, verdict_to_json(existing));
    return error_response(409, "DuplicateVerdictUid", "verdict_uid '" + v.verdict_uid + "' belongs to another item");
  }
  append_verdict(ledger_, v);
  {
    std::lock_guard lease_lock(lease_mutex_);
    leases_.erase(make_item_id(ref->scan, ref->node, ref->unit));
  }
  return json_response(201, verdict_to_json(v));
}

auto QcApi::asset(std::string_view item_id, std::string_view name) -> ApiResponse {
  const auto ref = parse_item_id(item_id);
  if (!ref || !manifest_.find_scan(ref->scan) || !manifest_.graph.contains(ref->node) || !is_safe_identifier(name)) {
    return error_response(404, "NotFound", "no asset '" + std::string(name) + "' for '" + std::string(item_id) + "'");
  }
  const auto path = panel_path(manifest_.output_dir, ref->scan, ref->node, name);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    return error_response(404, "NotFound", "no asset '" + std::string(name) + "' for '" + std::string(item_id) + "'");
  }
  ApiResponse r;
  r.content_type = "image/png";
  const auto bytes = read_file_bytes(path);
  r.body.assign(bytes.begin(), bytes.end());
  r.headers["Cache-Control"] = "public, max-age=31536000, immutable";
  return r;
}

auto QcApi::report(ReportFormat format) -> ApiResponse {
  const auto ledger = load_ledger(ledger_);
  ApiResponse r;
  r.content_type = format == ReportFormat::Csv ? "text/csv" : "application/json";
  r.body = render_report(manifest_, ledger.verdicts, format);
  return r;
}

auto QcApi::graph() -> ApiResponse { return json_response(200, graph_to_json(manifest_.graph)); }

auto QcApi::handle(std::string_view method, std::string_view path, const std::map<std::string, std::string> &query,
                   std::string_view body, std::optional<std::string_view> authorization) -> ApiResponse {
  if (!path.starts_with("/api/")) return error_response(404, "NotFound", "no route " + std::string(path));
  if (!authorized(authorization)) {
    auto r = error_response(401, "Unauthorized", "missing or invalid bearer token");
    r.headers["WWW-Authenticate"] = "Bearer";
    return r;
  }
  auto method_is = [&](std::string_view m) { return method == m; };
  try {
    if (path == "/api/queue/next") {
      if (!method_is("GET")) return error_response(405, "MethodNotAllowed", "use GET");
      auto rater = query.find("rater");
      if (rater == query.end() || rater->second.empty()) {
        return error_response(400, "BadRequest", "query parameter 'rater' is required");
      }
      auto item = next_item(rater->second);
      if (!item) {
        ApiResponse r;
        r.status = 204;
        r.content_type.clear();
        return r;
      }
      return json_response(200, queue_item_to_json(*item));
    }
    if (path == "/api/report") {
      if (!method_is("GET")) return error_response(405, "MethodNotAllowed", "use GET");
      auto fmt = ReportFormat::Records;
      if (auto f = query.find("format"); f != query.end()) {
        auto parsed = parse_report_format(f->second);
        if (!parsed) return error_response(400, "BadRequest", "format must be 'records' or 'csv'");
        fmt = *parsed;
      }
      return report(fmt);
    }
    if (path == "/api/graph") {
      if (!method_is("GET")) return error_response(405, "MethodNotAllowed", "use GET");
      return graph();
    }
    constexpr std::string_view kItems = "/api/items/";
    if (path.starts_with(kItems)) {
      auto rest = path.substr(kItems.size());
      const auto slash = rest.find('/');
      const auto id = rest.substr(0, slash);
      const auto tail = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
      if (tail == "/verdict") {
        if (!method_is("POST")) return error_response(405, "MethodNotAllowed", "use POST");
        return submit_verdict(id, body);
      }
      constexpr std::string_view kAssets = "/assets/";
      if (tail.starts_with(kAssets)) {
        if (!method_is("GET")) return error_response(405, "MethodNotAllowed", "use GET");
        return asset(id, tail.substr(kAssets.size()));
      }
    }
    return error_response(404, "NotFound", "no route " + std::string(path));
  } catch (const Error &e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.detail());
  }
}

} // namespace dmriqc
