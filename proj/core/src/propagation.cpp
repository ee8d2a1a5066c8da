#include "dmriqc/propagation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dmriqc {

using nlohmann::json;

auto classify(VerdictStatus own, std::span<const VerdictStatus> deps) -> OutcomeCategory {
  const bool deps_pass = std::all_of(deps.begin(), deps.end(), passed);
  const bool own_pass = passed(own);
  if (deps_pass) {
    return own_pass ? OutcomeCategory::BothPassed : OutcomeCategory::DepPassedOutcomeFailed;
  }
  return own_pass ? OutcomeCategory::DepFailedOutcomePassed : OutcomeCategory::BothFailed;
}

namespace {

auto lookup(const VerdictMap &verdicts, const EntityRef &entity, std::string_view node,
            const std::optional<std::string> &unit) -> std::optional<VerdictStatus> {
  auto it = verdicts.find(VerdictKey{entity, std::string(node), unit});
  if (it == verdicts.end()) return std::nullopt;
  return it->second.status;
}

auto rollup(const PipelineNode &node, const VerdictMap &verdicts, const EntityRef &entity)
    -> std::optional<VerdictStatus> {
  if (!node.per_unit()) return lookup(verdicts, entity, node.name, std::nullopt);
  bool any_fail = false;
  bool any_not_run = false;
  bool any_absent = false;
  for (const auto &u : node.units) {
    auto s = lookup(verdicts, entity, node.name, u);
    if (!s) {
      any_absent = true;
    } else if (*s == VerdictStatus::Fail) {
      any_fail = true;
    } else if (*s == VerdictStatus::NotRun) {
      any_not_run = true;
    }
  }
  if (any_fail) return VerdictStatus::Fail;
  if (any_not_run) return VerdictStatus::NotRun;
  if (any_absent) return std::nullopt;
  return VerdictStatus::Pass;
}

} // namespace

auto node_rollup(const DependencyGraph &graph, const VerdictMap &verdicts,
                 const EntityRef &entity, std::string_view node)
    -> std::optional<VerdictStatus> {
  return rollup(graph.at(node), verdicts, entity);
}

auto classify_scan(const DependencyGraph &graph, const VerdictMap &verdicts,
                   const EntityRef &entity, std::string_view node,
                   const std::optional<std::string> &unit) -> OutcomeRecord {
  const auto &def = graph.at(node);
  if (unit) {
    if (!def.per_unit()) {
      throw Error(ErrorCode::UnknownUnit,
                  "node '" + def.name + "' is rated per scan, got unit '" + *unit + "'");
    }
    if (!def.has_unit(*unit)) {
      throw Error(ErrorCode::UnknownUnit, "node '" + def.name + "' has no unit '" + *unit + "'");
    }
  }

  OutcomeRecord rec{entity, def.name, unit, OutcomeCategory::Pending, {}};
  const auto own = unit ? lookup(verdicts, entity, def.name, unit) : rollup(def, verdicts, entity);

  std::vector<VerdictStatus> dep_statuses;
  std::vector<std::string> failing;
  bool missing = !own.has_value();
  for (const auto &anc : graph.ancestors_ordered(def.name)) {
    auto s = rollup(graph.at(anc), verdicts, entity);
    if (!s) {
      missing = true;
      continue;
    }
    dep_statuses.push_back(*s);
    if (!passed(*s)) failing.push_back(anc);
  }
  if (missing) return rec;
  rec.category = classify(*own, dep_statuses);
  rec.failing_ancestors = std::move(failing);
  return rec;
}

auto classify_all(const DependencyGraph &graph, const VerdictMap &verdicts,
                  std::span<const EntityRef> entities) -> std::vector<OutcomeRecord> {
  std::vector<OutcomeRecord> out;
  for (const auto &node : graph.nodes()) {
    for (const auto &e : entities) out.push_back(classify_scan(graph, verdicts, e, node.name));
    for (const auto &u : node.units) {
      for (const auto &e : entities) {
        out.push_back(classify_scan(graph, verdicts, e, node.name, u));
      }
    }
  }
  return out;
}

auto CategoryCounts::total() const -> std::size_t {
  std::size_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

auto CategoryCounts::rated() const -> std::size_t {
  return total() - (*this)[OutcomeCategory::Pending];
}

auto CategoryCounts::proportion(OutcomeCategory c) const -> double {
  if (c == OutcomeCategory::Pending) return 0.0;
  const auto n = rated();
  return n == 0 ? 0.0 : static_cast<double>((*this)[c]) / static_cast<double>(n);
}

auto Report::find(std::string_view node, const std::optional<std::string> &unit) const
    -> const ReportRow * {
  for (const auto &r : rows) {
    if (r.node == node && r.unit == unit) return &r;
  }
  return nullptr;
}

auto count_entities(std::span<const EntityRef> entities) -> DatasetTotals {
  std::set<std::string> scans;
  std::set<std::pair<std::string, std::string>> sessions;
  std::set<std::string> subjects;
  for (const auto &e : entities) {
    scans.insert(e.scan_id);
    sessions.emplace(e.subject_id, e.session_id);
    subjects.insert(e.subject_id);
  }
  return {scans.size(), sessions.size(), subjects.size()};
}

auto aggregate(const DependencyGraph &graph, std::span<const QcVerdict> ledger,
               std::span<const EntityRef> entities) -> Report {
  const auto verdicts = latest_verdicts(ledger);
  Report report;
  report.totals = count_entities(entities);
  for (const auto &node : graph.nodes()) {
    ReportRow row{node.name, std::nullopt, {}};
    for (const auto &e : entities) ++row.counts[classify_scan(graph, verdicts, e, node.name).category];
    report.rows.push_back(row);
    for (const auto &u : node.units) {
      ReportRow urow{node.name, u, {}};
      for (const auto &e : entities) {
        ++urow.counts[classify_scan(graph, verdicts, e, node.name, u).category];
      }
      report.rows.push_back(std::move(urow));
    }
  }
  return report;
}

auto report_to_records(const Report &report) -> std::string {
  json rows = json::array();
  for (const auto &r : report.rows) {
    json counts = json::object();
    for (auto c : kAllCategories) counts[std::string(to_string(c))] = r.counts[c];
    rows.push_back({{"node", r.node},
                    {"unit", r.unit ? json(*r.unit) : json(nullptr)},
                    {"counts", std::move(counts)},
                    {"rated", r.counts.rated()}});
  }
  json doc{{"rows", std::move(rows)},
           {"totals",
            {{"scans", report.totals.scans},
             {"sessions", report.totals.sessions},
             {"subjects", report.totals.subjects}}}};
  return doc.dump() + "\n";
}

auto report_to_csv(const Report &report) -> std::string {
  std::ostringstream out;
  out << "node,unit,category,count\n";
  for (const auto &r : report.rows) {
    for (auto c : kAllCategories) {
      out << r.node << ',' << r.unit.value_or("") << ',' << to_string(c) << ','
          << r.counts[c] << '\n';
    }
  }
  return out.str();
}

auto outcome_records_to_csv(std::span<const OutcomeRecord> records) -> std::string {
  std::ostringstream out;
  out << "subject,session,scan,node,unit,category,failing_ancestors\n";
  for (const auto &r : records) {
    out << r.entity.subject_id << ',' << r.entity.session_id << ',' << r.entity.scan_id << ','
        << r.node << ',' << r.unit.value_or("") << ',' << to_string(r.category) << ',';
    for (std::size_t i = 0; i < r.failing_ancestors.size(); ++i) {
      if (i) out << ';';
      out << r.failing_ancestors[i];
    }
    out << '\n';
  }
  return out.str();
}

auto outcome_records_to_json(std::span<const OutcomeRecord> records) -> std::string {
  json doc = json::array();
  for (const auto &r : records) {
    doc.push_back({{"subject", r.entity.subject_id},
                   {"session", r.entity.session_id},
                   {"scan", r.entity.scan_id},
                   {"node", r.node},
                   {"unit", r.unit ? json(*r.unit) : json(nullptr)},
                   {"category", std::string(to_string(r.category))},
                   {"failing_ancestors", r.failing_ancestors}});
  }
  return json{{"records", std::move(doc)}}.dump() + "\n";
}

} // namespace dmriqc
