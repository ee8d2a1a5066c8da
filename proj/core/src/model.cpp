#include "dmriqc/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>

namespace dmriqc {

using nlohmann::json;

auto PipelineNode::has_unit(std::string_view unit) const -> bool {
  return std::find(units.begin(), units.end(), unit) != units.end();
}

auto DependencyGraph::contains(std::string_view name) const -> bool {
  return index_.contains(std::string(name));
}

auto DependencyGraph::index_of(std::string_view name) const -> std::size_t {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(ErrorCode::UnknownNode, "no node named '" + std::string(name) + "'");
  }
  return it->second;
}

auto DependencyGraph::at(std::string_view name) const -> const PipelineNode & {
  return nodes_[index_of(name)];
}

auto DependencyGraph::ancestors_ordered(std::string_view name) const
    -> const std::vector<std::string> & {
  return ancestors_[index_of(name)];
}

auto DependencyGraph::roots() const -> std::vector<std::string> {
  std::vector<std::string> out;
  for (const auto &n : nodes_) {
    if (n.deps.empty()) out.push_back(n.name);
  }
  return out;
}

namespace {

auto check_unique(const std::vector<std::string> &items, const std::string &node,
                  const char *what) -> void {
  std::set<std::string> seen;
  for (const auto &item : items) {
    if (item.empty()) {
      throw Error(ErrorCode::InvalidGraph,
                  "node '" + node + "' has an empty " + what + " name");
    }
    if (!seen.insert(item).second) {
      throw Error(ErrorCode::InvalidGraph,
                  "node '" + node + "' repeats " + what + " '" + item + "'");
    }
  }
}

// Returns the node names along a cycle reachable in `defs`, closing on the
// first repeated node, e.g. "A -> B -> A".
auto find_cycle(const std::vector<PipelineNode> &defs,
                const std::unordered_map<std::string, std::size_t> &index)
    -> std::string {
  enum class Mark { White, Grey, Black };
  std::vector<Mark> mark(defs.size(), Mark::White);
  std::vector<std::size_t> stack;
  std::string found;

  std::function<bool(std::size_t)> visit = [&](std::size_t v) -> bool {
    mark[v] = Mark::Grey;
    stack.push_back(v);
    auto deps = defs[v].deps;
    std::sort(deps.begin(), deps.end());
    for (const auto &d : deps) {
      auto w = index.at(d);
      if (mark[w] == Mark::Grey) {
        auto start = std::find(stack.begin(), stack.end(), w);
        for (auto it = start; it != stack.end(); ++it) {
          found += defs[*it].name + " -> ";
        }
        found += defs[w].name;
        return true;
      }
      if (mark[w] == Mark::White && visit(w)) return true;
    }
    stack.pop_back();
    mark[v] = Mark::Black;
    return false;
  };

  std::vector<std::size_t> order(defs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return defs[a].name < defs[b].name; });
  for (auto v : order) {
    if (mark[v] == Mark::White && visit(v)) return found;
  }
  return found;
}

} // namespace

auto build_graph(std::vector<PipelineNode> defs) -> DependencyGraph {
  if (defs.empty()) {
    throw Error(ErrorCode::InvalidGraph, "graph definition has no nodes");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (defs[i].name.empty()) {
      throw Error(ErrorCode::InvalidGraph, "node with empty name");
    }
    if (!index.emplace(defs[i].name, i).second) {
      throw Error(ErrorCode::DuplicateNode, "node '" + defs[i].name + "' declared twice");
    }
  }
  for (auto &def : defs) {
    check_unique(def.units, def.name, "unit");
    check_unique(def.deps, def.name, "dependency");
    for (const auto &d : def.deps) {
      if (!index.contains(d)) {
        throw Error(ErrorCode::UnknownDependency,
                    "node '" + def.name + "' depends on unknown node '" + d + "'");
      }
    }
  }

  // Kahn's algorithm; the ready set is ordered so ties resolve by name.
  std::vector<std::size_t> indegree(defs.size(), 0);
  std::vector<std::vector<std::size_t>> children(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) {
    indegree[i] = defs[i].deps.size();
    for (const auto &d : defs[i].deps) children[index.at(d)].push_back(i);
  }
  auto by_name = [&](std::size_t a, std::size_t b) { return defs[a].name > defs[b].name; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_name)> ready(by_name);
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto c : children[v]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != defs.size()) {
    throw Error(ErrorCode::CycleDetected, find_cycle(defs, index));
  }

  DependencyGraph g;
  g.nodes_.reserve(defs.size());
  for (auto v : order) g.nodes_.push_back(std::move(defs[v]));
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_[g.nodes_[i].name] = i;

  // Ancestor closure in topological order: parents precede children, so one
  // forward pass over the ordered nodes suffices.
  std::vector<std::vector<bool>> reach(g.nodes_.size(),
                                       std::vector<bool>(g.nodes_.size(), false));
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    for (const auto &d : g.nodes_[i].deps) {
      auto p = g.index_.at(d);
      reach[i][p] = true;
      for (std::size_t k = 0; k < g.nodes_.size(); ++k) {
        if (reach[p][k]) reach[i][k] = true;
      }
    }
  }
  g.ancestors_.resize(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    for (std::size_t k = 0; k < g.nodes_.size(); ++k) {
      if (reach[i][k]) g.ancestors_[i].push_back(g.nodes_[k].name);
    }
  }
  return g;
}

auto ancestors(const DependencyGraph &graph, std::string_view node)
    -> std::set<std::string> {
  const auto &ordered = graph.ancestors_ordered(node);
  return {ordered.begin(), ordered.end()};
}

auto to_string(VerdictStatus status) -> std::string_view {
  switch (status) {
  case VerdictStatus::Pass: return "pass";
  case VerdictStatus::Fail: return "fail";
  case VerdictStatus::NotRun: return "not_run";
  }
  return "not_run";
}

auto parse_verdict_status(std::string_view text) -> std::optional<VerdictStatus> {
  if (text == "pass") return VerdictStatus::Pass;
  if (text == "fail") return VerdictStatus::Fail;
  if (text == "not_run") return VerdictStatus::NotRun;
  return std::nullopt;
}

auto to_string(OutcomeCategory category) -> std::string_view {
  switch (category) {
  case OutcomeCategory::BothPassed: return "both_passed";
  case OutcomeCategory::DepPassedOutcomeFailed: return "dep_passed_outcome_failed";
  case OutcomeCategory::DepFailedOutcomePassed: return "dep_failed_outcome_passed";
  case OutcomeCategory::BothFailed: return "both_failed";
  case OutcomeCategory::Pending: return "pending";
  }
  return "pending";
}

namespace {

// Howard Hinnant's civil-calendar conversions.
constexpr auto days_from_civil(std::int64_t y, unsigned m, unsigned d) -> std::int64_t {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m, d;
};

constexpr auto civil_from_days(std::int64_t z) -> Civil {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

auto parse_uint(std::string_view text, std::size_t pos, std::size_t len) -> unsigned {
  if (pos + len > text.size()) {
    throw Error(ErrorCode::InvalidArgument, "timestamp too short");
  }
  unsigned value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::InvalidArgument, "bad digit in timestamp '" + std::string(text) + "'");
    }
    value = value * 10 + static_cast<unsigned>(c - '0');
  }
  return value;
}

} // namespace

auto format_timestamp(Timestamp ts) -> std::string {
  using namespace std::chrono;
  const auto ms = ts.time_since_epoch().count();
  std::int64_t days = ms >= 0 ? ms / 86400000 : -((-ms + 86399999) / 86400000);
  std::int64_t rem = ms - days * 86400000;
  const auto c = civil_from_days(days);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<long long>(c.y), c.m, c.d,
                static_cast<long long>(rem / 3600000),
                static_cast<long long>(rem / 60000 % 60),
                static_cast<long long>(rem / 1000 % 60),
                static_cast<long long>(rem % 1000));
  return buf;
}

auto parse_timestamp(std::string_view text) -> Timestamp {
  // YYYY-MM-DDTHH:MM:SS[.f{1,9}]Z
  auto fail = [&] {
    throw Error(ErrorCode::InvalidArgument, "malformed timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 20) fail();
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    fail();
  }
  const auto y = parse_uint(text, 0, 4);
  const auto mo = parse_uint(text, 5, 2);
  const auto d = parse_uint(text, 8, 2);
  const auto h = parse_uint(text, 11, 2);
  const auto mi = parse_uint(text, 14, 2);
  const auto s = parse_uint(text, 17, 2);
  if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || s > 60) fail();
  static constexpr unsigned kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (d > kMonthDays[mo - 1] + (mo == 2 && leap ? 1u : 0u)) fail();
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 3) millis = millis * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0 || digits > 9) fail();
    for (std::size_t i = digits; i < 3; ++i) millis *= 10;
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') fail();
  const auto days = days_from_civil(y, mo, d);
  const std::int64_t total =
      ((days * 24 + h) * 60 + mi) * 60 * 1000 + static_cast<std::int64_t>(s) * 1000 + millis;
  return Timestamp{std::chrono::milliseconds{total}};
}

auto key_of(const QcVerdict &verdict) -> VerdictKey {
  return {verdict.entity, verdict.node, verdict.unit};
}

auto latest_verdicts(std::span<const QcVerdict> ledger) -> VerdictMap {
  VerdictMap out;
  for (const auto &v : ledger) {
    auto [it, inserted] = out.try_emplace(key_of(v), v);
    if (inserted) continue;
    const auto &cur = it->second;
    if (v.timestamp > cur.timestamp ||
        (v.timestamp == cur.timestamp && v.verdict_uid > cur.verdict_uid)) {
      it->second = v;
    }
  }
  return out;
}

auto verdict_to_json(const QcVerdict &v) -> json {
  json doc;
  doc["verdict_uid"] = v.verdict_uid;
  doc["subject"] = v.entity.subject_id;
  doc["session"] = v.entity.session_id;
  doc["scan"] = v.entity.scan_id;
  doc["node"] = v.node;
  doc["unit"] = v.unit ? json(*v.unit) : json(nullptr);
  doc["status"] = std::string(to_string(v.status));
  doc["rater"] = v.rater_id;
  doc["timestamp"] = format_timestamp(v.timestamp);
  doc["checklist"] = json::object();
  for (const auto &[criterion, ok] : v.checklist) doc["checklist"][criterion] = ok;
  doc["comment"] = v.comment ? json(*v.comment) : json(nullptr);
  return doc;
}

namespace {

auto required_string(const json &doc, const char *field) -> std::string {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) {
    throw Error(ErrorCode::SchemaViolation, std::string("field '") + field + "' must be a string");
  }
  return it->get<std::string>();
}

auto optional_string(const json &doc, const char *field) -> std::optional<std::string> {
  auto it = doc.find(field);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::SchemaViolation, std::string("field '") + field + "' must be a string or null");
  }
  return it->get<std::string>();
}

auto string_list(const json &node, const char *field, const std::string &owner)
    -> std::vector<std::string> {
  std::vector<std::string> out;
  auto it = node.find(field);
  if (it == node.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw Error(ErrorCode::InvalidGraph,
                "node '" + owner + "': '" + field + "' must be a list of strings");
  }
  for (const auto &item : *it) {
    if (!item.is_string()) {
      throw Error(ErrorCode::InvalidGraph,
                  "node '" + owner + "': '" + field + "' must be a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

} // namespace

auto verdict_from_json(const json &doc) -> QcVerdict {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "verdict must be an object");
  QcVerdict v;
  v.verdict_uid = required_string(doc, "verdict_uid");
  if (v.verdict_uid.empty()) throw Error(ErrorCode::SchemaViolation, "empty verdict_uid");
  v.entity.subject_id = required_string(doc, "subject");
  v.entity.session_id = required_string(doc, "session");
  v.entity.scan_id = required_string(doc, "scan");
  v.node = required_string(doc, "node");
  v.unit = optional_string(doc, "unit");
  auto status = parse_verdict_status(required_string(doc, "status"));
  if (!status) throw Error(ErrorCode::SchemaViolation, "status must be pass, fail or not_run");
  v.status = *status;
  v.rater_id = required_string(doc, "rater");
  try {
    v.timestamp = parse_timestamp(required_string(doc, "timestamp"));
  } catch (const Error &e) {
    throw Error(ErrorCode::SchemaViolation, e.detail());
  }
  if (auto it = doc.find("checklist"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(ErrorCode::SchemaViolation, "checklist must be an object");
    for (const auto &[criterion, ok] : it->items()) {
      if (!ok.is_boolean()) {
        throw Error(ErrorCode::SchemaViolation, "checklist entries must be booleans");
      }
      v.checklist[criterion] = ok.get<bool>();
    }
  }
  v.comment = optional_string(doc, "comment");
  return v;
}

auto parse_graph_definition(const json &doc) -> std::vector<PipelineNode> {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw Error(ErrorCode::InvalidGraph, "graph definition needs a 'nodes' list");
  }
  if (auto v = doc.find("version"); v != doc.end() && (!v->is_number_integer() || *v != 1)) {
    throw Error(ErrorCode::InvalidGraph, "unsupported graph definition version");
  }
  std::vector<PipelineNode> out;
  for (const auto &n : doc["nodes"]) {
    if (!n.is_object() || !n.contains("name") || !n["name"].is_string()) {
      throw Error(ErrorCode::InvalidGraph, "every node needs a string 'name'");
    }
    PipelineNode node;
    node.name = n["name"].get<std::string>();
    if (!is_safe_identifier(node.name)) {
      throw Error(ErrorCode::InvalidGraph, "node name '" + node.name + "' has characters outside [A-Za-z0-9_.-]");
    }
    node.deps = string_list(n, "deps", node.name);
    node.units = string_list(n, "units", node.name);
    node.criteria = string_list(n, "criteria", node.name);
    node.checks = string_list(n, "checks", node.name);
    node.panels = string_list(n, "panels", node.name);
    node.artifacts = string_list(n, "artifacts", node.name);
    for (const auto &u : node.units) {
      if (!is_safe_identifier(u)) {
        throw Error(ErrorCode::InvalidGraph, "unit name '" + u + "' has characters outside [A-Za-z0-9_.-]");
      }
    }
    if (auto g = n.find("granularity"); g != n.end()) {
      if (!g->is_string() || (*g != "global" && *g != "per_unit")) {
        throw Error(ErrorCode::InvalidGraph, "granularity must be 'global' or 'per_unit'");
      }
      if ((*g == "per_unit") != node.per_unit()) {
        throw Error(ErrorCode::InvalidGraph,
                    "node '" + node.name + "': granularity disagrees with its unit list");
      }
    }
    out.push_back(std::move(node));
  }
  return out;
}

auto graph_to_json(const DependencyGraph &graph) -> json {
  json nodes = json::array();
  for (const auto &n : graph.nodes()) {
    json j;
    j["name"] = n.name;
    j["deps"] = n.deps;
    j["granularity"] = n.per_unit() ? "per_unit" : "global";
    j["units"] = n.units;
    j["criteria"] = n.criteria;
    j["checks"] = n.checks;
    j["panels"] = n.panels;
    j["artifacts"] = n.artifacts;
    j["ancestors"] = graph.ancestors_ordered(n.name);
    nodes.push_back(std::move(j));
  }
  return json{{"version", 1}, {"nodes", std::move(nodes)}};
}

auto load_graph_file(const std::filesystem::path &path) -> DependencyGraph {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open graph definition " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::InvalidGraph, path.string() + ": " + e.what());
  }
  return build_graph(parse_graph_definition(doc));
}

auto tractseg_bundles() -> std::vector<std::string> {
  std::vector<std::string> out{"CA", "MCP", "CC"};
  for (int i = 1; i <= 7; ++i) out.push_back("CC_" + std::to_string(i));
  const char *bilateral[] = {
      "AF", "ATR", "CG", "CST", "MLF", "FPT", "FX", "ICP", "IFO", "ILF", "OR",
      "POPT", "SCP", "SLF_I", "SLF_II", "SLF_III", "STR", "UF", "T_PREF",
      "T_PREM", "T_PREC", "T_POSTC", "T_PAR", "T_OCC", "ST_FO", "ST_PREF",
      "ST_PREM", "ST_PREC", "ST_POSTC", "ST_PAR", "ST_OCC"};
  for (const char *b : bilateral) {
    out.push_back(std::string(b) + "_left");
    out.push_back(std::string(b) + "_right");
  }
  std::sort(out.begin(), out.end());
  return out;
}

auto default_pipeline_nodes() -> std::vector<PipelineNode> {
  std::vector<PipelineNode> nodes;

  PipelineNode prequal;
  prequal.name = "PreQual";
  prequal.criteria = {
      "Median volume intensity decays exponentially with b-value",
      "Translation and rotation traces are smooth between adjacent volumes",
      "Few slices imputed as outliers, none concentrated in central slices",
      "Chi-square of tensor reconstruction is low for volumes with b <= 1500",
      "Corpus callosum tensors form a left-right U on an axial slice",
      "Corticospinal tract tensors run superior-inferior on a coronal slice",
      "Optimal b-vector permutation is the original orientation",
      "Synthetic b0 (if used) is anatomically plausible and covers the brain",
      "FA map shows bright white matter against the rest of the brain",
  };
  prequal.checks = {"intensity_decay", "motion", "outlier_slices", "chi_square",
                    "bvec_permutation"};
  prequal.panels = {"b0_montage", "fa_montage", "tensor_glyphs"};
  nodes.push_back(prequal);

  PipelineNode seg;
  seg.name = "SLANT-UNesT";
  seg.criteria = {
      "Cortex is parcellated with labels in their expected positions",
      "Gray matter labels do not leak outside the brain",
      "Gray matter and white matter labels do not bleed into each other",
  };
  seg.panels = {"seg_overlay"};
  nodes.push_back(seg);

  PipelineNode fw;
  fw.name = "FreeWater";
  fw.deps = {"PreQual"};
  fw.criteria = {
      "Corrected FA raises white matter intensity relative to the original",
      "Overall white matter structure is unchanged",
      "Corrected FA is not noticeably noisier than the original",
      "No overestimated FA in non-white-matter regions",
  };
  fw.checks = {"freewater"};
  fw.panels = {"freewater_comparison"};
  nodes.push_back(fw);

  PipelineNode tensor;
  tensor.name = "TensorAtlas";
  tensor.deps = {"PreQual", "SLANT-UNesT"};
  tensor.criteria = {
      "Atlas labels roughly align with white matter tracts on the FA map",
      "Labels and applied brain mask are centered on the FA map",
  };
  tensor.checks = {"overlay_alignment"};
  tensor.panels = {"atlas_overlay"};
  nodes.push_back(tensor);

  PipelineNode tractseg;
  tractseg.name = "Tractseg";
  tractseg.deps = {"PreQual", "TensorAtlas"};
  tractseg.units = tractseg_bundles();
  tractseg.criteria = {
      "Bundle has enough streamlines to look full",
      "Bundle is not empty",
      "Streamlines are located where the bundle is expected",
      "Streamlines do not terminate early",
  };
  tractseg.checks = {"bundle"};
  tractseg.panels = {"bundle"};
  nodes.push_back(tractseg);

  PipelineNode braid;
  braid.name = "BRAID";
  braid.deps = {"PreQual", "SLANT-UNesT", "TensorAtlas"};
  braid.criteria = {
      "Affine-registered FA/MD maps are roughly aligned to the template",
      "Deformably registered FA/MD maps show minimal macrostructure",
  };
  braid.panels = {"montage:fa_mni", "montage:md_mni"};
  nodes.push_back(braid);

  PipelineNode connectome;
  connectome.name = "Connectome";
  connectome.deps = {"PreQual", "SLANT-UNesT"};
  connectome.criteria = {
      "Connectomes are symmetric about the diagonal",
      "Streamline-count connectome has its strongest connections on the diagonal",
      "Matrix looks full with a reasonable number of strong connections",
      "FA-weighted connectome has homogeneous intensity",
  };
  connectome.checks = {"connectome"};
  connectome.panels = {"connectome_nos", "connectome_fa"};
  nodes.push_back(connectome);

  return nodes;
}

auto is_safe_identifier(std::string_view id) noexcept -> bool {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
  });
}

} // namespace dmriqc
