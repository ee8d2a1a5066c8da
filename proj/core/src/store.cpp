#include "dmriqc/store.hpp"

#include "dmriqc/error.hpp"
#include "dmriqc/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

namespace dmriqc {

namespace fs = std::filesystem;
using nlohmann::json;

auto is_per_unit_kind(std::string_view kind) -> bool { return kind == "tck"; }

namespace {

auto check_artifacts(std::string_view check) -> std::vector<std::string> {
  if (check == "intensity_decay" || check == "chi_square" || check == "bvec_permutation") {
    return {"dwi", "bval", "bvec"};
  }
  if (check == "motion") return {"motion"};
  if (check == "outlier_slices") return {"outliers"};
  if (check == "freewater") return {"fa", "fa_fw", "wm_mask", "nonwm_mask"};
  if (check == "overlay_alignment") return {"fa", "labels", "brain_mask"};
  if (check == "bundle") return {"tck"};
  if (check == "connectome") return {"nos", "fa_matrix"};
  if (check.starts_with("range:")) {
    const auto rest = check.substr(6);
    const auto colon = rest.find(':');
    if (colon == 0 || colon == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "range check must be 'range:<kind>:<lo>:<hi>'");
    }
    return {std::string(rest.substr(0, colon))};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown check '" + std::string(check) + "'");
}

auto panel_artifacts(std::string_view panel) -> std::vector<std::string> {
  if (panel == "b0_montage" || panel == "fa_montage" || panel == "tensor_glyphs") {
    return {"dwi", "bval", "bvec"};
  }
  if (panel == "seg_overlay") return {"t1", "seg"};
  if (panel == "atlas_overlay") return {"fa", "labels"};
  if (panel == "freewater_comparison") return {"fa", "fa_fw"};
  if (panel == "bundle") return {"tck"};
  if (panel == "connectome_nos") return {"nos"};
  if (panel == "connectome_fa") return {"fa_matrix"};
  if (panel.starts_with("montage:") && panel.size() > 8) return {std::string(panel.substr(8))};
  throw Error(ErrorCode::InvalidArgument, "unknown panel '" + std::string(panel) + "'");
}

auto schema(const std::string &what) -> Error { return {ErrorCode::SchemaViolation, "manifest: " + what}; }

auto id_field(const json &obj, const std::string &where) -> std::string {
  auto it = obj.find("id");
  if (!obj.is_object() || it == obj.end() || !it->is_string()) throw schema(where + " needs a string 'id'");
  auto id = it->get<std::string>();
  if (!is_safe_identifier(id)) throw schema(where + " id '" + id + "' has characters outside [A-Za-z0-9_.-]");
  return id;
}

auto array_field(const json &obj, const char *key, const std::string &where) -> const json & {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) throw schema(where + " needs an array '" + key + "'");
  return *it;
}

auto resolve(const fs::path &base, const std::string &p) -> fs::path {
  fs::path path(p);
  return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

auto relative_or_absolute(const fs::path &p, const fs::path &base) -> std::string {
  auto rel = p.lexically_relative(base);
  return rel.empty() ? p.string() : rel.generic_string();
}

} // namespace

auto required_artifacts(const PipelineNode &node) -> RequiredArtifacts {
  RequiredArtifacts req;
  auto add = [&](const std::string &kind) {
    if (is_per_unit_kind(kind) && node.per_unit()) {
      req.per_unit.insert(kind);
    } else {
      req.global.insert(kind);
    }
  };
  for (const auto &c : node.checks) {
    for (const auto &k : check_artifacts(c)) add(k);
  }
  for (const auto &p : node.panels) {
    for (const auto &k : panel_artifacts(p)) add(k);
  }
  for (const auto &k : node.artifacts) add(k);
  return req;
}

auto ScanRecord::artifact(const std::string &node, const std::string &kind) const -> std::optional<fs::path> {
  auto n = artifacts.find(node);
  if (n == artifacts.end()) return std::nullopt;
  auto k = n->second.find(kind);
  if (k == n->second.end()) return std::nullopt;
  return k->second;
}

auto ScanRecord::unit_artifact(const std::string &node, const std::string &kind, const std::string &unit) const
    -> std::optional<fs::path> {
  auto n = unit_artifacts.find(node);
  if (n == unit_artifacts.end()) return std::nullopt;
  auto k = n->second.find(kind);
  if (k == n->second.end()) return std::nullopt;
  auto u = k->second.find(unit);
  if (u == k->second.end()) return std::nullopt;
  return u->second;
}

auto DatasetManifest::find_scan(std::string_view scan_id) const -> const ScanRecord * {
  for (const auto &s : scans) {
    if (s.entity.scan_id == scan_id) return &s;
  }
  return nullptr;
}

auto DatasetManifest::entities() const -> std::vector<EntityRef> {
  std::vector<EntityRef> out;
  out.reserve(scans.size());
  for (const auto &s : scans) out.push_back(s.entity);
  return out;
}

auto parse_manifest(const json &doc, const fs::path &base_dir) -> DatasetManifest {
  if (!doc.is_object()) throw schema("document must be an object");
  if (auto v = doc.find("version"); v != doc.end() && (!v->is_number_integer() || *v != 1)) {
    throw schema("unsupported version");
  }
  DatasetManifest m;
  if (auto g = doc.find("graph"); g != doc.end() && !g->is_null()) {
    if (!g->is_string()) throw schema("'graph' must be a path string");
    m.graph_path = resolve(base_dir, g->get<std::string>());
    m.graph = load_graph_file(*m.graph_path);
  } else {
    m.graph = build_graph(default_pipeline_nodes());
  }
  if (auto o = doc.find("output_dir"); o != doc.end()) {
    if (!o->is_string()) throw schema("'output_dir' must be a path string");
    m.output_dir = resolve(base_dir, o->get<std::string>());
  } else {
    m.output_dir = (base_dir / "qc").lexically_normal();
  }

  std::set<std::string> scan_ids;
  std::set<std::string> subject_ids;
  for (const auto &subj : array_field(doc, "subjects", "document")) {
    const auto sub_id = id_field(subj, "subject");
    if (!subject_ids.insert(sub_id).second) throw schema("duplicate subject '" + sub_id + "'");
    std::set<std::string> session_ids;
    for (const auto &ses : array_field(subj, "sessions", "subject " + sub_id)) {
      const auto ses_id = id_field(ses, "session of " + sub_id);
      if (!session_ids.insert(ses_id).second) {
        throw schema("duplicate session '" + ses_id + "' in subject '" + sub_id + "'");
      }
      for (const auto &sc : array_field(ses, "scans", "session " + sub_id + "/" + ses_id)) {
        ScanRecord rec;
        rec.entity = {sub_id, ses_id, id_field(sc, "scan of " + sub_id + "/" + ses_id)};
        const auto &scan_id = rec.entity.scan_id;
        if (!scan_ids.insert(scan_id).second) {
          throw Error(ErrorCode::DuplicateScanId, "scan id '" + scan_id + "' appears more than once");
        }
        auto arts = sc.find("artifacts");
        if (arts != sc.end() && !arts->is_null()) {
          if (!arts->is_object()) throw schema("scan " + scan_id + ": 'artifacts' must be an object");
          for (const auto &[node, kinds] : arts->items()) {
            if (!m.graph.contains(node)) {
              throw Error(ErrorCode::UnknownNodeReference,
                          "scan " + scan_id + " references node '" + node + "' which is not in the graph");
            }
            const auto &def = m.graph.at(node);
            if (!kinds.is_object()) throw schema("scan " + scan_id + "/" + node + ": expected kind -> path");
            for (const auto &[kind, value] : kinds.items()) {
              if (value.is_string()) {
                rec.artifacts[node][kind] = resolve(base_dir, value.get<std::string>());
              } else if (value.is_object()) {
                for (const auto &[unit, p] : value.items()) {
                  if (!def.has_unit(unit)) {
                    throw Error(ErrorCode::UnknownNodeReference,
                                "scan " + scan_id + " references unit '" + unit + "' not defined for node '" + node + "'");
                  }
                  if (!p.is_string()) throw schema("scan " + scan_id + "/" + node + "/" + kind + ": paths must be strings");
                  rec.unit_artifacts[node][kind][unit] = resolve(base_dir, p.get<std::string>());
                }
              } else {
                throw schema("scan " + scan_id + "/" + node + "/" + kind + ": expected a path or unit map");
              }
            }
          }
        }
        m.scans.push_back(std::move(rec));
      }
    }
  }
  return m;
}

auto load_manifest(const fs::path &path) -> DatasetManifest {
  const auto text = read_file_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
  auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto m = parse_manifest(doc, base);
  m.source = path;
  return m;
}

auto manifest_to_json(const DatasetManifest &m) -> json {
  const auto base = m.source.has_parent_path() ? m.source.parent_path() : fs::path(".");
  json doc;
  doc["version"] = 1;
  if (m.graph_path) doc["graph"] = relative_or_absolute(*m.graph_path, base);
  doc["output_dir"] = relative_or_absolute(m.output_dir, base);
  json subjects = json::array();
  for (const auto &s : m.scans) {
    auto sub = std::find_if(subjects.begin(), subjects.end(), [&](const json &j) { return j["id"] == s.entity.subject_id; });
    if (sub == subjects.end()) {
      subjects.push_back({{"id", s.entity.subject_id}, {"sessions", json::array()}});
      sub = subjects.end() - 1;
    }
    auto &sessions = (*sub)["sessions"];
    auto ses = std::find_if(sessions.begin(), sessions.end(), [&](const json &j) { return j["id"] == s.entity.session_id; });
    if (ses == sessions.end()) {
      sessions.push_back({{"id", s.entity.session_id}, {"scans", json::array()}});
      ses = sessions.end() - 1;
    }
    json arts = json::object();
    for (const auto &[node, kinds] : s.artifacts) {
      for (const auto &[kind, p] : kinds) arts[node][kind] = relative_or_absolute(p, base);
    }
    for (const auto &[node, kinds] : s.unit_artifacts) {
      for (const auto &[kind, units] : kinds) {
        for (const auto &[unit, p] : units) arts[node][kind][unit] = relative_or_absolute(p, base);
      }
    }
    (*ses)["scans"].push_back({{"id", s.entity.scan_id}, {"artifacts", arts}});
  }
  doc["subjects"] = subjects;
  return doc;
}

auto validate_manifest(const DatasetManifest &m) -> void {
  std::vector<std::string> missing;
  for (const auto &scan : m.scans) {
    for (const auto &node : m.graph.nodes()) {
      const auto req = required_artifacts(node);
      for (const auto &kind : req.global) {
        const auto p = scan.artifact(node.name, kind);
        if (!p) {
          missing.push_back(scan.entity.scan_id + "/" + node.name + "/" + kind + " (not listed)");
        } else if (!fs::is_regular_file(*p)) {
          missing.push_back(scan.entity.scan_id + "/" + node.name + "/" + kind + " (" + p->string() + " does not exist)");
        }
      }
      for (const auto &kind : req.per_unit) {
        for (const auto &unit : node.units) {
          const auto p = scan.unit_artifact(node.name, kind, unit);
          const auto where = scan.entity.scan_id + "/" + node.name + "/" + kind + "/" + unit;
          if (!p) {
            missing.push_back(where + " (not listed)");
          } else if (!fs::is_regular_file(*p)) {
            missing.push_back(where + " (" + p->string() + " does not exist)");
          }
        }
      }
    }
  }
  if (missing.empty()) return;
  std::string msg = std::to_string(missing.size()) + " missing artifact(s): ";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg += (i ? "; " : "") + missing[i];
  if (shown < missing.size()) msg += "; ...";
  throw Error(ErrorCode::MissingArtifact, msg);
}

// ---------------------------------------------------------------- ledger

namespace {

class FdGuard {
public:
  explicit FdGuard(int fd) : fd_(fd) {}
  FdGuard(const FdGuard &) = delete;
  auto operator=(const FdGuard &) -> FdGuard & = delete;
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  [[nodiscard]] auto get() const -> int { return fd_; }

private:
  int fd_;
};

auto io_error(const std::string &what, const fs::path &p) -> Error {
  return {ErrorCode::IoFailure, what + " " + p.string() + ": " + std::strerror(errno)};
}

auto validate_for_ledger(const QcVerdict &v) -> void {
  for (const auto *id : {&v.entity.subject_id, &v.entity.session_id, &v.entity.scan_id, &v.node, &v.verdict_uid}) {
    if (!is_safe_identifier(*id)) throw Error(ErrorCode::InvalidArgument, "verdict id '" + *id + "' is not a safe identifier");
  }
  if (v.unit && !is_safe_identifier(*v.unit)) {
    throw Error(ErrorCode::InvalidArgument, "unit '" + *v.unit + "' is not a safe identifier");
  }
  if (v.rater_id.empty()) throw Error(ErrorCode::InvalidArgument, "verdict needs a rater id");
}

/// The file does not end in a newline, so a previous writer died mid-record.
/// A tail that still parses is kept and closed; otherwise it is cut back to
/// the last complete line, since its writer never saw a successful append.
auto repair_tail(int fd, off_t size, const fs::path &ledger, std::string &line) -> void {
  constexpr off_t kChunk = 4096;
  std::string tail;
  off_t pos = size;
  off_t cut = 0;
  while (pos > 0) {
    const off_t from = std::max<off_t>(0, pos - kChunk);
    std::string buf(static_cast<std::size_t>(pos - from), '\0');
    if (::pread(fd, buf.data(), buf.size(), from) != static_cast<ssize_t>(buf.size())) {
      throw io_error("cannot read ledger", ledger);
    }
    tail.insert(0, buf);
    pos = from;
    const auto nl = buf.rfind('\n');
    if (nl != std::string::npos) {
      cut = from + static_cast<off_t>(nl) + 1;
      break;
    }
  }
  tail.erase(0, static_cast<std::size_t>(cut - pos));
  try {
    verdict_from_json(json::parse(tail));
    line.insert(line.begin(), '\n');
  } catch (const std::exception &) {
    if (::ftruncate(fd, cut) != 0) throw io_error("cannot repair ledger", ledger);
  }
}

} // namespace

auto append_verdict(const fs::path &ledger, const QcVerdict &verdict) -> void {
  validate_for_ledger(verdict);
  std::string line = verdict_to_json(verdict).dump() + "\n";
  if (ledger.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(ledger.parent_path(), ec);
  }
  FdGuard fd(::open(ledger.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw io_error("cannot open ledger", ledger);
  while (::flock(fd.get(), LOCK_EX) != 0) {
    if (errno != EINTR) throw io_error("cannot lock ledger", ledger);
  }
  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) throw io_error("cannot stat ledger", ledger);
  if (st.st_size > 0) {
    char last = '\n';
    if (::pread(fd.get(), &last, 1, st.st_size - 1) != 1) throw io_error("cannot read ledger", ledger);
    if (last != '\n') repair_tail(fd.get(), st.st_size, ledger, line);
  }
  const char *p = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const auto n = ::write(fd.get(), p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("cannot append to ledger", ledger);
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd.get()) != 0) throw io_error("cannot sync ledger", ledger);
  ::flock(fd.get(), LOCK_UN);
}

auto parse_ledger(std::string_view text) -> LedgerLoad {
  LedgerLoad out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', start);
    const bool terminated = nl != std::string_view::npos;
    const auto line = text.substr(start, terminated ? nl - start : std::string_view::npos);
    start = terminated ? nl + 1 : text.size();
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto doc = json::parse(line);
      out.verdicts.push_back(verdict_from_json(doc));
    } catch (const std::exception &e) {
      // Only a crashed writer's unterminated last line is forgivable;
      // append_verdict repairs such a tail before writing after it.
      if (!terminated) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": torn final record skipped");
        break;
      }
      throw Error(ErrorCode::SchemaViolation, "ledger line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

auto load_ledger(const fs::path &ledger) -> LedgerLoad {
  std::error_code ec;
  if (!fs::exists(ledger, ec)) return {};
  FdGuard fd(::open(ledger.c_str(), O_RDONLY | O_CLOEXEC));
  if (fd.get() < 0) throw io_error("cannot open ledger", ledger);
  while (::flock(fd.get(), LOCK_SH) != 0) {
    if (errno != EINTR) throw io_error("cannot lock ledger", ledger);
  }
  std::string text;
  char buf[1 << 16];
  for (;;) {
    const auto n = ::read(fd.get(), buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("cannot read ledger", ledger);
    }
    if (n == 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  ::flock(fd.get(), LOCK_UN);
  return parse_ledger(text);
}

} // namespace dmriqc
