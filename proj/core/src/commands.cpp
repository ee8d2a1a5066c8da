#include "dmriqc/commands.hpp"

#include "dmriqc/error.hpp"
#include "dmriqc/io.hpp"
#include "dmriqc/pipeline.hpp"
#include "dmriqc/propagation.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>

namespace dmriqc {

namespace fs = std::filesystem;
using nlohmann::json;

auto process_env(const char *name) -> std::optional<std::string> {
  const char *v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

namespace {

auto parse_int(const std::string &text, const char *what) -> int {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be an integer, got '" + text + "'");
  }
  return v;
}

auto parse_real(const std::string &text, const char *what) -> double {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a number, got '" + text + "'");
  }
  return v;
}

template <class T> auto pick(const std::optional<T> &a, const std::optional<T> &b, const std::optional<T> &c)
    -> std::optional<T> {
  if (a) return a;
  if (b) return b;
  return c;
}

auto count_line(const DatasetTotals &t) -> std::string {
  return std::to_string(t.scans) + " scans, " + std::to_string(t.sessions) + " sessions, " +
         std::to_string(t.subjects) + " subjects";
}

} // namespace

auto options_from_env(const EnvLookup &env) -> OptionLayer {
  OptionLayer l;
  if (auto v = env("DMRIQC_MANIFEST")) l.manifest = *v;
  if (auto v = env("DMRIQC_LEDGER")) l.ledger = *v;
  if (auto v = env("DMRIQC_THRESHOLDS")) l.thresholds = *v;
  if (auto v = env("DMRIQC_HOST")) l.host = *v;
  if (auto v = env("DMRIQC_PORT")) l.port = parse_int(*v, "DMRIQC_PORT");
  if (auto v = env("DMRIQC_TOKEN")) l.token = *v;
  if (auto v = env("DMRIQC_LEASE_MINUTES")) l.lease_minutes = parse_real(*v, "DMRIQC_LEASE_MINUTES");
  if (auto v = env("DMRIQC_FORMAT")) l.format = *v;
  return l;
}

auto options_from_config(const fs::path &path) -> OptionLayer {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::InvalidArgument, "config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config " + path.string() + " must be an object");
  const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  OptionLayer l;
  auto str = [&](const char *key) -> std::optional<std::string> {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' must be a string");
    return it->get<std::string>();
  };
  auto num = [&](const char *key) -> std::optional<double> {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' must be a number");
    return it->get<double>();
  };
  auto path_of = [&](const char *key) -> std::optional<fs::path> {
    auto s = str(key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    return p.is_absolute() ? p : (base / p).lexically_normal();
  };
  for (const auto &[key, value] : doc.items()) {
    static const char *known[] = {"manifest", "ledger", "thresholds", "host", "port", "token", "lease_minutes", "format"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char *k) { return key == k; })) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' is not recognised");
    }
  }
  l.manifest = path_of("manifest");
  l.ledger = path_of("ledger");
  l.thresholds = path_of("thresholds");
  l.host = str("host");
  if (auto p = num("port")) {
    if (*p != static_cast<int>(*p)) throw Error(ErrorCode::InvalidArgument, "config key 'port' must be an integer");
    l.port = static_cast<int>(*p);
  }
  l.token = str("token");
  l.lease_minutes = num("lease_minutes");
  l.format = str("format");
  return l;
}

auto resolve_options(const OptionLayer &flags, const OptionLayer &env, const OptionLayer &config) -> ResolvedOptions {
  ResolvedOptions r;
  r.manifest = pick(flags.manifest, env.manifest, config.manifest);
  r.ledger = pick(flags.ledger, env.ledger, config.ledger);
  r.thresholds = pick(flags.thresholds, env.thresholds, config.thresholds);
  if (auto v = pick(flags.host, env.host, config.host)) r.host = *v;
  if (auto v = pick(flags.port, env.port, config.port)) r.port = *v;
  r.token = pick(flags.token, env.token, config.token);
  if (auto v = pick(flags.lease_minutes, env.lease_minutes, config.lease_minutes)) r.lease_minutes = *v;
  if (auto v = pick(flags.format, env.format, config.format)) {
    auto f = parse_report_format(*v);
    if (!f) throw Error(ErrorCode::InvalidArgument, "format must be 'csv' or 'records', got '" + *v + "'");
    r.format = *f;
  }
  if (r.port < 0 || r.port > 65535) throw Error(ErrorCode::InvalidArgument, "port must be in [0, 65535]");
  if (!(r.lease_minutes > 0.0)) throw Error(ErrorCode::InvalidArgument, "lease duration must be positive");
  return r;
}

auto open_workspace(const ResolvedOptions &options) -> Workspace {
  if (!options.manifest) throw Error(ErrorCode::InvalidArgument, "no manifest given (--manifest or DMRIQC_MANIFEST)");
  Workspace w{load_manifest(*options.manifest), {}, {}};
  w.ledger = options.ledger ? *options.ledger : w.manifest.output_dir / "ledger.jsonl";
  if (options.thresholds) {
    try {
      w.thresholds = thresholds_from_json(json::parse(read_file_text(*options.thresholds)));
    } catch (const json::exception &e) {
      throw Error(ErrorCode::InvalidArgument, "thresholds " + options.thresholds->string() + ": " + e.what());
    }
  }
  return w;
}

auto guarded(std::ostream &err, const std::function<int()> &body) -> int {
  try {
    return body();
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::IoFailure ? kExitInternal : kExitValidation;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

auto cmd_ingest(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int {
  return guarded(err, [&] {
    const auto w = open_workspace(options);
    validate_manifest(w.manifest);
    const auto entities = w.manifest.entities();
    out << "manifest ok: " << count_line(count_entities(entities)) << ", " << w.manifest.graph.size() << " nodes\n";
    return kExitOk;
  });
}

namespace {

template <class Step>
auto run_steps(const ResolvedOptions &options, std::ostream &out, std::ostream &err, const char *verb, Step &&step)
    -> int {
  return guarded(err, [&] {
    const auto w = open_workspace(options);
    validate_manifest(w.manifest);
    StepOutcome total;
    for (const auto &scan : w.manifest.scans) {
      for (const auto &node : w.manifest.graph.nodes()) {
        try {
          const auto r = step(w, scan, node);
          total.written += r.written;
          total.skipped += r.skipped;
        } catch (const Error &e) {
          throw Error(e.code(), scan.entity.scan_id + "/" + node.name + ": " + e.detail());
        }
      }
    }
    out << verb << ": " << total.written << " written, " << total.skipped << " up to date\n";
    return kExitOk;
  });
}

} // namespace

auto cmd_diagnose(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int {
  return run_steps(options, out, err, "diagnose", [&](const Workspace &w, const ScanRecord &scan, const PipelineNode &node) {
    if (node.checks.empty()) return StepOutcome{};
    return diagnose_node(w.manifest, scan, node, w.thresholds, options.force);
  });
}

auto cmd_render(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int {
  return run_steps(options, out, err, "render", [&](const Workspace &w, const ScanRecord &scan, const PipelineNode &node) {
    return render_node(w.manifest, scan, node, options.force);
  });
}

auto cmd_report(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int {
  return guarded(err, [&] {
    const auto w = open_workspace(options);
    const auto ledger = load_ledger(w.ledger);
    for (const auto &warning : ledger.warnings) err << "warning: " << w.ledger.string() << ": " << warning << "\n";
    const auto text = render_report(w.manifest, ledger.verdicts, options.format);
    if (options.output) {
      write_file_atomic(*options.output, text);
    } else {
      out << text;
    }
    return kExitOk;
  });
}

auto cmd_propagate(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int {
  return guarded(err, [&] {
    const auto w = open_workspace(options);
    const auto ledger = load_ledger(w.ledger);
    for (const auto &warning : ledger.warnings) err << "warning: " << w.ledger.string() << ": " << warning << "\n";
    const auto entities = w.manifest.entities();
    const auto records = classify_all(w.manifest.graph, latest_verdicts(ledger.verdicts), entities);
    const auto text = options.format == ReportFormat::Csv ? outcome_records_to_csv(records) : outcome_records_to_json(records);
    if (options.output) {
      write_file_atomic(*options.output, text);
    } else {
      out << text;
    }
    return kExitOk;
  });
}

} // namespace dmriqc
