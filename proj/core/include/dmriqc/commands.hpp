#pragma once

#include "dmriqc/diagnostics.hpp"
#include "dmriqc/service.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace dmriqc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;

/// Settings as given by one source; unset fields fall through to the next.
struct OptionLayer {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> ledger;
  std::optional<std::filesystem::path> thresholds;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> token;
  std::optional<double> lease_minutes;
  std::optional<std::string> format;
};

struct ResolvedOptions {
  std::optional<std::filesystem::path> manifest;
  /// Defaults to {output_dir}/ledger.jsonl once the manifest is known.
  std::optional<std::filesystem::path> ledger;
  std::optional<std::filesystem::path> thresholds;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> token;
  double lease_minutes = 15.0;
  ReportFormat format = ReportFormat::Records;
  bool force = false;
  std::optional<std::filesystem::path> output;
};

using EnvLookup = std::function<std::optional<std::string>(const char *)>;

auto process_env(const char *name) -> std::optional<std::string>;

/// Environment variables: DMRIQC_MANIFEST, DMRIQC_LEDGER, DMRIQC_THRESHOLDS,
/// DMRIQC_HOST, DMRIQC_PORT, DMRIQC_TOKEN, DMRIQC_LEASE_MINUTES,
/// DMRIQC_FORMAT. Throws InvalidArgument on malformed values.
auto options_from_env(const EnvLookup &env) -> OptionLayer;
/// Keys mirror the long flag names ("manifest", "ledger", "thresholds",
/// "host", "port", "token", "lease_minutes", "format"). Relative paths resolve
/// against the config file's directory. Throws InvalidArgument.
auto options_from_config(const std::filesystem::path &path) -> OptionLayer;

/// flag > env > config > built-in default.
auto resolve_options(const OptionLayer &flags, const OptionLayer &env, const OptionLayer &config)
    -> ResolvedOptions;

/// Manifest, ledger path and thresholds for a command that needs them.
struct Workspace {
  DatasetManifest manifest;
  std::filesystem::path ledger;
  Thresholds thresholds;
};

auto open_workspace(const ResolvedOptions &options) -> Workspace;

auto cmd_ingest(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int;
auto cmd_diagnose(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int;
auto cmd_render(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int;
auto cmd_report(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int;
auto cmd_propagate(const ResolvedOptions &options, std::ostream &out, std::ostream &err) -> int;

/// Runs `body`, mapping dmriqc errors to exit 2 and anything else to exit 1.
auto guarded(std::ostream &err, const std::function<int()> &body) -> int;

} // namespace dmriqc
