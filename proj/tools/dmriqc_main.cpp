#include "dmriqc/commands.hpp"
#include "dmriqc/error.hpp"
#include "http_server.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

#include <unistd.h>

namespace {

using namespace dmriqc;

auto cmd_serve(const ResolvedOptions &options) -> int {
  return guarded(std::cerr, [&] {
    auto w = open_workspace(options);
    validate_manifest(w.manifest);
    ServiceOptions service;
    service.lease_duration =
        std::chrono::milliseconds(static_cast<std::int64_t>(options.lease_minutes * 60'000.0));
    service.token = options.token;
    QcApi api(std::move(w.manifest), w.ledger, service);
    HttpServer server(api);

    // Signals are taken synchronously on a dedicated thread; stop() is not
    // async-signal-safe.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    const int port = server.bind(options.host, options.port);
    if (port < 0) {
      throw Error(ErrorCode::IoFailure, "cannot bind " + options.host + ":" + std::to_string(options.port));
    }
    std::atomic<bool> signalled{false};
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&set, &sig);
      signalled = true;
      server.stop();
    });
    std::cerr << "listening on http://" << options.host << ":" << port << "\n";
    server.serve();
    // serve() can also return on its own; wake the waiter. A surplus signal
    // stays pending and blocked, which is harmless at exit.
    if (!signalled) kill(getpid(), SIGTERM);
    waiter.join();
    return kExitOk;
  });
}

} // namespace

auto main(int argc, char **argv) -> int {
  CLI::App app{"Hierarchy-aware QC for diffusion MRI pipelines"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> manifest, ledger, thresholds, host, token, format, config, output;
  std::optional<int> port;
  std::optional<double> lease_minutes;
  bool force = false;

  app.add_option("--manifest", manifest, "Dataset manifest (JSON)");
  app.add_option("--ledger", ledger, "Verdict ledger (JSONL); default {output_dir}/ledger.jsonl");
  app.add_option("--thresholds", thresholds, "Diagnostic thresholds (JSON)");
  app.add_option("--config", config, "Config file (JSON) with the same keys as the long flags");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "records"}));
  app.add_option("--output", output, "Write report output to a file instead of stdout");
  app.add_flag("--force", force, "Rebuild outputs even when up to date");

  auto *ingest = app.add_subcommand("ingest", "Validate the manifest and artifact inventory");
  auto *diagnose = app.add_subcommand("diagnose", "Run advisory checks and write QC bundles");
  auto *render = app.add_subcommand("render", "Write deterministic review panels");
  auto *serve = app.add_subcommand("serve", "Start the review service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  serve->add_option("--token", token, "Bearer token required on every request");
  serve->add_option("--lease-minutes", lease_minutes, "Queue lease duration");
  auto *report = app.add_subcommand("report", "Print the aggregate report");
  auto *propagate = app.add_subcommand("propagate", "Print per-item dependency classification");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  auto run = [&]() -> int {
    ResolvedOptions options;
    const int rc = guarded(std::cerr, [&] {
      OptionLayer flags;
      if (manifest) flags.manifest = *manifest;
      if (ledger) flags.ledger = *ledger;
      if (thresholds) flags.thresholds = *thresholds;
      flags.host = host;
      flags.port = port;
      flags.token = token;
      flags.lease_minutes = lease_minutes;
      flags.format = format;
      const auto env = options_from_env(process_env);
      OptionLayer file;
      if (!config) config = process_env("DMRIQC_CONFIG");
      if (config) file = options_from_config(*config);
      options = resolve_options(flags, env, file);
      options.force = force;
      if (output) options.output = *output;
      return kExitOk;
    });
    if (rc != kExitOk) return rc;
    if (ingest->parsed()) return cmd_ingest(options, std::cout, std::cerr);
    if (diagnose->parsed()) return cmd_diagnose(options, std::cout, std::cerr);
    if (render->parsed()) return cmd_render(options, std::cout, std::cerr);
    if (serve->parsed()) return cmd_serve(options);
    if (report->parsed()) return cmd_report(options, std::cout, std::cerr);
    if (propagate->parsed()) return cmd_propagate(options, std::cout, std::cerr);
    return kExitInternal;
  };
  const int rc = run();
  std::cout.flush();
  return rc;
}
