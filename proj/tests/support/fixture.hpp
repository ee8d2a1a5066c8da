#pragma once

#include "dmriqc/model.hpp"
#include "dmriqc/propagation.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag = "dmriqc");
  ~TempDir();
  TempDir(const TempDir &) = delete;
  auto operator=(const TempDir &) -> TempDir & = delete;

  [[nodiscard]] auto path() const -> const std::filesystem::path & { return path_; }
  auto operator/(const std::string &rel) const -> std::filesystem::path { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline const std::vector<std::string> kFixtureUnits = {"AF_right", "ATR_left", "CC_5"};

/// Default pipelines with Tractseg cut down to three bundles.
auto fixture_nodes() -> std::vector<PipelineNode>;
auto fixture_graph() -> DependencyGraph;

/// sub01..sub05 with 8 sessions and scans scan01..scan10.
auto seeded_entities() -> std::vector<EntityRef>;
/// The authored verdicts, including a superseded PreQual rating and a
/// same-timestamp tie on scan10.
auto seeded_ledger() -> std::vector<QcVerdict>;

struct OracleRow {
  std::string node;
  std::optional<std::string> unit;
  /// both_passed, dep_passed_outcome_failed, dep_failed_outcome_passed,
  /// both_failed, pending
  std::array<std::size_t, 5> counts;
};

/// Counts worked out by hand from the verdict table in fixture.cpp.
auto seeded_oracle() -> std::vector<OracleRow>;

struct SeededDataset {
  std::filesystem::path manifest;
  std::filesystem::path ledger;
  std::filesystem::path output_dir;
};

/// Writes graph.json, manifest.json and ledger.jsonl under `dir`. With
/// `artifacts`, scans listed in `artifact_scans` (all when empty) also get a
/// full synthetic artifact set.
auto write_seeded_dataset(const std::filesystem::path &dir, bool artifacts = false,
                          std::vector<std::string> artifact_scans = {}) -> SeededDataset;

/// Writes every artifact the fixture graph needs for one scan and returns the
/// manifest "artifacts" object with paths relative to `root`.
auto write_scan_artifacts(const std::filesystem::path &root, const std::string &scan,
                          std::uint64_t seed) -> nlohmann::json;

auto ts(std::int64_t seconds) -> Timestamp;

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// A child started with stdout and stderr redirected to files in `dir`.
struct Child {
  int pid = -1;
  std::filesystem::path out;
  std::filesystem::path err;
};

/// Starts `argv` with the parent environment minus every DMRIQC_* variable,
/// plus `env`. Throws std::runtime_error when the spawn fails.
auto spawn_process(const std::vector<std::string> &argv, const std::map<std::string, std::string> &env,
                   const std::filesystem::path &dir) -> Child;
/// Waits for the child; a signal death maps to 128 + signal.
auto wait_process(const Child &child) -> int;
auto run_process(const std::vector<std::string> &argv, const std::map<std::string, std::string> &env = {})
    -> ProcessResult;

/// Code of the dmriqc::Error thrown by `f`, or nullopt when it returns.
template <class F>
auto code_of(F &&f) -> std::optional<ErrorCode> {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

/// Flip one random bit per call.
inline auto flip_bit(std::vector<std::uint8_t> bytes, std::mt19937_64 &rng) -> std::vector<std::uint8_t> {
  if (bytes.empty()) return bytes;
  std::uniform_int_distribution<std::size_t> pos(0, bytes.size() * 8 - 1);
  const auto bit = pos(rng);
  bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  return bytes;
}

} // namespace dmriqc::testing
