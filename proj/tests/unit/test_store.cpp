#include "dmriqc/io.hpp"
#include "dmriqc/store.hpp"
#include "fixture.hpp"

#include <doctest.h>

#include <fstream>
#include <thread>

using namespace dmriqc;
using nlohmann::json;
using testing::code_of;

namespace {

auto scan_doc(std::string id, json artifacts = json::object()) -> json {
  return {{"id", std::move(id)}, {"artifacts", std::move(artifacts)}};
}

auto manifest_doc(std::vector<json> scans) -> json {
  return {{"version", 1},
          {"output_dir", "qc"},
          {"subjects", {{{"id", "sub01"}, {"sessions", {{{"id", "ses01"}, {"scans", scans}}}}}}}};
}

auto sample_verdict(std::int64_t t, std::string uid) -> QcVerdict {
  QcVerdict v;
  v.entity = {"sub01", "ses01", "scan01"};
  v.node = "PreQual";
  v.status = VerdictStatus::Pass;
  v.rater_id = "r1";
  v.timestamp = testing::ts(t);
  v.verdict_uid = std::move(uid);
  return v;
}

} // namespace

TEST_CASE("manifest parses with default pipelines and resolves paths") {
  const auto m = parse_manifest(manifest_doc({scan_doc("scan01", {{"PreQual", {{"dwi", "d/dwi.nii.gz"}}}})}), "/data");
  CHECK(m.graph.size() == 7);
  CHECK(m.output_dir == std::filesystem::path("/data/qc"));
  REQUIRE(m.scans.size() == 1);
  CHECK(m.scans[0].entity.subject_id == "sub01");
  CHECK(m.scans[0].artifact("PreQual", "dwi") == std::filesystem::path("/data/d/dwi.nii.gz"));
  CHECK_FALSE(m.scans[0].artifact("PreQual", "bval").has_value());
  CHECK(m.find_scan("scan01") != nullptr);
  CHECK(m.find_scan("nope") == nullptr);
  CHECK(m.entities().size() == 1);
  const auto round = parse_manifest(manifest_to_json(m), "/elsewhere");
  CHECK(round.scans[0].artifact("PreQual", "dwi") == m.scans[0].artifact("PreQual", "dwi"));
}

TEST_CASE("per-unit artifacts") {
  const auto m = parse_manifest(
      manifest_doc({scan_doc("scan01", {{"Tractseg", {{"tck", {{"AF_left", "t/AF_left.tck"}}}}}})}), "/d");
  CHECK(m.scans[0].unit_artifact("Tractseg", "tck", "AF_left") == std::filesystem::path("/d/t/AF_left.tck"));
  CHECK_FALSE(m.scans[0].unit_artifact("Tractseg", "tck", "CC_1").has_value());
  CHECK(code_of([] {
          parse_manifest(manifest_doc({scan_doc("s", {{"Tractseg", {{"tck", {{"NOT_A_BUNDLE", "x"}}}}}})}), "/d");
        }).has_value());
}

TEST_CASE("manifest schema errors") {
  CHECK(code_of([] { parse_manifest(json::array(), "/"); }) == ErrorCode::SchemaViolation);
  auto doc = manifest_doc({scan_doc("scan01")});
  doc["version"] = 3;
  CHECK(code_of([&] { parse_manifest(doc, "/"); }) == ErrorCode::SchemaViolation);
  doc = manifest_doc({scan_doc("scan01")});
  doc.erase("subjects");
  CHECK(code_of([&] { parse_manifest(doc, "/"); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { parse_manifest(manifest_doc({scan_doc("a/b")}), "/"); }) == ErrorCode::SchemaViolation);
  CHECK(code_of([] { parse_manifest(manifest_doc({scan_doc("x"), scan_doc("x")}), "/"); }) ==
        ErrorCode::DuplicateScanId);
  CHECK(code_of([] { parse_manifest(manifest_doc({scan_doc("x", {{"Ghost", {{"dwi", "a"}}}})}), "/"); }) ==
        ErrorCode::UnknownNodeReference);
  CHECK(code_of([] { parse_manifest(manifest_doc({scan_doc("x", {{"PreQual", {{"dwi", 5}}}})}), "/"); }) ==
        ErrorCode::SchemaViolation);
  CHECK(code_of([] { load_manifest("/nonexistent/manifest.json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("manifest graph reference") {
  testing::TempDir dir;
  write_file_atomic(dir / "g.json", graph_to_json(testing::fixture_graph()).dump());
  auto doc = manifest_doc({scan_doc("scan01")});
  doc["graph"] = "g.json";
  write_file_atomic(dir / "m.json", doc.dump());
  const auto m = load_manifest(dir / "m.json");
  CHECK(m.graph.at("Tractseg").units == testing::kFixtureUnits);
  CHECK(m.graph_path == dir / "g.json");
  write_file_atomic(dir / "g.json", std::string_view(R"({"nodes":[{"name":"a","deps":["a"]}]})"));
  CHECK(code_of([&] { load_manifest(dir / "m.json"); }) == ErrorCode::CycleDetected);
}

TEST_CASE("required artifacts follow checks and panels") {
  const auto g = build_graph(default_pipeline_nodes());
  const auto pq = required_artifacts(g.at("PreQual"));
  for (const char *k : {"dwi", "bval", "bvec", "motion", "outliers"}) CHECK_MESSAGE(pq.global.count(k), k);
  CHECK(pq.per_unit.empty());
  CHECK(required_artifacts(g.at("Tractseg")).per_unit.count("tck"));
  auto bad = g.at("PreQual");
  bad.checks.push_back("telepathy");
  CHECK(code_of([&] { required_artifacts(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("validation names every missing artifact") {
  testing::TempDir dir;
  const auto ds = testing::write_seeded_dataset(dir.path(), true, {"scan01"});
  auto m = load_manifest(ds.manifest);
  // Only scan01 has artifacts; restrict to it.
  m.scans.resize(1);
  CHECK_NOTHROW(validate_manifest(m));
  std::filesystem::remove(dir / "data/scan01/nos.csv");
  try {
    validate_manifest(m);
    FAIL("expected MissingArtifact");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::MissingArtifact);
    CHECK(e.detail().find("scan01") != std::string::npos);
    CHECK(e.detail().find("Connectome") != std::string::npos);
  }
  m.scans[0].artifacts["PreQual"].erase("bval");
  try {
    validate_manifest(m);
  } catch (const Error &e) {
    CHECK(e.detail().find("bval") != std::string::npos);
    CHECK(e.detail().find("nos") != std::string::npos);
  }
}

TEST_CASE("ledger append and load") {
  testing::TempDir dir;
  const auto path = dir / "qc" / "ledger.jsonl";
  CHECK(load_ledger(path).verdicts.empty());
  append_verdict(path, sample_verdict(1, "a"));
  append_verdict(path, sample_verdict(2, "b"));
  const auto l = load_ledger(path);
  REQUIRE(l.verdicts.size() == 2);
  CHECK(l.verdicts[1] == sample_verdict(2, "b"));
  CHECK(l.warnings.empty());
  const auto text = read_file_text(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);

  auto unsafe = sample_verdict(3, "c");
  unsafe.entity.scan_id = "../x";
  CHECK(code_of([&] { append_verdict(path, unsafe); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("a torn final line is tolerated and repaired on the next append") {
  testing::TempDir dir;
  const auto path = dir / "ledger.jsonl";
  append_verdict(path, sample_verdict(1, "a"));
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"subject":"sub01","ses)";
  }
  auto l = load_ledger(path);
  CHECK(l.verdicts.size() == 1);
  CHECK(l.warnings.size() == 1);
  append_verdict(path, sample_verdict(2, "b"));
  l = load_ledger(path);
  CHECK(l.verdicts.size() == 2);
  CHECK(l.warnings.empty());
}

TEST_CASE("a bad line in the middle is a schema violation with its line number") {
  const auto good = verdict_to_json(sample_verdict(1, "a")).dump();
  try {
    parse_ledger(good + "\n{oops}\n" + good + "\n");
    FAIL("expected SchemaViolation");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    CHECK(e.detail().find('2') != std::string::npos);
  }
  // A complete but invalid final line is not a torn write.
  CHECK(code_of([&] { parse_ledger(good + "\n{oops}\n"); }) == ErrorCode::SchemaViolation);
  CHECK(parse_ledger(good + "\n\n").verdicts.size() == 1);
}

TEST_CASE("concurrent appends never interleave") {
  testing::TempDir dir;
  const auto path = dir / "ledger.jsonl";
  constexpr int kThreads = 8;
  constexpr int kEach = 50;
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        auto v = sample_verdict(i, "t" + std::to_string(t) + "-" + std::to_string(i));
        v.comment = std::string(200, static_cast<char>('a' + t));
        append_verdict(path, v);
      }
    });
  }
  for (auto &th : pool) th.join();
  const auto l = load_ledger(path);
  CHECK(l.warnings.empty());
  CHECK(l.verdicts.size() == kThreads * kEach);
  std::set<std::string> uids;
  for (const auto &v : l.verdicts) uids.insert(v.verdict_uid);
  CHECK(uids.size() == kThreads * kEach);
}
