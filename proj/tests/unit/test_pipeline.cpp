#include "dmriqc/io.hpp"
#include "dmriqc/pipeline.hpp"
#include "fixture.hpp"

#include <doctest.h>

using namespace dmriqc;
namespace fs = std::filesystem;

namespace {

struct Prepared {
  testing::TempDir dir;
  DatasetManifest manifest;

  Prepared() : manifest((testing::write_seeded_dataset(dir.path(), true, {"scan01"}), load_manifest(dir / "manifest.json"))) {
    manifest.scans.resize(1);
  }
  [[nodiscard]] auto scan() const -> const ScanRecord & { return manifest.scans.front(); }
};

auto run_all(const Prepared &p, bool force) -> StepOutcome {
  StepOutcome total;
  for (const auto &node : p.manifest.graph.nodes()) {
    for (auto step : {diagnose_node(p.manifest, p.scan(), node, Thresholds{}, force),
                      render_node(p.manifest, p.scan(), node, force)}) {
      total.written += step.written;
      total.skipped += step.skipped;
    }
  }
  return total;
}

// Every produced file, relative path -> bytes.
auto snapshot(const fs::path &root) -> std::map<std::string, std::vector<std::uint8_t>> {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "ledger.jsonl") {
      out[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
    }
  }
  return out;
}

auto find_result(const NodeDiagnostics &d, const std::string &name) -> const DiagnosticResult * {
  for (const auto &r : d.results) {
    if (r.check_name == name) return &r;
  }
  return nullptr;
}

} // namespace

TEST_CASE("paths and asset names") {
  CHECK(qc_bundle_path("/o", "scan01", "PreQual") == fs::path("/o/scan01/scan01_PreQual.qc.json"));
  CHECK(render_stamp_path("/o", "s", "n") == fs::path("/o/s/s_n.render.json"));
  CHECK(panel_path("/o", "s", "n", "a") == fs::path("/o/s/s_n_a.png"));
  const auto g = testing::fixture_graph();
  CHECK(node_assets(g.at("BRAID")) == std::vector<std::string>{"montage-fa_mni", "montage-md_mni"});
  CHECK(node_assets(g.at("Tractseg")) ==
        std::vector<std::string>{"bundle-AF_right", "bundle-ATR_left", "bundle-CC_5"});
}

TEST_CASE("diagnose and render every node, then skip when up to date") {
  Prepared p;
  const auto first = run_all(p, false);
  CHECK(first.written > 0);
  CHECK(first.skipped == 0);
  for (const auto &node : p.manifest.graph.nodes()) {
    if (!node.checks.empty()) CHECK_MESSAGE(fs::exists(qc_bundle_path(p.manifest.output_dir, "scan01", node.name)), node.name);
    for (const auto &a : node_assets(node)) {
      CHECK_MESSAGE(fs::exists(panel_path(p.manifest.output_dir, "scan01", node.name, a)), a);
    }
  }
  const auto before = snapshot(p.manifest.output_dir);
  const auto second = run_all(p, false);
  CHECK(second.written == 0);
  CHECK(second.skipped == first.written);
  CHECK(snapshot(p.manifest.output_dir) == before);
  // Forced reruns rewrite identical bytes.
  CHECK(run_all(p, true).written == first.written);
  CHECK(snapshot(p.manifest.output_dir) == before);
}

TEST_CASE("two independent runs produce byte-identical outputs") {
  Prepared a, b;
  run_all(a, false);
  run_all(b, false);
  const auto sa = snapshot(a.manifest.output_dir);
  const auto sb = snapshot(b.manifest.output_dir);
  REQUIRE(sa.size() == sb.size());
  for (const auto &[name, bytes] : sa) {
    CHECK_MESSAGE(sb.at(name) == bytes, name);
  }
}

TEST_CASE("seeded artifacts satisfy the checks") {
  Prepared p;
  const auto &g = p.manifest.graph;
  const auto pq = run_node_diagnostics(p.scan(), g.at("PreQual"));
  CHECK(pq.results.size() == 5);
  for (const auto &r : pq.results) CHECK_MESSAGE(r.flag != Flag::Fail, r.check_name << ": " << r.details);
  const auto ts = run_node_diagnostics(p.scan(), g.at("Tractseg"));
  CHECK(ts.units.size() == 3);
  for (const auto &[unit, results] : ts.units) CHECK_MESSAGE(results.front().flag == Flag::Ok, unit);
  CHECK(pq.inputs.count("dwi"));
  CHECK(ts.inputs.count("tck/AF_right"));
  CHECK(node_diagnostics_from_json(node_diagnostics_to_json(pq)) == pq);
}

TEST_CASE("a check whose input is unreadable becomes a Fail result") {
  Prepared p;
  write_file_atomic(*p.scan().artifact("PreQual", "motion"), std::string_view("0 0 0 0 0 nope\n"));
  const auto d = run_node_diagnostics(p.scan(), p.manifest.graph.at("PreQual"));
  const auto *motion = find_result(d, "motion");
  REQUIRE(motion);
  CHECK(motion->flag == Flag::Fail);
  CHECK(motion->details.find("MalformedNumber") != std::string::npos);
  // The other checks still ran.
  CHECK(find_result(d, "chi_square")->flag != Flag::Fail);
}

TEST_CASE("changing an input invalidates the bundle") {
  Prepared p;
  const auto &node = p.manifest.graph.at("Connectome");
  CHECK(diagnose_node(p.manifest, p.scan(), node, {}, false).written == 1);
  CHECK(diagnose_node(p.manifest, p.scan(), node, {}, false).written == 0);
  auto m = read_matrix_csv(*p.scan().artifact("Connectome", "nos"));
  m(0, 1) += 1.0;
  write_matrix_csv(m, *p.scan().artifact("Connectome", "nos"));
  CHECK(diagnose_node(p.manifest, p.scan(), node, {}, false).written == 1);
  const auto loaded = load_node_diagnostics(qc_bundle_path(p.manifest.output_dir, "scan01", "Connectome"));
  REQUIRE(loaded);
  CHECK(loaded->results.front().flag == Flag::Fail);
  // New thresholds also invalidate.
  Thresholds t;
  t.version = "2";
  CHECK(diagnose_node(p.manifest, p.scan(), node, t, false).written == 1);
  CHECK(render_node(p.manifest, p.scan(), node, false).written == 2);
  m(0, 1) += 1.0;
  write_matrix_csv(m, *p.scan().artifact("Connectome", "nos"));
  CHECK(render_node(p.manifest, p.scan(), node, false).written == 2);
}

TEST_CASE("corrupt bundle files are reported") {
  testing::TempDir dir;
  write_file_atomic(dir / "x.qc.json", std::string_view("{not json"));
  CHECK(testing::code_of([&] { load_node_diagnostics(dir / "x.qc.json"); }) == ErrorCode::SchemaViolation);
  CHECK_FALSE(load_node_diagnostics(dir / "none.qc.json").has_value());
}
