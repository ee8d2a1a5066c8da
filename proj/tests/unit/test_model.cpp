#include "dmriqc/model.hpp"
#include "fixture.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

using namespace dmriqc;

namespace {

auto node(std::string name, std::vector<std::string> deps = {}) -> PipelineNode {
  PipelineNode n;
  n.name = std::move(name);
  n.deps = std::move(deps);
  return n;
}

auto code_of(const std::function<void()> &f) -> std::optional<ErrorCode> {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

// Random DAG: node i may only depend on nodes with a smaller index, then the
// definitions are shuffled so build order is not a hint.
auto random_dag(std::mt19937_64 &rng, std::size_t n) -> std::vector<PipelineNode> {
  std::vector<PipelineNode> defs;
  std::bernoulli_distribution edge(0.3);
  for (std::size_t i = 0; i < n; ++i) {
    auto d = node("n" + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j) {
      if (edge(rng)) d.deps.push_back("n" + std::to_string(j));
    }
    defs.push_back(std::move(d));
  }
  std::shuffle(defs.begin(), defs.end(), rng);
  return defs;
}

auto closure_oracle(const std::vector<PipelineNode> &defs, const std::string &start) -> std::set<std::string> {
  std::set<std::string> seen;
  std::vector<std::string> stack{start};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    auto it = std::find_if(defs.begin(), defs.end(), [&](const PipelineNode &n) { return n.name == cur; });
    for (const auto &d : it->deps) {
      if (seen.insert(d).second) stack.push_back(d);
    }
  }
  return seen;
}

} // namespace

TEST_CASE("default pipelines form the deployed hierarchy") {
  const auto g = build_graph(default_pipeline_nodes());
  CHECK(g.size() == 7);
  CHECK(g.roots() == std::vector<std::string>{"PreQual", "SLANT-UNesT"});
  CHECK(ancestors(g, "Tractseg") == std::set<std::string>{"PreQual", "SLANT-UNesT", "TensorAtlas"});
  CHECK(ancestors(g, "FreeWater") == std::set<std::string>{"PreQual"});
  CHECK(g.at("Tractseg").per_unit());
  CHECK(g.at("Tractseg").units.size() == 72);
  CHECK_FALSE(g.at("PreQual").per_unit());
  for (const auto &n : g.nodes()) CHECK_FALSE(n.criteria.empty());
}

TEST_CASE("the bundle list has 72 distinct safe names") {
  auto b = tractseg_bundles();
  CHECK(b.size() == 72);
  std::set<std::string> unique(b.begin(), b.end());
  CHECK(unique.size() == 72);
  for (const auto &name : b) CHECK(is_safe_identifier(name));
}

TEST_CASE("graph construction rejects malformed definitions") {
  CHECK(code_of([] { build_graph({}); }) == ErrorCode::InvalidGraph);
  CHECK(code_of([] { build_graph({node("a"), node("a")}); }) == ErrorCode::DuplicateNode);
  CHECK(code_of([] { build_graph({node("a", {"ghost"})}); }) == ErrorCode::UnknownDependency);
  CHECK(code_of([] { build_graph({node("a", {"b"}), node("b", {"c"}), node("c", {"a"})}); }) ==
        ErrorCode::CycleDetected);
  CHECK(code_of([] { build_graph({node("a", {"a"})}); }) == ErrorCode::CycleDetected);
  auto dup_units = node("t");
  dup_units.units = {"x", "x"};
  CHECK(code_of([&] { build_graph({dup_units}); }).has_value());
  const auto g = build_graph({node("a")});
  CHECK(code_of([&] { (void)g.at("missing"); }) == ErrorCode::UnknownNode);
}

TEST_CASE("a cycle error names the nodes on the cycle") {
  try {
    build_graph({node("root"), node("x", {"root", "z"}), node("y", {"x"}), node("z", {"y"})});
    FAIL("expected a cycle");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::CycleDetected);
    const std::string msg = e.what();
    CHECK(msg.find('x') != std::string::npos);
    CHECK(msg.find('y') != std::string::npos);
    CHECK(msg.find('z') != std::string::npos);
  }
}

TEST_CASE("property: topological order and ancestor closure on random DAGs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng() % 12;
    auto defs = random_dag(rng, n);
    const auto g = build_graph(defs);
    REQUIRE(g.size() == n);
    for (const auto &nd : g.nodes()) {
      for (const auto &d : nd.deps) CHECK(g.index_of(d) < g.index_of(nd.name));
      const auto expect = closure_oracle(defs, nd.name);
      CHECK(ancestors(g, nd.name) == expect);
      const auto &ordered = g.ancestors_ordered(nd.name);
      CHECK(std::is_sorted(ordered.begin(), ordered.end(),
                           [&](const auto &a, const auto &b) { return g.index_of(a) < g.index_of(b); }));
    }
    // Building from a different declaration order gives the same order.
    std::shuffle(defs.begin(), defs.end(), rng);
    const auto g2 = build_graph(defs);
    for (std::size_t i = 0; i < n; ++i) CHECK(g.nodes()[i].name == g2.nodes()[i].name);
  }
}

TEST_CASE("timestamps round-trip with millisecond precision") {
  const auto t = parse_timestamp("2024-05-01T12:34:56.789Z");
  CHECK(format_timestamp(t) == "2024-05-01T12:34:56.789Z");
  CHECK(format_timestamp(parse_timestamp("1999-12-31T23:59:59Z")) == "1999-12-31T23:59:59.000Z");
  CHECK(format_timestamp(parse_timestamp("2024-02-29T00:00:00.123456Z")) == "2024-02-29T00:00:00.123Z");
  for (const char *bad : {"", "2024-05-01", "2024-05-01T12:34:56", "2024-13-01T00:00:00Z",
                          "2024-05-01T12:34:56.Z", "2024-05-01 12:34:56Z", "2023-02-29T00:00:00Z",
                          "2024-04-31T00:00:00Z"}) {
    CHECK_MESSAGE(code_of([&] { parse_timestamp(bad); }) == ErrorCode::InvalidArgument, bad);
  }
}

TEST_CASE("verdict JSON round-trips and rejects bad fields") {
  QcVerdict v;
  v.entity = {"sub01", "ses01", "scan01"};
  v.node = "Tractseg";
  v.unit = "CC_5";
  v.status = VerdictStatus::NotRun;
  v.rater_id = "r";
  v.timestamp = testing::ts(5);
  v.checklist = {{"Bundle is not empty", true}, {"x", false}};
  v.comment = "thin";
  v.verdict_uid = "u1";
  CHECK(verdict_from_json(verdict_to_json(v)) == v);
  CHECK(verdict_to_json(v)["status"] == "not_run");

  auto doc = verdict_to_json(v);
  doc["status"] = "maybe";
  CHECK(code_of([&] { verdict_from_json(doc); }) == ErrorCode::SchemaViolation);
  doc = verdict_to_json(v);
  doc.erase("rater");
  CHECK(code_of([&] { verdict_from_json(doc); }) == ErrorCode::SchemaViolation);
  doc = verdict_to_json(v);
  doc["checklist"]["x"] = 1;
  CHECK(code_of([&] { verdict_from_json(doc); }) == ErrorCode::SchemaViolation);
  doc = verdict_to_json(v);
  doc["timestamp"] = "yesterday";
  CHECK(code_of([&] { verdict_from_json(doc); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("latest verdict: newest timestamp, then greatest uid") {
  QcVerdict a;
  a.entity = {"s", "e", "c"};
  a.node = "PreQual";
  a.rater_id = "r";
  a.status = VerdictStatus::Fail;
  a.timestamp = testing::ts(10);
  a.verdict_uid = "z";
  auto b = a;
  b.status = VerdictStatus::Pass;
  b.timestamp = testing::ts(11);
  b.verdict_uid = "a";
  std::vector<QcVerdict> ledger{b, a};
  CHECK(latest_verdicts(ledger).begin()->second.status == VerdictStatus::Pass);
  b.timestamp = a.timestamp;
  ledger = {a, b};
  CHECK(latest_verdicts(ledger).begin()->second.verdict_uid == "z");
  ledger = {b, a};
  CHECK(latest_verdicts(ledger).begin()->second.verdict_uid == "z");
}

TEST_CASE("graph definition JSON round-trips") {
  const auto g = testing::fixture_graph();
  const auto doc = graph_to_json(g);
  const auto g2 = build_graph(parse_graph_definition(doc));
  REQUIRE(g2.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.nodes()[i].name == g2.nodes()[i].name);
    CHECK(g.nodes()[i].deps == g2.nodes()[i].deps);
    CHECK(g.nodes()[i].units == g2.nodes()[i].units);
    CHECK(g.nodes()[i].checks == g2.nodes()[i].checks);
    CHECK(g.nodes()[i].panels == g2.nodes()[i].panels);
  }
  CHECK(doc["nodes"][0].contains("ancestors"));
}

TEST_CASE("graph definition schema errors") {
  using nlohmann::json;
  CHECK(code_of([] { parse_graph_definition(json::object()); }) == ErrorCode::InvalidGraph);
  CHECK(code_of([] { parse_graph_definition(json{{"version", 2}, {"nodes", json::array()}}); }) ==
        ErrorCode::InvalidGraph);
  CHECK(code_of([] { parse_graph_definition(json{{"nodes", {{{"name", "a/b"}}}}}); }) == ErrorCode::InvalidGraph);
  CHECK(code_of([] { parse_graph_definition(json{{"nodes", {{{"name", "a"}, {"deps", "b"}}}}}); }) ==
        ErrorCode::InvalidGraph);
  CHECK(code_of([] { parse_graph_definition(json{{"nodes", {{{"name", "a"}, {"units", {"x y"}}}}}}); }) ==
        ErrorCode::InvalidGraph);
}

TEST_CASE("safe identifiers") {
  CHECK(is_safe_identifier("sub-01_ses.2"));
  for (const char *bad : {"", ".", "..", "a/b", "a b", "a~b", "ü", "a\\b"}) CHECK_FALSE(is_safe_identifier(bad));
}
