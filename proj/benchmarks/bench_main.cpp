#include "dmriqc/diagnostics.hpp"
#include "dmriqc/phantom.hpp"
#include "dmriqc/propagation.hpp"

#include <benchmark/benchmark.h>

using namespace dmriqc;

namespace {

auto phantom(std::size_t n) -> Phantom {
  PhantomSpec spec;
  spec.dims = {n, n, n};
  spec.shells = {{0.0, 1}, {1000.0, 30}};
  return generate_phantom(spec);
}

auto BM_TensorFit(benchmark::State &state) -> void {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ph = phantom(n);
  const Mask all(ph.series.dims(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_tensor(ph.series, all));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_TensorFit)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

auto BM_PermutationSweep(benchmark::State &state) -> void {
  const auto ph = phantom(32);
  for (auto _ : state) benchmark::DoNotOptimize(check_bvec_permutation(ph.series, ph.tissue));
}
BENCHMARK(BM_PermutationSweep)->Unit(benchmark::kMillisecond);

// Chain graph of length 7 over many scans, every node rated.
auto BM_Aggregate(benchmark::State &state) -> void {
  const auto scans = static_cast<std::size_t>(state.range(0));
  std::vector<PipelineNode> defs;
  for (int i = 0; i < 7; ++i) {
    PipelineNode node;
    node.name = "n" + std::to_string(i);
    if (i > 0) node.deps = {"n" + std::to_string(i - 1)};
    defs.push_back(node);
  }
  const auto graph = build_graph(defs);
  std::vector<EntityRef> entities;
  std::vector<QcVerdict> verdicts;
  for (std::size_t s = 0; s < scans; ++s) {
    entities.push_back({"sub" + std::to_string(s / 4), "ses" + std::to_string(s / 2), "scan" + std::to_string(s)});
    for (const auto &node : defs) {
      QcVerdict v;
      v.entity = entities.back();
      v.node = node.name;
      v.status = (s * 7 + node.name.size()) % 5 == 0 ? VerdictStatus::Fail : VerdictStatus::Pass;
      v.rater_id = "r";
      v.verdict_uid = v.entity.scan_id + node.name;
      verdicts.push_back(v);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(graph, verdicts, entities));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * verdicts.size()));
}
BENCHMARK(BM_Aggregate)->Arg(100)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
