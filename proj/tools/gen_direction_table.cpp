// Regenerates core/src/direction_table.cpp from the repulsion optimiser.
//   gen_direction_table > core/src/direction_table.cpp
#include "dmriqc/phantom.hpp"

#include <cstdio>

int main() {
  const std::size_t counts[] = {6, 12, 15, 20, 30, 32, 45, 60, 64};
  std::printf("// Generated by tools/gen_direction_table.cpp. Do not edit.\n");
  std::printf("#include \"dmriqc/phantom.hpp\"\n\n#include <algorithm>\n\nnamespace dmriqc {\n\nnamespace {\n\n");
  std::printf("constexpr std::size_t kCounts[] = {");
  for (std::size_t i = 0; i < std::size(counts); ++i) std::printf("%s%zu", i ? ", " : "", counts[i]);
  std::printf("};\n\n");
  for (auto n : counts) {
    auto dirs = dmriqc::optimize_repulsion(n);
    std::printf("constexpr double kDirs%zu[][3] = {\n", n);
    for (const auto &d : dirs) std::printf("    {%.17g, %.17g, %.17g},\n", d[0], d[1], d[2]);
    std::printf("};\n\n");
  }
  std::printf("template <std::size_t N> auto to_vec(const double (&t)[N][3]) -> std::vector<Vec3> {\n"
              "  std::vector<Vec3> out;\n  out.reserve(N);\n"
              "  for (const auto &r : t) out.push_back({r[0], r[1], r[2]});\n  return out;\n}\n\n");
  std::printf("} // namespace\n\n");
  std::printf("auto shipped_direction_counts() -> std::span<const std::size_t> { return kCounts; }\n\n");
  std::printf("auto shipped_directions(std::size_t count) -> std::vector<Vec3> {\n  switch (count) {\n");
  for (auto n : counts) std::printf("  case %zu: return to_vec(kDirs%zu);\n", n, n);
  std::printf("  default: return {};\n  }\n}\n\n} // namespace dmriqc\n");
  return 0;
}
