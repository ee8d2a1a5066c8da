#include "fixture.hpp"

#include "dmriqc/diagnostics.hpp"
#include "dmriqc/io.hpp"
#include "dmriqc/phantom.hpp"
#include "dmriqc/store.hpp"

#include <cerrno>
#include <cmath>
#include <stdexcept>

#include <fcntl.h>
#include <spawn.h>
#include <stdlib.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace dmriqc::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir(const std::string &tag) {
  auto pattern = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed for " + pattern);
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

auto ts(std::int64_t seconds) -> Timestamp {
  return Timestamp{std::chrono::seconds(1'700'000'000 + seconds)};
}

auto fixture_nodes() -> std::vector<PipelineNode> {
  auto nodes = default_pipeline_nodes();
  for (auto &n : nodes) {
    if (n.name == "Tractseg") n.units = kFixtureUnits;
  }
  return nodes;
}

auto fixture_graph() -> DependencyGraph { return build_graph(fixture_nodes()); }

namespace {

struct ScanRow {
  const char *subject;
  const char *session;
  const char *scan;
  // PreQual, SLANT-UNesT, FreeWater, TensorAtlas, AF_right, ATR_left, CC_5,
  // BRAID, Connectome. P pass, F fail, N not run, - unrated.
  const char *verdicts;
};

// scan10's PreQual and BRAID entries are overridden below.
constexpr ScanRow kRows[] = {
    {"sub01", "ses01", "scan01", "PPPPPPPPP"},
    {"sub01", "ses01", "scan02", "FPPPPPPPP"},
    {"sub01", "ses02", "scan03", "PFPPPPPFP"},
    {"sub02", "ses01", "scan04", "PPFFFPPPF"},
    {"sub02", "ses02", "scan05", "PPNPPNPPP"},
    {"sub02", "ses02", "scan06", "PPPFPPFPP"},
    {"sub03", "ses01", "scan07", "PPPP-PP-P"},
    {"sub04", "ses01", "scan08", "NPFPPPPPF"},
    {"sub04", "ses02", "scan09", "P-PPPPPPP"},
    {"sub05", "ses01", "scan10", "xPPPPPPxP"},
};

struct Column {
  const char *node;
  const char *unit;
};

constexpr Column kColumns[] = {
    {"PreQual", nullptr},  {"SLANT-UNesT", nullptr}, {"FreeWater", nullptr},
    {"TensorAtlas", nullptr}, {"Tractseg", "AF_right"}, {"Tractseg", "ATR_left"},
    {"Tractseg", "CC_5"}, {"BRAID", nullptr},       {"Connectome", nullptr},
};

auto make_verdict(const ScanRow &row, const Column &col, VerdictStatus status, std::int64_t t,
                  std::string uid) -> QcVerdict {
  QcVerdict v;
  v.entity = {row.subject, row.session, row.scan};
  v.node = col.node;
  if (col.unit) v.unit = col.unit;
  v.status = status;
  v.rater_id = "rater1";
  v.timestamp = ts(t);
  v.verdict_uid = std::move(uid);
  return v;
}

} // namespace

auto seeded_entities() -> std::vector<EntityRef> {
  std::vector<EntityRef> out;
  for (const auto &r : kRows) out.push_back({r.subject, r.session, r.scan});
  return out;
}

auto seeded_ledger() -> std::vector<QcVerdict> {
  std::vector<QcVerdict> out;
  std::int64_t t = 1000;
  for (const auto &row : kRows) {
    for (std::size_t c = 0; c < std::size(kColumns); ++c) {
      const char code = row.verdicts[c];
      if (code == '-' || code == 'x') continue;
      const auto status = code == 'P'   ? VerdictStatus::Pass
                          : code == 'F' ? VerdictStatus::Fail
                                        : VerdictStatus::NotRun;
      std::string uid = std::string(row.scan) + "-" + kColumns[c].node;
      if (kColumns[c].unit) uid += std::string("-") + kColumns[c].unit;
      out.push_back(make_verdict(row, kColumns[c], status, t++, uid));
    }
  }
  const auto &s10 = kRows[9];
  // Later timestamp wins: PreQual ends up Pass.
  out.push_back(make_verdict(s10, kColumns[0], VerdictStatus::Pass, 200, "s10-pq-2"));
  out.push_back(make_verdict(s10, kColumns[0], VerdictStatus::Fail, 100, "s10-pq-1"));
  // Equal timestamps: the greater uid wins, so BRAID ends up Fail.
  out.push_back(make_verdict(s10, kColumns[7], VerdictStatus::Fail, 300, "b"));
  out.push_back(make_verdict(s10, kColumns[7], VerdictStatus::Pass, 300, "a"));
  return out;
}

auto seeded_oracle() -> std::vector<OracleRow> {
  return {
      {"PreQual", std::nullopt, {8, 2, 0, 0, 0}},
      {"SLANT-UNesT", std::nullopt, {8, 1, 0, 0, 1}},
      {"FreeWater", std::nullopt, {6, 2, 1, 1, 0}},
      {"TensorAtlas", std::nullopt, {4, 2, 3, 0, 1}},
      {"Tractseg", std::nullopt, {2, 1, 3, 2, 2}},
      {"Tractseg", std::string("AF_right"), {3, 0, 4, 1, 2}},
      {"Tractseg", std::string("ATR_left"), {3, 1, 5, 0, 1}},
      {"Tractseg", std::string("CC_5"), {4, 0, 4, 1, 1}},
      {"BRAID", std::nullopt, {2, 1, 4, 1, 2}},
      {"Connectome", std::nullopt, {5, 1, 2, 1, 1}},
  };
}

auto write_scan_artifacts(const fs::path &root, const std::string &scan, std::uint64_t seed) -> json {
  const auto rel = fs::path("data") / scan;
  const auto dir = root / rel;
  fs::create_directories(dir);
  auto path = [&](const std::string &name) { return (rel / name).generic_string(); };

  PhantomSpec spec;
  spec.dims = {16, 16, 12};
  spec.shells = {{0.0, 1}, {1000.0, 30}};
  spec.noise_sigma = 2.0;
  spec.seed = seed;
  const auto ph = generate_phantom(spec);
  const auto &g = ph.series.gradients();
  const auto dims = ph.series.dims();
  const auto vox = ph.series.voxel_size();

  write_nifti(volume_from_series(ph.series), dir / "dwi.nii.gz");
  write_file_atomic(dir / "dwi.bval", format_bvals(g));
  write_file_atomic(dir / "dwi.bvec", format_bvecs(g));

  MotionTrace motion;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = static_cast<double>(i);
    motion.translation_mm.push_back({0.1 * std::sin(d), 0.05 * d / static_cast<double>(g.size()), 0.0});
    motion.rotation_deg.push_back({0.02 * std::cos(d), 0.0, 0.01});
  }
  write_file_atomic(dir / "motion.txt", format_motion_trace(motion));

  OutlierMap outliers{g.size(), dims.z, std::vector<std::uint8_t>(g.size() * dims.z, 0)};
  outliers.set(3, 0, true);
  write_file_atomic(dir / "outliers.txt", format_outlier_map(outliers));

  const Mask all(dims, 1);
  const auto maps = scalar_maps(ph.truth, all, vox);
  Grid3<double> fa_fw = maps.fa;
  Mask nonwm(dims, 0);
  Grid3<double> labels(dims, 0.0);
  Grid3<double> t1(dims, 100.0);
  for (std::size_t k = 0; k < dims.z; ++k) {
    for (std::size_t j = 0; j < dims.y; ++j) {
      for (std::size_t i = 0; i < dims.x; ++i) {
        const bool wm = ph.tissue(i, j, k) != 0;
        if (wm) {
          fa_fw(i, j, k) = std::min(1.0, maps.fa(i, j, k) * 1.1);
          labels(i, j, k) = 1.0 + static_cast<double>(3 * i / dims.x);
          t1(i, j, k) = 300.0;
        } else {
          nonwm(i, j, k) = 1;
        }
      }
    }
  }
  auto grid_of = [](const Mask &m) {
    Grid3<double> out(m.dims());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
    return out;
  };
  write_nifti(volume_from_grid(maps.fa, vox), dir / "fa.nii.gz");
  write_nifti(volume_from_grid(fa_fw, vox), dir / "fa_fw.nii.gz");
  write_nifti(volume_from_grid(grid_of(ph.tissue), vox), dir / "wm_mask.nii.gz");
  write_nifti(volume_from_grid(grid_of(nonwm), vox), dir / "nonwm_mask.nii.gz");
  write_nifti(volume_from_grid(labels, vox), dir / "labels.nii.gz");
  write_nifti(volume_from_grid(grid_of(all), vox), dir / "brain_mask.nii.gz");
  write_nifti(volume_from_grid(t1, vox), dir / "t1.nii");
  write_nifti(volume_from_grid(labels, vox), dir / "seg.nii");
  write_nifti(volume_from_grid(maps.fa, vox), dir / "fa_mni.nii.gz");
  write_nifti(volume_from_grid(maps.md, vox), dir / "md_mni.nii.gz");

  json tck = json::object();
  for (std::size_t u = 0; u < kFixtureUnits.size(); ++u) {
    std::vector<Streamline> lines;
    for (std::size_t s = 0; s < 80; ++s) {
      Streamline sl;
      const double y = 2.0 + static_cast<double>(u) * 4.0 + 0.02 * static_cast<double>(s);
      for (std::size_t p = 0; p < 30; ++p) {
        sl.points.push_back({0.5 * static_cast<double>(p), y, 6.0 + 0.01 * static_cast<double>(s)});
      }
      lines.push_back(std::move(sl));
    }
    const auto name = kFixtureUnits[u] + ".tck";
    write_tck(lines, dir / name);
    tck[kFixtureUnits[u]] = path(name);
  }

  constexpr std::size_t n = 8;
  Matrix nos(n, n), fam(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto d = static_cast<double>(r > c ? r - c : c - r);
      nos(r, c) = r == c ? 500.0 : 100.0 / (1.0 + d);
      fam(r, c) = 0.45 + 0.01 * std::cos(static_cast<double>(r + c));
    }
  }
  write_matrix_csv(nos, dir / "nos.csv");
  write_matrix_csv(fam, dir / "fa_matrix.csv");

  return {
      {"PreQual",
       {{"dwi", path("dwi.nii.gz")},
        {"bval", path("dwi.bval")},
        {"bvec", path("dwi.bvec")},
        {"motion", path("motion.txt")},
        {"outliers", path("outliers.txt")}}},
      {"SLANT-UNesT", {{"t1", path("t1.nii")}, {"seg", path("seg.nii")}}},
      {"FreeWater",
       {{"fa", path("fa.nii.gz")},
        {"fa_fw", path("fa_fw.nii.gz")},
        {"wm_mask", path("wm_mask.nii.gz")},
        {"nonwm_mask", path("nonwm_mask.nii.gz")}}},
      {"TensorAtlas",
       {{"fa", path("fa.nii.gz")}, {"labels", path("labels.nii.gz")}, {"brain_mask", path("brain_mask.nii.gz")}}},
      {"Tractseg", {{"tck", tck}}},
      {"BRAID", {{"fa_mni", path("fa_mni.nii.gz")}, {"md_mni", path("md_mni.nii.gz")}}},
      {"Connectome", {{"nos", path("nos.csv")}, {"fa_matrix", path("fa_matrix.csv")}}},
  };
}

auto write_seeded_dataset(const fs::path &dir, bool artifacts, std::vector<std::string> artifact_scans)
    -> SeededDataset {
  fs::create_directories(dir);
  write_file_atomic(dir / "graph.json", graph_to_json(fixture_graph()).dump(2) + "\n");

  json subjects = json::array();
  std::uint64_t seed = 1;
  for (const auto &row : kRows) {
    json *subject = nullptr;
    for (auto &s : subjects) {
      if (s["id"] == row.subject) subject = &s;
    }
    if (!subject) {
      subjects.push_back({{"id", row.subject}, {"sessions", json::array()}});
      subject = &subjects.back();
    }
    json *session = nullptr;
    for (auto &s : (*subject)["sessions"]) {
      if (s["id"] == row.session) session = &s;
    }
    if (!session) {
      (*subject)["sessions"].push_back({{"id", row.session}, {"scans", json::array()}});
      session = &(*subject)["sessions"].back();
    }
    json scan = {{"id", row.scan}, {"artifacts", json::object()}};
    const bool wanted = artifact_scans.empty() ||
                        std::find(artifact_scans.begin(), artifact_scans.end(), row.scan) != artifact_scans.end();
    if (artifacts && wanted) scan["artifacts"] = write_scan_artifacts(dir, row.scan, seed);
    ++seed;
    (*session)["scans"].push_back(std::move(scan));
  }
  const json manifest = {{"version", 1}, {"graph", "graph.json"}, {"output_dir", "qc"}, {"subjects", subjects}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  SeededDataset out{dir / "manifest.json", dir / "qc" / "ledger.jsonl", dir / "qc"};
  for (const auto &v : seeded_ledger()) append_verdict(out.ledger, v);
  return out;
}

auto spawn_process(const std::vector<std::string> &argv, const std::map<std::string, std::string> &env,
                   const fs::path &dir) -> Child {
  std::vector<std::string> env_strings;
  for (char **e = environ; *e; ++e) {
    if (std::string_view(*e).rfind("DMRIQC_", 0) != 0) env_strings.emplace_back(*e);
  }
  for (const auto &[k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char *> envp, args;
  for (auto &s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_copy = argv;
  for (auto &a : argv_copy) args.push_back(a.data());
  args.push_back(nullptr);

  static int counter = 0;
  Child child;
  const auto tag = std::to_string(getpid()) + "-" + std::to_string(counter++);
  child.out = dir / ("child-" + tag + ".out");
  child.err = dir / ("child-" + tag + ".err");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, child.out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, child.err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, args[0], &actions, nullptr, args.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("posix_spawn failed for " + argv.front());
  child.pid = pid;
  return child;
}

auto wait_process(const Child &child) -> int {
  int status = 0;
  while (waitpid(child.pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

auto run_process(const std::vector<std::string> &argv, const std::map<std::string, std::string> &env)
    -> ProcessResult {
  TempDir scratch("dmriqc-proc");
  const auto child = spawn_process(argv, env, scratch.path());
  ProcessResult r;
  r.exit_code = wait_process(child);
  r.out = read_file_text(child.out);
  r.err = read_file_text(child.err);
  return r;
}

} // namespace dmriqc::testing
