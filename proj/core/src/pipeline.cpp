#include "dmriqc/pipeline.hpp"

#include "dmriqc/error.hpp"
#include "dmriqc/io.hpp"
#include "dmriqc/render.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace dmriqc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRenderVersion = 1;

auto require(const std::optional<fs::path> &p, const std::string &what) -> const fs::path & {
  if (!p) throw Error(ErrorCode::MissingArtifact, what + " is not listed in the manifest");
  return *p;
}

/// Lazily loaded artifacts of one (scan, node).
class Inputs {
public:
  Inputs(const ScanRecord &scan, const PipelineNode &node) : scan_(scan), node_(node) {}

  auto path(const std::string &kind) -> const fs::path & {
    cache_.emplace(kind, scan_.artifact(node_.name, kind));
    return require(cache_.at(kind), scan_.entity.scan_id + "/" + node_.name + "/" + kind);
  }
  auto unit_path(const std::string &kind, const std::string &unit) const -> fs::path {
    return require(scan_.unit_artifact(node_.name, kind, unit),
                   scan_.entity.scan_id + "/" + node_.name + "/" + kind + "/" + unit);
  }

  auto series() -> const DwiSeries & {
    if (!series_) {
      auto grads = read_gradients(path("bval"), path("bvec"));
      series_ = volume_to_series(read_nifti(path("dwi")), std::move(grads));
    }
    return *series_;
  }
  auto brain() -> const Mask & {
    if (!brain_) brain_ = auto_brain_mask(series());
    return *brain_;
  }
  auto fit() -> const TensorFit & {
    if (!fit_) fit_ = fit_tensor(series(), brain());
    return *fit_;
  }
  auto maps() -> const ScalarMaps & {
    if (!maps_) maps_ = scalar_maps(fit().tensors, fit().mask, series().voxel_size());
    return *maps_;
  }
  auto grid(const std::string &kind) -> Grid3<double> { return volume_to_grid(read_nifti(path(kind))); }
  auto mask(const std::string &kind) -> Mask { return volume_to_mask(read_nifti(path(kind))); }
  auto labels(const std::string &kind) -> Grid3<std::int32_t> { return volume_to_labels(read_nifti(path(kind))); }

private:
  const ScanRecord &scan_;
  const PipelineNode &node_;
  std::map<std::string, std::optional<fs::path>> cache_;
  std::optional<DwiSeries> series_;
  std::optional<Mask> brain_;
  std::optional<TensorFit> fit_;
  std::optional<ScalarMaps> maps_;
};

auto failed(const std::string &name, const Thresholds &t, const std::exception &e) -> DiagnosticResult {
  DiagnosticResult r;
  r.check_name = name;
  r.flag = Flag::Fail;
  r.details = std::string("could not run: ") + e.what();
  r.thresholds_version = t.version;
  return r;
}

struct RangeCheck {
  std::string kind;
  double lo = 0.0;
  double hi = 0.0;
};

auto parse_range(const std::string &check) -> RangeCheck {
  // range:<kind>:<lo>:<hi>
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto c = check.find(':', start);
    parts.push_back(check.substr(start, c == std::string::npos ? std::string::npos : c - start));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  if (parts.size() != 4 || parts[1].empty()) {
    throw Error(ErrorCode::InvalidArgument, "range check must be 'range:<kind>:<lo>:<hi>'");
  }
  RangeCheck r{parts[1]};
  for (auto [s, out] : {std::pair{&parts[2], &r.lo}, std::pair{&parts[3], &r.hi}}) {
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), *out);
    if (ec != std::errc{} || ptr != s->data() + s->size()) {
      throw Error(ErrorCode::InvalidArgument, "range bound '" + *s + "' is not a number");
    }
  }
  return r;
}

auto run_check(const std::string &check, Inputs &in, const Thresholds &t) -> DiagnosticResult {
  if (check == "intensity_decay") return check_intensity_decay(in.series(), t);
  if (check == "motion") return check_motion(read_motion_trace(in.path("motion")), t);
  if (check == "outlier_slices") return check_outlier_slices(read_outlier_map(in.path("outliers")), t);
  if (check == "chi_square") return check_chi_square(in.series(), in.brain(), t);
  if (check == "bvec_permutation") return check_bvec_permutation(in.series(), in.brain(), t);
  if (check == "freewater") {
    return check_freewater(in.grid("fa"), in.grid("fa_fw"), in.mask("wm_mask"), in.mask("nonwm_mask"), t);
  }
  if (check == "overlay_alignment") return check_overlay_alignment(in.grid("fa"), in.labels("labels"), in.mask("brain_mask"), t);
  if (check == "connectome") return check_connectome(read_matrix_csv(in.path("nos")), read_matrix_csv(in.path("fa_matrix")), t);
  if (check.starts_with("range:")) {
    const auto rc = parse_range(check);
    const auto g = in.grid(rc.kind);
    std::vector<double> values;
    for (double v : g.data()) {
      if (std::isfinite(v) && v != 0.0) values.push_back(v);
    }
    return check_range(values, rc.lo, rc.hi, std::nullopt, check, t);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown check '" + check + "'");
}

auto write_json_file(const fs::path &path, const json &doc) -> void { write_file_atomic(path, doc.dump(2) + "\n"); }

auto read_json_file(const fs::path &path) -> std::optional<json> {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    return json::parse(read_file_text(path));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

auto glyph_panel(Inputs &in) -> Image {
  const auto &fit = in.fit();
  const auto &maps = in.maps();
  const auto &d = fit.tensors.dims();
  const auto z = d.z / 2, y = d.y / 2;
  const auto ax = render_tensor_glyphs(fit.tensors, maps, Plane::Axial, z);
  const auto co = render_tensor_glyphs(fit.tensors, maps, Plane::Coronal, y);
  return render_comparison(ax, co, "AXIAL Z=" + std::to_string(z), "CORONAL Y=" + std::to_string(y));
}

auto b0_mean(const DwiSeries &s) -> Grid3<double> {
  Grid3<double> out(s.dims(), 0.0);
  std::size_t n = 0;
  for (std::size_t v = 0; v < s.volumes(); ++v) {
    if (s.gradients().bvals[v] > 10.0) continue;
    const auto vol = s.volume(v);
    for (std::size_t i = 0; i < vol.size(); ++i) out[i] += vol[i];
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::InsufficientDirections, "no b=0 volume to display");
  for (auto &x : out.data()) x /= static_cast<double>(n);
  return out;
}

auto render_panel(const std::string &panel, Inputs &in) -> Image {
  RenderSpec spec;
  RenderSpec fa_spec;
  fa_spec.window = std::array<double, 2>{0.0, 1.0};
  if (panel == "b0_montage") return render_montage(b0_mean(in.series()), spec);
  if (panel == "fa_montage") return render_montage(in.maps().fa, fa_spec);
  if (panel == "tensor_glyphs") return glyph_panel(in);
  if (panel == "seg_overlay") return render_label_overlay(in.grid("t1"), in.labels("seg"), spec);
  if (panel == "atlas_overlay") return render_label_overlay(in.grid("fa"), in.labels("labels"), fa_spec);
  if (panel == "freewater_comparison") {
    return render_comparison(render_montage(in.grid("fa"), fa_spec), render_montage(in.grid("fa_fw"), fa_spec),
                             "ORIGINAL FA", "FREE-WATER CORRECTED FA");
  }
  if (panel == "connectome_nos") return render_connectome(read_matrix_csv(in.path("nos")), ConnectomeWeighting::Nos);
  if (panel == "connectome_fa") return render_connectome(read_matrix_csv(in.path("fa_matrix")), ConnectomeWeighting::Fa);
  if (panel.starts_with("montage:")) return render_montage(in.grid(panel.substr(8)), spec);
  throw Error(ErrorCode::InvalidArgument, "unknown panel '" + panel + "'");
}

} // namespace

auto node_diagnostics_to_json(const NodeDiagnostics &d) -> json {
  json results = json::array();
  for (const auto &r : d.results) results.push_back(diagnostic_to_json(r));
  json units = json::object();
  for (const auto &[unit, rs] : d.units) {
    units[unit] = json::array();
    for (const auto &r : rs) units[unit].push_back(diagnostic_to_json(r));
  }
  return {{"scan", d.scan},       {"node", d.node},     {"diagnostics", results}, {"units", units},
          {"inputs", d.inputs},   {"assets", d.assets}, {"thresholds", d.thresholds}};
}

auto node_diagnostics_from_json(const json &doc) -> NodeDiagnostics {
  NodeDiagnostics d;
  try {
    d.scan = doc.at("scan").get<std::string>();
    d.node = doc.at("node").get<std::string>();
    for (const auto &r : doc.at("diagnostics")) d.results.push_back(diagnostic_from_json(r));
    for (const auto &[unit, rs] : doc.at("units").items()) {
      auto &out = d.units[unit];
      for (const auto &r : rs) out.push_back(diagnostic_from_json(r));
    }
    d.inputs = doc.at("inputs").get<std::map<std::string, std::string>>();
    d.assets = doc.at("assets").get<std::vector<std::string>>();
    d.thresholds = doc.at("thresholds");
  } catch (const json::exception &e) {
    throw Error(ErrorCode::SchemaViolation, std::string("QC bundle: ") + e.what());
  }
  return d;
}

auto qc_bundle_path(const fs::path &output_dir, std::string_view scan, std::string_view node) -> fs::path {
  return output_dir / std::string(scan) / (std::string(scan) + "_" + std::string(node) + ".qc.json");
}

auto render_stamp_path(const fs::path &output_dir, std::string_view scan, std::string_view node) -> fs::path {
  return output_dir / std::string(scan) / (std::string(scan) + "_" + std::string(node) + ".render.json");
}

auto panel_path(const fs::path &output_dir, std::string_view scan, std::string_view node, std::string_view asset)
    -> fs::path {
  return output_dir / std::string(scan) / panel_file_name(scan, node, asset);
}

auto node_assets(const PipelineNode &node) -> std::vector<std::string> {
  std::vector<std::string> out;
  for (const auto &p : node.panels) {
    if (p == "bundle" && node.per_unit()) {
      for (const auto &u : node.units) out.push_back(panel_asset_name(p, u));
    } else {
      out.push_back(panel_asset_name(p));
    }
  }
  return out;
}

auto file_digest(const fs::path &path) -> std::string {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

auto input_digests(const ScanRecord &scan, const PipelineNode &node) -> std::map<std::string, std::string> {
  std::map<std::string, std::string> out;
  const auto req = required_artifacts(node);
  for (const auto &kind : req.global) {
    if (auto p = scan.artifact(node.name, kind); p && fs::is_regular_file(*p)) out[kind] = file_digest(*p);
  }
  for (const auto &kind : req.per_unit) {
    for (const auto &unit : node.units) {
      if (auto p = scan.unit_artifact(node.name, kind, unit); p && fs::is_regular_file(*p)) {
        out[kind + "/" + unit] = file_digest(*p);
      }
    }
  }
  return out;
}

auto run_node_diagnostics(const ScanRecord &scan, const PipelineNode &node, const Thresholds &t) -> NodeDiagnostics {
  NodeDiagnostics d;
  d.scan = scan.entity.scan_id;
  d.node = node.name;
  d.inputs = input_digests(scan, node);
  d.thresholds = thresholds_to_json(t);
  d.assets = node_assets(node);
  Inputs in(scan, node);
  for (const auto &check : node.checks) {
    if (check == "bundle") {
      const auto units = node.per_unit() ? node.units : std::vector<std::string>{""};
      for (const auto &u : units) {
        DiagnosticResult r;
        try {
          const auto lines = u.empty() ? read_tck(in.path("tck")) : read_tck(in.unit_path("tck", u));
          r = check_bundle(lines, t);
        } catch (const std::exception &e) {
          r = failed(check, t, e);
        }
        if (u.empty()) {
          d.results.push_back(r);
        } else {
          d.units[u].push_back(r);
        }
      }
      continue;
    }
    try {
      d.results.push_back(run_check(check, in, t));
    } catch (const std::exception &e) {
      d.results.push_back(failed(check, t, e));
    }
  }
  return d;
}

auto load_node_diagnostics(const fs::path &path) -> std::optional<NodeDiagnostics> {
  auto doc = read_json_file(path);
  if (!doc) return std::nullopt;
  return node_diagnostics_from_json(*doc);
}

auto diagnose_node(const DatasetManifest &manifest, const ScanRecord &scan, const PipelineNode &node,
                   const Thresholds &thresholds, bool force) -> StepOutcome {
  const auto path = qc_bundle_path(manifest.output_dir, scan.entity.scan_id, node.name);
  if (!force) {
    try {
      if (auto old = load_node_diagnostics(path);
          old && old->inputs == input_digests(scan, node) && old->thresholds == thresholds_to_json(thresholds) &&
          old->assets == node_assets(node)) {
        return {0, 1};
      }
    } catch (const Error &) {
      // Unreadable bundle: regenerate it.
    }
  }
  write_json_file(path, node_diagnostics_to_json(run_node_diagnostics(scan, node, thresholds)));
  return {1, 0};
}

auto render_node(const DatasetManifest &manifest, const ScanRecord &scan, const PipelineNode &node, bool force)
    -> StepOutcome {
  const auto &scan_id = scan.entity.scan_id;
  const auto assets = node_assets(node);
  if (assets.empty()) return {};
  const json stamp{{"version", kRenderVersion}, {"inputs", input_digests(scan, node)}, {"assets", assets}};
  const auto stamp_path = render_stamp_path(manifest.output_dir, scan_id, node.name);
  if (!force) {
    bool fresh = false;
    try {
      fresh = read_json_file(stamp_path) == stamp;
    } catch (const Error &) {
    }
    for (const auto &a : assets) fresh = fresh && fs::is_regular_file(panel_path(manifest.output_dir, scan_id, node.name, a));
    if (fresh) return {0, assets.size()};
  }
  Inputs in(scan, node);
  StepOutcome out;
  for (const auto &panel : node.panels) {
    if (panel == "bundle" && node.per_unit()) {
      for (const auto &u : node.units) {
        const auto img = render_bundle(read_tck(in.unit_path("tck", u)), u);
        write_png(img, panel_path(manifest.output_dir, scan_id, node.name, panel_asset_name(panel, u)));
        ++out.written;
      }
      continue;
    }
    Image img = panel == "bundle" ? render_bundle(read_tck(in.path("tck")), node.name) : render_panel(panel, in);
    write_png(img, panel_path(manifest.output_dir, scan_id, node.name, panel_asset_name(panel)));
    ++out.written;
  }
  write_json_file(stamp_path, stamp);
  return out;
}

} // namespace dmriqc
