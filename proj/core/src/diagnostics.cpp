#include "dmriqc/diagnostics.hpp"

#include "dmriqc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dmriqc {

using nlohmann::json;

auto to_string(Flag flag) -> std::string_view {
  switch (flag) {
  case Flag::Ok: return "ok";
  case Flag::Warn: return "warn";
  case Flag::Fail: return "fail";
  }
  return "fail";
}

auto diagnostic_to_json(const DiagnosticResult &r) -> json {
  json metrics = json::object();
  for (const auto &[k, v] : r.metrics) metrics[k] = v;
  return {{"check", r.check_name},
          {"flag", std::string(to_string(r.flag))},
          {"metrics", std::move(metrics)},
          {"details", r.details},
          {"thresholds_version", r.thresholds_version}};
}

auto diagnostic_from_json(const json &doc) -> DiagnosticResult {
  DiagnosticResult r;
  try {
    r.check_name = doc.at("check").get<std::string>();
    const auto flag = doc.at("flag").get<std::string>();
    if (flag == "ok") {
      r.flag = Flag::Ok;
    } else if (flag == "warn") {
      r.flag = Flag::Warn;
    } else if (flag == "fail") {
      r.flag = Flag::Fail;
    } else {
      throw Error(ErrorCode::SchemaViolation, "unknown flag '" + flag + "'");
    }
    for (const auto &[k, v] : doc.at("metrics").items()) r.metrics[k] = v.get<double>();
    r.details = doc.at("details").get<std::string>();
    r.thresholds_version = doc.at("thresholds_version").get<std::string>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::SchemaViolation, std::string("diagnostic record: ") + e.what());
  }
  return r;
}

auto thresholds_to_json(const Thresholds &t) -> json {
  return {
      {"version", t.version},
      {"decay",
       {{"max_spearman", t.decay.max_spearman},
        {"monotone_tolerance", t.decay.monotone_tolerance},
        {"min_r2", t.decay.min_r2},
        {"shell_gap", t.decay.shell_gap}}},
      {"motion",
       {{"jump_translation_mm", t.motion.jump_translation_mm},
        {"jump_rotation_deg", t.motion.jump_rotation_deg},
        {"max_jump_fraction", t.motion.max_jump_fraction},
        {"warn_translation_mm", t.motion.warn_translation_mm}}},
      {"outliers",
       {{"max_central_fraction", t.outliers.max_central_fraction},
        {"max_overall_fraction", t.outliers.max_overall_fraction}}},
      {"chi_square",
       {{"b_max", t.chi_square.b_max},
        {"elevated_ratio", t.chi_square.elevated_ratio},
        {"max_elevated_central", t.chi_square.max_elevated_central}}},
      {"permutation",
       {{"b_max", t.permutation.b_max},
        {"min_margin", t.permutation.min_margin},
        {"seed_stride", t.permutation.seed_stride},
        {"step_mm", t.permutation.tracking.step_mm},
        {"fa_stop", t.permutation.tracking.fa_stop},
        {"angle_stop_deg", t.permutation.tracking.angle_stop_deg},
        {"max_steps", t.permutation.tracking.max_steps}}},
      {"bundle", {{"min_count", t.bundle.min_count}}},
      {"connectome",
       {{"max_asymmetry", t.connectome.max_asymmetry},
        {"min_diagonal_dominance", t.connectome.min_diagonal_dominance},
        {"max_fa_cov", t.connectome.max_fa_cov},
        {"min_density", t.connectome.min_density}}},
      {"freewater",
       {{"nonwm_fa", t.freewater.nonwm_fa},
        {"max_overestimate_fraction", t.freewater.max_overestimate_fraction},
        {"max_noise_increase", t.freewater.max_noise_increase}}},
      {"overlay",
       {{"min_contrast", t.overlay.min_contrast},
        {"max_outside_fraction", t.overlay.max_outside_fraction}}},
      {"range", {{"min_fraction", t.range.min_fraction}}},
  };
}

namespace {

template <class T> auto read_field(const json &doc, const char *section, const char *key, T &out) -> void {
  auto s = doc.find(section);
  if (s == doc.end()) return;
  auto k = s->find(key);
  if (k == s->end()) return;
  try {
    out = k->get<T>();
  } catch (const json::exception &) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("threshold ") + section + "." + key + " has the wrong type");
  }
}

} // namespace

auto thresholds_from_json(const json &doc) -> Thresholds {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "thresholds must be an object");
  Thresholds t;
  if (auto v = doc.find("version"); v != doc.end()) {
    if (!v->is_string()) throw Error(ErrorCode::InvalidArgument, "thresholds version must be a string");
    t.version = v->get<std::string>();
  }
  read_field(doc, "decay", "max_spearman", t.decay.max_spearman);
  read_field(doc, "decay", "monotone_tolerance", t.decay.monotone_tolerance);
  read_field(doc, "decay", "min_r2", t.decay.min_r2);
  read_field(doc, "decay", "shell_gap", t.decay.shell_gap);
  read_field(doc, "motion", "jump_translation_mm", t.motion.jump_translation_mm);
  read_field(doc, "motion", "jump_rotation_deg", t.motion.jump_rotation_deg);
  read_field(doc, "motion", "max_jump_fraction", t.motion.max_jump_fraction);
  read_field(doc, "motion", "warn_translation_mm", t.motion.warn_translation_mm);
  read_field(doc, "outliers", "max_central_fraction", t.outliers.max_central_fraction);
  read_field(doc, "outliers", "max_overall_fraction", t.outliers.max_overall_fraction);
  read_field(doc, "chi_square", "b_max", t.chi_square.b_max);
  read_field(doc, "chi_square", "elevated_ratio", t.chi_square.elevated_ratio);
  read_field(doc, "chi_square", "max_elevated_central", t.chi_square.max_elevated_central);
  read_field(doc, "permutation", "b_max", t.permutation.b_max);
  read_field(doc, "permutation", "min_margin", t.permutation.min_margin);
  read_field(doc, "permutation", "seed_stride", t.permutation.seed_stride);
  read_field(doc, "permutation", "step_mm", t.permutation.tracking.step_mm);
  read_field(doc, "permutation", "fa_stop", t.permutation.tracking.fa_stop);
  read_field(doc, "permutation", "angle_stop_deg", t.permutation.tracking.angle_stop_deg);
  read_field(doc, "permutation", "max_steps", t.permutation.tracking.max_steps);
  read_field(doc, "bundle", "min_count", t.bundle.min_count);
  read_field(doc, "connectome", "max_asymmetry", t.connectome.max_asymmetry);
  read_field(doc, "connectome", "min_diagonal_dominance", t.connectome.min_diagonal_dominance);
  read_field(doc, "connectome", "max_fa_cov", t.connectome.max_fa_cov);
  read_field(doc, "connectome", "min_density", t.connectome.min_density);
  read_field(doc, "freewater", "nonwm_fa", t.freewater.nonwm_fa);
  read_field(doc, "freewater", "max_overestimate_fraction", t.freewater.max_overestimate_fraction);
  read_field(doc, "freewater", "max_noise_increase", t.freewater.max_noise_increase);
  read_field(doc, "overlay", "min_contrast", t.overlay.min_contrast);
  read_field(doc, "overlay", "max_outside_fraction", t.overlay.max_outside_fraction);
  read_field(doc, "range", "min_fraction", t.range.min_fraction);
  return t;
}

auto Matrix::transposed() const -> Matrix {
  Matrix out(cols, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

auto percentile(std::vector<double> values, double p) -> double {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

auto median(std::vector<double> values) -> double { return percentile(std::move(values), 50.0); }

auto ranks(std::span<const double> v) -> std::vector<double> {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

auto pearson(std::span<const double> a, std::span<const double> b) -> double {
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

auto finite(double v) -> double { return std::isfinite(v) ? v : 0.0; }

auto make_result(const char *name, const Thresholds &t) -> DiagnosticResult {
  DiagnosticResult r;
  r.check_name = name;
  r.thresholds_version = t.version;
  return r;
}

auto fmt(double v) -> std::string {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

} // namespace

auto spearman(std::span<const double> a, std::span<const double> b) -> double {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "spearman needs equal lengths");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  return pearson(ra, rb);
}

auto auto_brain_mask(const DwiSeries &series, double b0_threshold) -> Mask {
  const auto &dims = series.dims();
  const auto &grad = series.gradients();
  std::vector<std::size_t> ref;
  for (std::size_t n = 0; n < grad.size(); ++n) {
    if (grad.bvals[n] <= b0_threshold) ref.push_back(n);
  }
  if (ref.empty()) {
    // No non-weighted volume: fall back to the lowest shell.
    const double bmin = *std::min_element(grad.bvals.begin(), grad.bvals.end());
    for (std::size_t n = 0; n < grad.size(); ++n) {
      if (grad.bvals[n] == bmin) ref.push_back(n);
    }
  }
  std::vector<double> mean(dims.count(), 0.0);
  for (auto n : ref) {
    auto vol = series.volume(n);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += vol[i];
  }
  for (auto &v : mean) v /= static_cast<double>(ref.size());
  const double thr = 0.1 * percentile(mean, 98.0);

  Mask above(dims, 0);
  for (std::size_t i = 0; i < mean.size(); ++i) above[i] = mean[i] > thr ? 1 : 0;

  // Largest 6-connected component; the earliest in scan order wins ties.
  Grid3<std::int32_t> label(dims, 0);
  std::int32_t next = 0, best = 0;
  std::size_t best_size = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mean.size(); ++start) {
    if (!above[start] || label[start]) continue;
    ++next;
    std::size_t size = 0;
    stack.push_back(start);
    label[start] = next;
    while (!stack.empty()) {
      const auto idx = stack.back();
      stack.pop_back();
      ++size;
      const auto i = idx % dims.x;
      const auto j = (idx / dims.x) % dims.y;
      const auto k = idx / (dims.x * dims.y);
      const std::ptrdiff_t nb[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                       {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
      for (const auto &o : nb) {
        const auto ni = static_cast<std::ptrdiff_t>(i) + o[0];
        const auto nj = static_cast<std::ptrdiff_t>(j) + o[1];
        const auto nk = static_cast<std::ptrdiff_t>(k) + o[2];
        if (!dims.contains(ni, nj, nk)) continue;
        const auto nidx = label.index(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj),
                                      static_cast<std::size_t>(nk));
        if (above[nidx] && !label[nidx]) {
          label[nidx] = next;
          stack.push_back(nidx);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
  }
  Mask out(dims, 0);
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = (best != 0 && label[i] == best) ? 1 : 0;
  return out;
}

auto check_intensity_decay(const DwiSeries &series, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("intensity_decay", t);
  const auto &grad = series.gradients();

  // Cluster b-values into shells: a new shell starts after a gap > shell_gap.
  std::vector<std::size_t> order(grad.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return grad.bvals[a] < grad.bvals[b]; });
  std::vector<std::vector<std::size_t>> shells;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || grad.bvals[order[i]] - grad.bvals[order[i - 1]] > t.decay.shell_gap) {
      shells.emplace_back();
    }
    shells.back().push_back(order[i]);
  }
  r.metrics["shells"] = static_cast<double>(shells.size());
  if (shells.size() < 2) {
    r.flag = Flag::Warn;
    r.details = "single shell: decay check not applicable";
    return r;
  }

  const Mask mask = auto_brain_mask(series);
  std::vector<double> shell_b, medians;
  for (std::size_t s = 0; s < shells.size(); ++s) {
    double bsum = 0.0;
    std::vector<double> values;
    for (auto n : shells[s]) {
      bsum += grad.bvals[n];
      auto vol = series.volume(n);
      for (std::size_t i = 0; i < vol.size(); ++i) {
        if (mask[i]) values.push_back(vol[i]);
      }
    }
    shell_b.push_back(bsum / static_cast<double>(shells[s].size()));
    medians.push_back(median(std::move(values)));
    r.metrics["median_b" + std::to_string(static_cast<long long>(std::llround(shell_b.back())))] =
        finite(medians.back());
  }
  const double rho = spearman(shell_b, medians);
  r.metrics["spearman"] = finite(rho);

  double r2 = 0.0;
  if (std::all_of(medians.begin(), medians.end(), [](double m) { return m > 0.0; })) {
    std::vector<double> logm(medians.size());
    std::transform(medians.begin(), medians.end(), logm.begin(), [](double m) { return std::log(m); });
    const double c = pearson(shell_b, logm);
    r2 = c * c;
  }
  r.metrics["r2_log_linear"] = finite(r2);

  bool monotone = true;
  for (std::size_t s = 1; s < medians.size(); ++s) {
    if (medians[s] > medians[s - 1] * (1.0 + t.decay.monotone_tolerance)) monotone = false;
  }
  r.metrics["monotone"] = monotone ? 1.0 : 0.0;

  if (rho > t.decay.max_spearman || !monotone) {
    r.flag = Flag::Fail;
    r.details = "shell medians do not decay with b (spearman " + fmt(rho) + ")";
  } else if (r2 < t.decay.min_r2) {
    r.flag = Flag::Warn;
    r.details = "decay is not log-linear (R^2 " + fmt(r2) + ")";
  } else {
    r.details = "shell medians decay with b";
  }
  return r;
}

auto check_motion(const MotionTrace &trace, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("motion", t);
  if (trace.rotation_deg.size() != trace.translation_mm.size()) {
    throw Error(ErrorCode::ShapeMismatch, "motion trace has unequal translation and rotation lengths");
  }
  std::vector<double> tj, rj;
  std::size_t large = 0;
  for (std::size_t n = 1; n < trace.size(); ++n) {
    double tmax = 0.0, rmax = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      tmax = std::max(tmax, std::fabs(trace.translation_mm[n][a] - trace.translation_mm[n - 1][a]));
      rmax = std::max(rmax, std::fabs(trace.rotation_deg[n][a] - trace.rotation_deg[n - 1][a]));
    }
    tj.push_back(tmax);
    rj.push_back(rmax);
    if (tmax > t.motion.jump_translation_mm || rmax > t.motion.jump_rotation_deg) ++large;
  }
  const double fraction = tj.empty() ? 0.0 : static_cast<double>(large) / static_cast<double>(tj.size());
  const double tmax = tj.empty() ? 0.0 : *std::max_element(tj.begin(), tj.end());
  const double rmax = rj.empty() ? 0.0 : *std::max_element(rj.begin(), rj.end());
  r.metrics["max_translation_jump_mm"] = finite(tmax);
  r.metrics["p95_translation_jump_mm"] = finite(percentile(tj, 95.0));
  r.metrics["max_rotation_jump_deg"] = finite(rmax);
  r.metrics["p95_rotation_jump_deg"] = finite(percentile(rj, 95.0));
  r.metrics["jump_fraction"] = fraction;
  if (fraction > t.motion.max_jump_fraction) {
    r.flag = Flag::Fail;
    r.details = "discontinuous motion: " + fmt(fraction * 100.0) + "% of adjacent volumes jump";
  } else if (tmax > t.motion.warn_translation_mm) {
    r.flag = Flag::Warn;
    r.details = "isolated translation jump of " + fmt(tmax) + " mm";
  } else {
    r.details = "motion is smooth between adjacent volumes";
  }
  return r;
}

auto check_outlier_slices(const OutlierMap &map, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("outlier_slices", t);
  if (map.volumes == 0 || map.slices == 0) throw Error(ErrorCode::EmptyInput, "outlier map is empty");
  const std::size_t lo = map.slices / 4;
  const std::size_t hi = map.slices - map.slices / 4;
  std::size_t total = 0, central = 0;
  double max_slice = 0.0;
  for (std::size_t s = 0; s < map.slices; ++s) {
    std::size_t col = 0;
    for (std::size_t v = 0; v < map.volumes; ++v) col += map.at(v, s);
    total += col;
    if (s >= lo && s < hi) central += col;
    max_slice = std::max(max_slice, static_cast<double>(col) / static_cast<double>(map.volumes));
  }
  const double overall = static_cast<double>(total) / static_cast<double>(map.volumes * map.slices);
  const double central_frac = static_cast<double>(central) / static_cast<double>(map.volumes * (hi - lo));
  r.metrics["overall_fraction"] = overall;
  r.metrics["central_fraction"] = central_frac;
  r.metrics["max_slice_fraction"] = max_slice;
  r.metrics["central_first_slice"] = static_cast<double>(lo);
  r.metrics["central_last_slice"] = static_cast<double>(hi - 1);
  if (central_frac > t.outliers.max_central_fraction || overall > t.outliers.max_overall_fraction) {
    r.flag = Flag::Fail;
    r.details = "too many imputed slices (central " + fmt(central_frac * 100.0) + "%, overall " +
                fmt(overall * 100.0) + "%)";
  } else {
    r.details = "imputed slice count is within limits";
  }
  return r;
}

auto check_chi_square(const DwiSeries &series, const Mask &mask, const Thresholds &t)
    -> DiagnosticResult {
  auto r = make_result("chi_square", t);
  FitOptions opt;
  opt.b_max = t.chi_square.b_max;
  const auto fit = fit_tensor(series, mask, opt);
  const auto chi = chi_square_slices(series, fit, mask, t.chi_square.b_max);
  std::vector<double> means;
  for (const auto &m : chi.slice_mean) {
    if (m) means.push_back(*m);
  }
  if (means.empty()) throw Error(ErrorCode::MaskEmpty, "no masked slices for chi-square");
  const double med = median(means);
  const double max = *std::max_element(means.begin(), means.end());
  const double floor = std::max(med, 1e-9);
  const std::size_t nz = chi.slice_mean.size();
  const std::size_t lo = nz / 4, hi = nz - nz / 4;
  std::size_t elevated = 0, elevated_central = 0;
  for (std::size_t z = 0; z < nz; ++z) {
    if (!chi.slice_mean[z] || *chi.slice_mean[z] <= t.chi_square.elevated_ratio * floor) continue;
    ++elevated;
    if (z >= lo && z < hi) ++elevated_central;
  }
  r.metrics["median_slice_chi2"] = finite(med);
  r.metrics["max_slice_chi2"] = finite(max);
  r.metrics["elevated_slices"] = static_cast<double>(elevated);
  r.metrics["elevated_central_slices"] = static_cast<double>(elevated_central);
  r.metrics["volumes"] = static_cast<double>(chi.volumes.size());
  if (elevated_central > t.chi_square.max_elevated_central) {
    r.flag = Flag::Fail;
    r.details = std::to_string(elevated_central) + " central slices poorly fit by the tensor model";
  } else if (elevated > 0) {
    r.flag = Flag::Warn;
    r.details = std::to_string(elevated) + " slices with elevated chi-square";
  } else {
    r.details = "tensor model fits all slices";
  }
  return r;
}

auto BvecCandidate::is_identity() const -> bool {
  return axis == std::array<std::size_t, 3>{0, 1, 2} && sign == std::array<int, 3>{1, 1, 1};
}

auto BvecCandidate::label() const -> std::string {
  std::string out;
  for (std::size_t i = 0; i < 3; ++i) {
    out += sign[i] < 0 ? '-' : '+';
    out += "xyz"[axis[i]];
  }
  return out;
}

auto BvecCandidate::apply(const Vec3 &g) const -> Vec3 {
  return {sign[0] * g[axis[0]], sign[1] * g[axis[1]], sign[2] * g[axis[2]]};
}

auto bvec_candidates() -> std::vector<BvecCandidate> {
  std::vector<BvecCandidate> out;
  std::array<std::size_t, 3> perm{0, 1, 2};
  do {
    for (int mask = 0; mask < 8; ++mask) {
      BvecCandidate c;
      c.axis = perm;
      for (int a = 0; a < 3; ++a) c.sign[static_cast<std::size_t>(a)] = (mask >> a) & 1 ? -1 : 1;
      out.push_back(c);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

auto score_bvec_candidates(const DwiSeries &series, const Mask &mask, const Thresholds &t)
    -> std::vector<CandidateScore> {
  FitOptions opt;
  opt.b_max = t.permutation.b_max;
  const auto candidates = bvec_candidates();
  const auto &orig = series.gradients();

  // FA is invariant under axis permutation and sign flips of the scheme, so
  // one seed set serves every candidate.
  const auto base_fit = fit_tensor(series, mask, opt);
  const auto base_maps = scalar_maps(base_fit.tensors, base_fit.mask, series.voxel_size());
  const auto seeds = seed_lattice(base_maps, t.permutation.seed_stride, t.permutation.tracking.fa_stop);

  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  DwiSeries work = series;
  for (const auto &c : candidates) {
    GradientTable g = orig;
    for (auto &v : g.bvecs) v = c.apply(v);
    work.set_gradients(std::move(g));
    const auto fit = fit_tensor(work, mask, opt);
    const auto maps = scalar_maps(fit.tensors, fit.mask, series.voxel_size());
    std::vector<Vec3> usable;
    for (const auto &s : seeds) {
      const auto i = static_cast<std::size_t>(std::lround(s[0] / maps.voxel_size[0]));
      const auto j = static_cast<std::size_t>(std::lround(s[1] / maps.voxel_size[1]));
      const auto k = static_cast<std::size_t>(std::lround(s[2] / maps.voxel_size[2]));
      if (maps.mask(i, j, k)) usable.push_back(s);
    }
    const auto lines = track_streamlines(maps, usable, t.permutation.tracking);
    CompensatedSum total;
    for (const auto &l : lines) total.add(l.length());
    CandidateScore cs{c, lines.empty() ? 0.0 : total.value() / static_cast<double>(lines.size()),
                      lines.size()};
    scores.push_back(cs);
  }
  return scores;
}

auto check_bvec_permutation(const DwiSeries &series, const Mask &mask, const Thresholds &t)
    -> DiagnosticResult {
  auto r = make_result("bvec_permutation", t);
  const auto scores = score_bvec_candidates(series, mask, t);
  // Strictly greater wins, so the identity (index 0) and then the earlier
  // candidate keep ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].mean_length_mm > scores[best].mean_length_mm) best = i;
  }
  const double identity = scores[0].mean_length_mm;
  const double best_score = scores[best].mean_length_mm;
  const double margin = (best_score - identity) / std::max(identity, 1e-12);
  r.metrics["best_candidate"] = static_cast<double>(best);
  r.metrics["identity_score_mm"] = identity;
  r.metrics["best_score_mm"] = best_score;
  r.metrics["margin"] = finite(margin);
  r.metrics["seeds"] = static_cast<double>(scores[0].streamlines);
  const auto label = scores[best].candidate.label();
  if (best != 0 && margin > t.permutation.min_margin) {
    r.flag = Flag::Fail;
    r.details = "best=" + label + ": b-vectors appear permuted or flipped (margin " + fmt(margin) + ")";
  } else {
    r.details = "best=" + label + ": stored b-vector orientation is optimal";
  }
  return r;
}

auto check_bundle(std::span<const Streamline> streamlines, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("bundle", t);
  CompensatedSum total;
  for (const auto &s : streamlines) total.add(s.length());
  const auto n = streamlines.size();
  r.metrics["count"] = static_cast<double>(n);
  r.metrics["total_length_mm"] = total.value();
  r.metrics["mean_length_mm"] = n ? total.value() / static_cast<double>(n) : 0.0;
  if (n == 0) {
    r.flag = Flag::Fail;
    r.details = "empty: no streamlines, bundle averages are infeasible";
  } else if (n < t.bundle.min_count) {
    r.flag = Flag::Fail;
    r.details = "wispy: " + std::to_string(n) + " streamlines (< " + std::to_string(t.bundle.min_count) + ")";
  } else {
    r.details = "full: " + std::to_string(n) + " streamlines";
  }
  return r;
}

namespace {

auto asymmetry(const Matrix &m) -> double {
  double diff = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      diff = std::max(diff, std::fabs(m(i, j) - m(j, i)));
      mag = std::max(mag, std::fabs(m(i, j)));
    }
  }
  return diff / std::max(mag, 1e-300);
}

auto check_entries(const Matrix &m, const char *name) -> void {
  for (double v : m.values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " connectome has negative or non-finite entries");
    }
  }
}

} // namespace

auto check_connectome(const Matrix &nos, const Matrix &fa, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("connectome", t);
  if (nos.rows != nos.cols || fa.rows != fa.cols || nos.rows != fa.rows) {
    throw Error(ErrorCode::ShapeMismatch, "connectomes must be square with equal size");
  }
  if (nos.rows == 0) throw Error(ErrorCode::EmptyInput, "connectome is empty");
  check_entries(nos, "NOS");
  check_entries(fa, "FA");
  const std::size_t n = nos.rows;

  const double nos_asym = asymmetry(nos);
  const double fa_asym = asymmetry(fa);

  std::size_t dominant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_max = std::max(row_max, nos(i, j));
    if (nos(i, i) > 0.0 && nos(i, i) >= row_max) ++dominant;
  }
  const double dominance = static_cast<double>(dominant) / static_cast<double>(n);

  std::vector<double> nz;
  for (double v : fa.values) {
    if (v != 0.0) nz.push_back(v);
  }
  double cov = 0.0;
  if (!nz.empty()) {
    const double mean = std::accumulate(nz.begin(), nz.end(), 0.0) / static_cast<double>(nz.size());
    double var = 0.0;
    for (double v : nz) var += (v - mean) * (v - mean);
    var /= static_cast<double>(nz.size());
    cov = std::sqrt(var) / mean;
  }

  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) off += (i != j && nos(i, j) > 0.0);
  }
  const double density = n > 1 ? static_cast<double>(off) / static_cast<double>(n * (n - 1)) : 0.0;

  r.metrics["nos_asymmetry"] = nos_asym;
  r.metrics["fa_asymmetry"] = fa_asym;
  r.metrics["nos_diagonal_dominance"] = dominance;
  r.metrics["fa_cov"] = cov;
  r.metrics["density"] = density;
  r.metrics["regions"] = static_cast<double>(n);

  std::vector<std::string> problems;
  const auto &c = t.connectome;
  if (nos_asym > c.max_asymmetry || fa_asym > c.max_asymmetry) problems.push_back("asymmetric");
  if (dominance < c.min_diagonal_dominance) problems.push_back("weak diagonal");
  if (cov > c.max_fa_cov) problems.push_back("inhomogeneous FA");
  if (density < c.min_density) problems.push_back("sparse");
  if (problems.empty()) {
    r.details = "symmetric, diagonal-dominant, homogeneous";
  } else {
    r.flag = Flag::Fail;
    for (std::size_t i = 0; i < problems.size(); ++i) r.details += (i ? ", " : "") + problems[i];
  }
  return r;
}

namespace {

auto mean_abs_laplacian(const Grid3<double> &f, const Mask &mask) -> double {
  const auto &d = f.dims();
  CompensatedSum acc;
  std::size_t n = 0;
  for (std::size_t k = 1; k + 1 < d.z; ++k) {
    for (std::size_t j = 1; j + 1 < d.y; ++j) {
      for (std::size_t i = 1; i + 1 < d.x; ++i) {
        if (!mask(i, j, k)) continue;
        const double lap = f(i - 1, j, k) + f(i + 1, j, k) + f(i, j - 1, k) + f(i, j + 1, k) +
                           f(i, j, k - 1) + f(i, j, k + 1) - 6.0 * f(i, j, k);
        acc.add(std::fabs(lap));
        ++n;
      }
    }
  }
  return n ? acc.value() / static_cast<double>(n) : 0.0;
}

} // namespace

auto check_freewater(const Grid3<double> &fa_orig, const Grid3<double> &fa_fw, const Mask &wm,
                     const Mask &nonwm, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("freewater", t);
  const auto &d = fa_orig.dims();
  if (fa_fw.dims() != d || wm.dims() != d || nonwm.dims() != d) {
    throw Error(ErrorCode::ShapeMismatch, "free-water inputs are on different grids");
  }
  if (count_mask(wm) == 0) throw Error(ErrorCode::MaskEmpty, "white matter mask is empty");
  if (count_mask(nonwm) == 0) throw Error(ErrorCode::MaskEmpty, "non-white-matter mask is empty");

  CompensatedSum delta;
  std::size_t nwm = 0, nnon = 0, over = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (wm[i]) {
      delta.add(fa_fw[i] - fa_orig[i]);
      ++nwm;
    }
    if (nonwm[i]) {
      ++nnon;
      over += fa_fw[i] > t.freewater.nonwm_fa;
    }
  }
  const double mean_delta = delta.value() / static_cast<double>(nwm);
  const double overest = static_cast<double>(over) / static_cast<double>(nnon);
  const double lap_orig = mean_abs_laplacian(fa_orig, wm);
  const double lap_fw = mean_abs_laplacian(fa_fw, wm);
  const double noise = lap_fw - lap_orig;

  r.metrics["wm_delta"] = finite(mean_delta);
  r.metrics["nonwm_overestimate_fraction"] = overest;
  r.metrics["noise"] = finite(noise);
  r.metrics["laplacian_original"] = finite(lap_orig);
  r.metrics["laplacian_corrected"] = finite(lap_fw);

  if (mean_delta < 0.0 || overest > t.freewater.max_overestimate_fraction) {
    r.flag = Flag::Fail;
    r.details = mean_delta < 0.0 ? "corrected FA lowers white matter intensity"
                                 : "corrected FA overestimated outside white matter";
  } else if (noise > t.freewater.max_noise_increase * lap_orig) {
    r.flag = Flag::Warn;
    r.details = "corrected FA is noisier than the original";
  } else {
    r.details = "correction enhances white matter";
  }
  return r;
}

auto check_overlay_alignment(const Grid3<double> &fa, const Grid3<std::int32_t> &labels,
                             const Mask &brain, const Thresholds &t) -> DiagnosticResult {
  auto r = make_result("overlay_alignment", t);
  const auto &d = fa.dims();
  if (labels.dims() != d || brain.dims() != d) {
    throw Error(ErrorCode::ShapeMismatch, "overlay inputs are on different grids");
  }
  CompensatedSum in_sum, out_sum;
  std::size_t n_in = 0, n_out = 0, outside = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (labels[i] > 0) {
      in_sum.add(fa[i]);
      ++n_in;
      outside += brain[i] == 0;
    } else if (brain[i]) {
      out_sum.add(fa[i]);
      ++n_out;
    }
  }
  if (n_in == 0) throw Error(ErrorCode::MaskEmpty, "label volume has no labelled voxels");
  if (n_out == 0) throw Error(ErrorCode::MaskEmpty, "brain mask has no unlabelled voxels");
  const double contrast = in_sum.value() / static_cast<double>(n_in) - out_sum.value() / static_cast<double>(n_out);
  const double outside_frac = static_cast<double>(outside) / static_cast<double>(n_in);
  r.metrics["contrast"] = contrast;
  r.metrics["labels_outside_mask_fraction"] = outside_frac;
  r.metrics["labelled_voxels"] = static_cast<double>(n_in);
  if (contrast < t.overlay.min_contrast || outside_frac > t.overlay.max_outside_fraction) {
    r.flag = Flag::Fail;
    r.details = contrast < t.overlay.min_contrast ? "labels do not sit on bright white matter"
                                                  : "labels extend outside the brain mask";
  } else {
    r.details = "labels align with white matter";
  }
  return r;
}

auto check_range(std::span<const double> values, double lo, double hi, std::optional<double> center,
                 const std::string &name, const Thresholds &t) -> DiagnosticResult {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values for range check '" + name + "'");
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "range check needs lo < hi");
  DiagnosticResult r;
  r.check_name = name;
  r.thresholds_version = t.version;
  double mn = values[0], mx = values[0];
  CompensatedSum sum;
  std::size_t inside = 0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value in range check '" + name + "'");
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    sum.add(v);
    inside += v >= lo && v <= hi;
  }
  const double mean = sum.value() / static_cast<double>(values.size());
  const double frac = static_cast<double>(inside) / static_cast<double>(values.size());
  r.metrics["min"] = mn;
  r.metrics["max"] = mx;
  r.metrics["mean"] = mean;
  r.metrics["fraction_in_range"] = frac;
  if (center) r.metrics["center_offset"] = mean - *center;
  if (frac < t.range.min_fraction) {
    r.flag = Flag::Fail;
    r.details = fmt(frac * 100.0) + "% of values in [" + fmt(lo) + ", " + fmt(hi) + "]";
  } else {
    r.details = "values within [" + fmt(lo) + ", " + fmt(hi) + "]";
  }
  return r;
}

} // namespace dmriqc
