#pragma once

#include "dmriqc/numerics.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmriqc {

enum class Flag { Ok, Warn, Fail };

auto to_string(Flag flag) -> std::string_view;

/// Output of one advisory check. Advisory only: never turned into a verdict.
struct DiagnosticResult {
  std::string check_name;
  std::map<std::string, double> metrics;
  Flag flag = Flag::Ok;
  std::string details;
  std::string thresholds_version;

  auto operator==(const DiagnosticResult &) const -> bool = default;
};

auto diagnostic_to_json(const DiagnosticResult &result) -> nlohmann::json;
auto diagnostic_from_json(const nlohmann::json &doc) -> DiagnosticResult;

/// Numeric limits for every check. The defaults are this project's choices;
/// bump `version` whenever a default changes.
struct Thresholds {
  std::string version = "1";

  struct Decay {
    double max_spearman = -0.9;
    double monotone_tolerance = 0.05;
    double min_r2 = 0.8;
    double shell_gap = 50.0;
  } decay;

  struct Motion {
    double jump_translation_mm = 2.0;
    double jump_rotation_deg = 2.0;
    double max_jump_fraction = 0.10;
    double warn_translation_mm = 4.0;
  } motion;

  struct Outliers {
    double max_central_fraction = 0.05;
    double max_overall_fraction = 0.10;
  } outliers;

  struct ChiSquare {
    double b_max = 1500.0;
    double elevated_ratio = 3.0;
    std::size_t max_elevated_central = 2;
  } chi_square;

  struct Permutation {
    double b_max = 1500.0;
    double min_margin = 0.05;
    std::size_t seed_stride = 2;
    TrackingOptions tracking{};
  } permutation;

  struct Bundle {
    std::size_t min_count = 50;
  } bundle;

  struct Connectome {
    double max_asymmetry = 1e-6;
    double min_diagonal_dominance = 0.9;
    double max_fa_cov = 0.5;
    double min_density = 0.2;
  } connectome;

  struct FreeWater {
    double nonwm_fa = 0.6;
    double max_overestimate_fraction = 0.10;
    double max_noise_increase = 0.5;
  } freewater;

  struct Overlay {
    double min_contrast = 0.05;
    double max_outside_fraction = 0.05;
  } overlay;

  struct Range {
    double min_fraction = 0.95;
  } range;
};

auto thresholds_to_json(const Thresholds &t) -> nlohmann::json;
/// Missing keys keep their defaults. Throws InvalidArgument on type errors.
auto thresholds_from_json(const nlohmann::json &doc) -> Thresholds;

struct MotionTrace {
  std::vector<Vec3> translation_mm;
  std::vector<Vec3> rotation_deg;

  [[nodiscard]] auto size() const noexcept -> std::size_t { return translation_mm.size(); }
};

/// Rows are volumes, columns are slices.
struct OutlierMap {
  std::size_t volumes = 0;
  std::size_t slices = 0;
  std::vector<std::uint8_t> flags;

  [[nodiscard]] auto at(std::size_t volume, std::size_t slice) const -> bool {
    return flags[volume * slices + slice] != 0;
  }
  auto set(std::size_t volume, std::size_t slice, bool v) -> void {
    flags[volume * slices + slice] = v ? 1 : 0;
  }
  auto operator==(const OutlierMap &) const -> bool = default;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  auto operator()(std::size_t r, std::size_t c) -> double & { return values[r * cols + c]; }
  auto operator()(std::size_t r, std::size_t c) const -> double { return values[r * cols + c]; }
  [[nodiscard]] auto transposed() const -> Matrix;
  auto operator==(const Matrix &) const -> bool = default;
};

/// Voxels above 10% of the 98th percentile of the mean b=0 volume, reduced
/// to the largest 6-connected component.
auto auto_brain_mask(const DwiSeries &series, double b0_threshold = 10.0) -> Mask;

auto check_intensity_decay(const DwiSeries &series, const Thresholds &t = {}) -> DiagnosticResult;
auto check_motion(const MotionTrace &trace, const Thresholds &t = {}) -> DiagnosticResult;
/// Central band: slices [S/4, S - S/4).
auto check_outlier_slices(const OutlierMap &map, const Thresholds &t = {}) -> DiagnosticResult;
auto check_chi_square(const DwiSeries &series, const Mask &mask, const Thresholds &t = {})
    -> DiagnosticResult;

/// Axis order and sign applied to stored b-vectors: g'[i] = sign[i] * g[axis[i]].
struct BvecCandidate {
  std::array<std::size_t, 3> axis{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};

  [[nodiscard]] auto is_identity() const -> bool;
  [[nodiscard]] auto label() const -> std::string;
  [[nodiscard]] auto apply(const Vec3 &g) const -> Vec3;
  auto operator==(const BvecCandidate &) const -> bool = default;
};

/// All 48 candidates; index 0 is the identity. Order: axis permutations in
/// lexicographic order, then sign masks 0..7 with bit 0 flipping x.
auto bvec_candidates() -> std::vector<BvecCandidate>;

struct CandidateScore {
  BvecCandidate candidate;
  double mean_length_mm = 0.0;
  std::size_t streamlines = 0;
};

/// Mean streamline length per candidate, in bvec_candidates() order.
auto score_bvec_candidates(const DwiSeries &series, const Mask &mask, const Thresholds &t = {})
    -> std::vector<CandidateScore>;
auto check_bvec_permutation(const DwiSeries &series, const Mask &mask, const Thresholds &t = {})
    -> DiagnosticResult;

auto check_bundle(std::span<const Streamline> streamlines, const Thresholds &t = {})
    -> DiagnosticResult;
/// Throws ShapeMismatch.
auto check_connectome(const Matrix &nos, const Matrix &fa, const Thresholds &t = {})
    -> DiagnosticResult;
/// Throws ShapeMismatch, MaskEmpty.
auto check_freewater(const Grid3<double> &fa_orig, const Grid3<double> &fa_fw, const Mask &wm,
                     const Mask &nonwm, const Thresholds &t = {}) -> DiagnosticResult;
/// Throws ShapeMismatch, MaskEmpty.
auto check_overlay_alignment(const Grid3<double> &fa, const Grid3<std::int32_t> &labels,
                             const Mask &brain, const Thresholds &t = {}) -> DiagnosticResult;
/// Throws EmptyInput, InvalidArgument (lo >= hi).
auto check_range(std::span<const double> values, double lo, double hi,
                 std::optional<double> center, const std::string &name,
                 const Thresholds &t = {}) -> DiagnosticResult;

/// Average ranks (ties share the mean rank), then Pearson correlation.
auto spearman(std::span<const double> a, std::span<const double> b) -> double;
/// Linear-interpolated percentile, p in [0, 100].
auto percentile(std::vector<double> values, double p) -> double;

} // namespace dmriqc
