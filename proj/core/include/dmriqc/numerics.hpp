#pragma once

#include "dmriqc/grid.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dmriqc {

/// b-values in s/mm^2 with unit gradient directions (zero allowed for b=0).
struct GradientTable {
  std::vector<double> bvals;
  std::vector<Vec3> bvecs;

  [[nodiscard]] auto size() const noexcept -> std::size_t { return bvals.size(); }
  /// Throws InvalidArgument when the invariants do not hold.
  auto validate() const -> void;
};

/// 4D diffusion-weighted series; volume index is the slowest axis.
class DwiSeries {
public:
  DwiSeries() = default;
  DwiSeries(Dims3 dims, Vec3 voxel_size, GradientTable gradients);

  [[nodiscard]] auto dims() const noexcept -> const Dims3 & { return dims_; }
  [[nodiscard]] auto volumes() const noexcept -> std::size_t { return gradients_.size(); }
  [[nodiscard]] auto voxel_size() const noexcept -> const Vec3 & { return voxel_size_; }
  [[nodiscard]] auto gradients() const noexcept -> const GradientTable & { return gradients_; }
  auto set_gradients(GradientTable gradients) -> void;

  auto at(std::size_t i, std::size_t j, std::size_t k, std::size_t n) -> double & {
    return data_[i + dims_.x * (j + dims_.y * (k + dims_.z * n))];
  }
  [[nodiscard]] auto at(std::size_t i, std::size_t j, std::size_t k, std::size_t n) const
      -> double {
    return data_[i + dims_.x * (j + dims_.y * (k + dims_.z * n))];
  }
  /// Contiguous voxels of volume `n`.
  [[nodiscard]] auto volume(std::size_t n) const -> std::span<const double> {
    return {data_.data() + n * dims_.count(), dims_.count()};
  }
  auto volume(std::size_t n) -> std::span<double> {
    return {data_.data() + n * dims_.count(), dims_.count()};
  }
  [[nodiscard]] auto data() const noexcept -> const std::vector<double> & { return data_; }
  auto data() noexcept -> std::vector<double> & { return data_; }

private:
  Dims3 dims_{};
  Vec3 voxel_size_{1.0, 1.0, 1.0};
  GradientTable gradients_;
  std::vector<double> data_;
};

/// Symmetric diffusion tensor in mm^2/s plus the fitted non-weighted signal.
struct DiffusionTensor {
  double dxx = 0, dyy = 0, dzz = 0, dxy = 0, dxz = 0, dyz = 0;
  double s0 = 0;

  [[nodiscard]] constexpr auto quadratic_form(const Vec3 &g) const noexcept -> double {
    return dxx * g[0] * g[0] + dyy * g[1] * g[1] + dzz * g[2] * g[2] +
           2.0 * (dxy * g[0] * g[1] + dxz * g[0] * g[2] + dyz * g[1] * g[2]);
  }
  [[nodiscard]] constexpr auto components() const noexcept -> std::array<double, 6> {
    return {dxx, dyy, dzz, dxy, dxz, dyz};
  }
  /// Tensor with eigenvalues `evals` along the orthonormal columns `evecs`.
  static auto from_eigen(const Vec3 &evals, const std::array<Vec3, 3> &evecs, double s0)
      -> DiffusionTensor;

  auto operator==(const DiffusionTensor &) const -> bool = default;
};

/// S = s0 * exp(-b g^T D g).
auto predict_signal(double s0, double b, const Vec3 &g, const DiffusionTensor &tensor) -> double;

struct FitOptions {
  double b_max = 1500.0;
  /// Volumes at or below this b-value count as non-weighted.
  double b0_threshold = 10.0;
};

struct TensorFit {
  Grid3<DiffusionTensor> tensors;
  /// Residual sum of squares of the log-signal fit.
  Grid3<double> rss;
  /// Voxels that were fitted successfully.
  Mask mask;
  std::vector<std::size_t> volumes_used;
  std::size_t failed_voxels = 0;
};

/// Log-linear ordinary least squares tensor fit over volumes with b <= b_max.
/// Errors: InsufficientDirections, SingularDesign, ShapeMismatch.
auto fit_tensor(const DwiSeries &series, const Mask &mask, const FitOptions &options = {})
    -> TensorFit;

struct EigenSystem {
  /// Descending.
  Vec3 values{};
  /// vectors[i] belongs to values[i]; right-handed orthonormal set.
  std::array<Vec3, 3> vectors{};
};

/// Closed-form (trigonometric) eigen-decomposition of a symmetric 3x3 tensor.
auto eigen_symmetric(const DiffusionTensor &tensor) -> EigenSystem;

auto fractional_anisotropy(const Vec3 &evals) -> double;
auto mean_diffusivity(const Vec3 &evals) -> double;
/// Flips `v` so its largest-magnitude component is positive.
auto sign_normalized(Vec3 v) -> Vec3;

struct ScalarMaps {
  Grid3<double> fa;
  Grid3<double> md;
  Grid3<Vec3> principal_dir;
  Grid3<Vec3> eigenvalues;
  Mask mask;
  Vec3 voxel_size{1.0, 1.0, 1.0};
  /// Voxels dropped from the mask because their tensor was not finite.
  std::size_t nonfinite_removed = 0;
  /// Voxels with at least one negative eigenvalue.
  std::size_t negative_eigenvalue_voxels = 0;
};

auto scalar_maps(const Grid3<DiffusionTensor> &tensors, const Mask &mask,
                 const Vec3 &voxel_size = {1.0, 1.0, 1.0}) -> ScalarMaps;

struct ChiSquareSlices {
  /// Volume indices evaluated (b <= b_max).
  std::vector<std::size_t> volumes;
  /// per_slice[z][v] pairs with volumes[v]; nullopt when the slice has no
  /// masked voxels.
  std::vector<std::optional<std::vector<double>>> per_slice;
  std::vector<std::optional<double>> slice_mean;
};

/// chi2(z, n) = sum over masked voxels of (S_obs - S_pred)^2 / max(S_pred, eps).
auto chi_square_slices(const DwiSeries &series, const TensorFit &fit, const Mask &mask,
                       double b_max = 1500.0) -> ChiSquareSlices;

struct Streamline {
  std::vector<Vec3> points;

  [[nodiscard]] auto length() const -> double;
  auto operator==(const Streamline &) const -> bool = default;
};

struct TrackingOptions {
  double step_mm = 1.0;
  double fa_stop = 0.2;
  double angle_stop_deg = 45.0;
  std::size_t max_steps = 2000;
};

/// Deterministic bidirectional first-eigenvector Euler tracking. Seeds are
/// world positions in mm (voxel index times voxel size). Throws
/// SeedOutsideMask.
auto track_streamlines(const ScalarMaps &maps, std::span<const Vec3> seeds,
                       const TrackingOptions &options = {}) -> std::vector<Streamline>;

/// Centers of every `stride`-th voxel (per axis) inside the mask with
/// FA >= fa_min, in world mm.
auto seed_lattice(const ScalarMaps &maps, std::size_t stride, double fa_min) -> std::vector<Vec3>;

} // namespace dmriqc
