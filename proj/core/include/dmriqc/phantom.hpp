#pragma once

#include "dmriqc/numerics.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dmriqc {

enum class PhantomGeometry { StraightTract, UArc, IsotropicOnly };

struct Shell {
  double bval = 0.0;
  std::size_t count = 1;
};

/// Synthetic DWI phantom description. Diffusivities are literature-typical
/// magnitudes in mm^2/s.
struct PhantomSpec {
  Dims3 dims{32, 32, 32};
  Vec3 voxel_size{1.0, 1.0, 1.0};
  std::vector<Shell> shells{{0.0, 1}, {1000.0, 30}};
  PhantomGeometry geometry = PhantomGeometry::UArc;
  double s0 = 1000.0;
  /// Rician noise standard deviation; 0 disables noise.
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  Vec3 tissue_eigenvalues{1.7e-3, 0.3e-3, 0.3e-3};
  double background_diffusivity = 0.7e-3;
  double fluid_diffusivity = 3.0e-3;
  double tract_radius_mm = 3.0;
  /// Arc centerline radius; 0 picks 30% of the smaller in-plane extent.
  double arc_radius_mm = 0.0;
  double fluid_radius_mm = 2.0;
};

struct Phantom {
  DwiSeries series;
  Grid3<DiffusionTensor> truth;
  Mask tissue;
  Mask fluid;
  /// Centerline length of the tract (0 for isotropic-only).
  double tract_length_mm = 0.0;
  /// World-space center of the arc (UArc) or tract midpoint (StraightTract).
  Vec3 center{0.0, 0.0, 0.0};
  double arc_radius_mm = 0.0;
};

/// Throws InvalidSpec.
auto generate_phantom(const PhantomSpec &spec) -> Phantom;

/// Antipodally symmetric electrostatic-repulsion directions on the upper
/// hemisphere. Uses the shipped table when it has an entry for `count`,
/// otherwise runs the same deterministic optimisation.
auto repulsion_directions(std::size_t count) -> std::vector<Vec3>;

/// The optimisation behind the shipped table.
auto optimize_repulsion(std::size_t count) -> std::vector<Vec3>;

/// Direction counts present in the shipped table.
auto shipped_direction_counts() -> std::span<const std::size_t>;
/// Empty when `count` is not shipped.
auto shipped_directions(std::size_t count) -> std::vector<Vec3>;

} // namespace dmriqc
