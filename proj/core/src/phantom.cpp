#include "dmriqc/phantom.hpp"

#include "dmriqc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace dmriqc {

auto optimize_repulsion(std::size_t count) -> std::vector<Vec3> {
  if (count == 0) return {};
  // Fibonacci spiral on the upper hemisphere as the starting layout.
  std::vector<Vec3> p(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * static_cast<double>(i);
    p[i] = {r * std::cos(a), r * std::sin(a), z};
  }
  if (count == 1) return {{0.0, 0.0, 1.0}};

  // Minimise sum 1/|pi - pj| + 1/|pi + pj| by projected gradient descent with
  // a fixed schedule.
  constexpr int kIterations = 4000;
  std::vector<Vec3> force(count);
  for (int it = 0; it < kIterations; ++it) {
    std::fill(force.begin(), force.end(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = i + 1; j < count; ++j) {
        for (double sgn : {1.0, -1.0}) {
          const Vec3 d = p[i] - scaled(p[j], sgn);
          const double n = std::max(norm(d), 1e-9);
          const Vec3 f = scaled(d, 1.0 / (n * n * n));
          force[i] = force[i] + f;
          force[j] = force[j] - scaled(f, sgn);
        }
      }
    }
    const double step = 0.02 / static_cast<double>(count) * (1.0 - 0.9 * it / kIterations);
    for (std::size_t i = 0; i < count; ++i) {
      // Tangential component only.
      const Vec3 f = force[i] - scaled(p[i], dot(force[i], p[i]));
      const Vec3 q = p[i] + scaled(f, step);
      p[i] = scaled(q, 1.0 / norm(q));
    }
  }
  for (auto &v : p) {
    if (v[2] < 0.0) v = scaled(v, -1.0);
  }
  return p;
}

auto repulsion_directions(std::size_t count) -> std::vector<Vec3> {
  auto table = shipped_directions(count);
  if (!table.empty()) return table;
  return optimize_repulsion(count);
}

namespace {

auto fail_spec(const std::string &why) -> void { throw Error(ErrorCode::InvalidSpec, why); }

auto orthonormal_frame(const Vec3 &t) -> std::array<Vec3, 3> {
  Vec3 helper = std::fabs(t[2]) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
  Vec3 u = cross(t, helper);
  u = scaled(u, 1.0 / norm(u));
  Vec3 w = cross(t, u);
  return {t, u, w};
}

} // namespace

auto generate_phantom(const PhantomSpec &spec) -> Phantom {
  if (spec.dims.count() == 0) fail_spec("grid dimensions must be positive");
  for (double v : spec.voxel_size) {
    if (!(v > 0.0)) fail_spec("voxel sizes must be positive");
  }
  if (spec.shells.empty()) fail_spec("at least one shell is required");
  if (!(spec.s0 > 0.0)) fail_spec("s0 must be positive");
  if (!(spec.noise_sigma >= 0.0)) fail_spec("noise sigma must be non-negative");
  if (!(spec.tract_radius_mm > 0.0)) fail_spec("tract radius must be positive");

  GradientTable grad;
  for (const auto &shell : spec.shells) {
    if (!(shell.bval >= 0.0) || shell.count == 0) fail_spec("shells need b >= 0 and a positive count");
    if (shell.bval == 0.0) {
      for (std::size_t i = 0; i < shell.count; ++i) {
        grad.bvals.push_back(0.0);
        grad.bvecs.push_back({0.0, 0.0, 0.0});
      }
    } else {
      for (const auto &g : repulsion_directions(shell.count)) {
        grad.bvals.push_back(shell.bval);
        grad.bvecs.push_back(g);
      }
    }
  }

  const auto &d = spec.dims;
  const auto &vs = spec.voxel_size;
  const Vec3 mid{(static_cast<double>(d.x) - 1.0) * 0.5 * vs[0],
                 (static_cast<double>(d.y) - 1.0) * 0.5 * vs[1],
                 (static_cast<double>(d.z) - 1.0) * 0.5 * vs[2]};
  const Vec3 extent{(static_cast<double>(d.x) - 1.0) * vs[0], (static_cast<double>(d.y) - 1.0) * vs[1],
                    (static_cast<double>(d.z) - 1.0) * vs[2]};
  const double r_tube = spec.tract_radius_mm;

  Phantom ph{DwiSeries(d, vs, grad), Grid3<DiffusionTensor>(d), Mask(d, 0), Mask(d, 0), 0.0, mid, 0.0};

  double arc_r = 0.0;
  Vec3 arc_center = mid;
  double x0 = 0.0, x1 = 0.0;
  Vec3 fluid_center = mid;
  switch (spec.geometry) {
  case PhantomGeometry::UArc: {
    arc_r = spec.arc_radius_mm > 0.0 ? spec.arc_radius_mm : 0.3 * std::min(extent[0], extent[1]);
    arc_center = {mid[0], mid[1] - 0.5 * arc_r, mid[2]};
    if (arc_center[0] - arc_r - r_tube < 0.0 || arc_center[0] + arc_r + r_tube > extent[0] ||
        arc_center[1] + arc_r + r_tube > extent[1] || mid[2] - r_tube < 0.0 ||
        arc_r <= r_tube) {
      fail_spec("U-arc does not fit inside the grid");
    }
    ph.tract_length_mm = std::numbers::pi * arc_r;
    ph.center = arc_center;
    ph.arc_radius_mm = arc_r;
    fluid_center = arc_center;
    break;
  }
  case PhantomGeometry::StraightTract: {
    x0 = 4.0 * vs[0];
    x1 = extent[0] - 4.0 * vs[0];
    if (x1 - x0 < 2.0 * vs[0] || mid[1] - r_tube < 0.0 || mid[2] - r_tube < 0.0) {
      fail_spec("straight tract does not fit inside the grid");
    }
    ph.tract_length_mm = x1 - x0;
    fluid_center = {mid[0], mid[1] + r_tube + 2.0 * spec.fluid_radius_mm + vs[1], mid[2]};
    break;
  }
  case PhantomGeometry::IsotropicOnly:
    break;
  }

  const Vec3 &tev = spec.tissue_eigenvalues;
  const DiffusionTensor background{spec.background_diffusivity, spec.background_diffusivity,
                                   spec.background_diffusivity, 0, 0, 0, spec.s0};
  const DiffusionTensor fluid{spec.fluid_diffusivity, spec.fluid_diffusivity,
                              spec.fluid_diffusivity, 0, 0, 0, spec.s0};

  for (std::size_t k = 0; k < d.z; ++k) {
    for (std::size_t j = 0; j < d.y; ++j) {
      for (std::size_t i = 0; i < d.x; ++i) {
        const Vec3 p{static_cast<double>(i) * vs[0], static_cast<double>(j) * vs[1],
                     static_cast<double>(k) * vs[2]};
        std::optional<Vec3> tangent;
        if (spec.geometry == PhantomGeometry::UArc) {
          const double dx = p[0] - arc_center[0];
          const double dy = p[1] - arc_center[1];
          const double rho = std::hypot(dx, dy);
          const double dist = std::hypot(rho - arc_r, p[2] - arc_center[2]);
          if (dy >= 0.0 && dist <= r_tube && rho > 0.0) tangent = Vec3{-dy / rho, dx / rho, 0.0};
        } else if (spec.geometry == PhantomGeometry::StraightTract) {
          const double dist = std::hypot(p[1] - mid[1], p[2] - mid[2]);
          if (dist <= r_tube && p[0] >= x0 && p[0] <= x1) tangent = Vec3{1.0, 0.0, 0.0};
        }
        auto &t = ph.truth(i, j, k);
        if (tangent) {
          t = DiffusionTensor::from_eigen(tev, orthonormal_frame(*tangent), spec.s0);
          ph.tissue(i, j, k) = 1;
        } else if (spec.fluid_radius_mm > 0.0 && norm(p - fluid_center) <= spec.fluid_radius_mm) {
          t = fluid;
          ph.fluid(i, j, k) = 1;
        } else {
          t = background;
        }
      }
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  for (std::size_t n = 0; n < grad.size(); ++n) {
    auto vol = ph.series.volume(n);
    for (std::size_t idx = 0; idx < d.count(); ++idx) {
      const auto &t = ph.truth[idx];
      double s = predict_signal(t.s0, grad.bvals[n], grad.bvecs[n], t);
      if (spec.noise_sigma > 0.0) {
        const double re = s + noise(rng);
        const double im = noise(rng);
        s = std::sqrt(re * re + im * im);
      }
      vol[idx] = s;
    }
  }
  return ph;
}

} // namespace dmriqc
