#include "dmriqc/error.hpp"
#include "dmriqc/numerics.hpp"
#include "dmriqc/phantom.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include <random>

using namespace dmriqc;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

auto big_fa(const Vec3 &l) -> double {
  const Big a(l[0]), b(l[1]), c(l[2]);
  const Big num = (a - b) * (a - b) + (b - c) * (b - c) + (c - a) * (c - a);
  const Big den = a * a + b * b + c * c;
  if (den == 0) return 0.0;
  return static_cast<double>(boost::multiprecision::sqrt(num / (2 * den)));
}

auto big_md(const Vec3 &l) -> double { return static_cast<double>((Big(l[0]) + Big(l[1]) + Big(l[2])) / 3); }

auto random_rotation(std::mt19937_64 &rng) -> std::array<Vec3, 3> {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 a{n(rng), n(rng), n(rng)};
  a = scaled(a, 1.0 / norm(a));
  Vec3 b{n(rng), n(rng), n(rng)};
  b = b - scaled(a, dot(a, b));
  b = scaled(b, 1.0 / norm(b));
  return {a, b, cross(a, b)};
}

auto tensor_norm(const DiffusionTensor &t) -> double {
  const auto c = t.components();
  return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + 2 * (c[3] * c[3] + c[4] * c[4] + c[5] * c[5]));
}

auto max_component_error(const DiffusionTensor &a, const DiffusionTensor &b) -> double {
  const auto x = a.components(), y = b.components();
  double m = 0;
  for (std::size_t i = 0; i < 6; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

} // namespace

TEST_CASE("noiseless phantom refit recovers the generating tensors") {
  PhantomSpec spec;
  spec.dims = {16, 16, 8};
  const auto ph = generate_phantom(spec);
  const Mask all(spec.dims, 1);
  const auto fit = fit_tensor(ph.series, all);
  CHECK(fit.failed_voxels == 0);
  CHECK(fit.volumes_used.size() == 31);
  double worst = 0;
  for (std::size_t i = 0; i < fit.tensors.size(); ++i) {
    worst = std::max(worst, max_component_error(fit.tensors[i], ph.truth[i]) / tensor_norm(ph.truth[i]));
    CHECK(fit.tensors[i].s0 == doctest::Approx(spec.s0).epsilon(1e-9));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("fit errors name the gradient problem") {
  PhantomSpec spec;
  spec.dims = {4, 4, 4};
  spec.geometry = PhantomGeometry::IsotropicOnly;
  spec.shells = {{0.0, 1}, {1000.0, 6}};
  auto ph = generate_phantom(spec);
  const Mask all(spec.dims, 1);
  FitOptions opt;
  opt.b_max = 500;
  CHECK_THROWS_WITH_AS(fit_tensor(ph.series, all, opt), doctest::Contains("need at least 7"), Error);

  auto g = ph.series.gradients();
  for (std::size_t i = 1; i < g.size(); ++i) g.bvecs[i] = {1.0, 0.0, 0.0};
  ph.series.set_gradients(g);
  try {
    fit_tensor(ph.series, all);
    FAIL("collinear directions must not fit");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
  CHECK_THROWS_AS(fit_tensor(ph.series, Mask({2, 2, 2}, 1)), Error);
}

TEST_CASE("property: eigen-decomposition of random tensors") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> ev(0.05e-3, 3e-3);
  for (int trial = 0; trial < 2000; ++trial) {
    Vec3 l{ev(rng), ev(rng), ev(rng)};
    // Force near and exact degeneracy now and then.
    if (trial % 7 == 0) l[1] = l[0];
    if (trial % 11 == 0) l[2] = l[1] * (1 + 1e-12);
    std::sort(l.begin(), l.end(), std::greater<>());
    const auto t = DiffusionTensor::from_eigen(l, random_rotation(rng), 1.0);
    const auto es = eigen_symmetric(t);
    for (std::size_t i = 0; i < 3; ++i) CHECK(es.values[i] == doctest::Approx(l[i]).epsilon(1e-9));
    CHECK(es.values[0] >= es.values[1]);
    CHECK(es.values[1] >= es.values[2]);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(norm(es.vectors[i]) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t j = i + 1; j < 3; ++j) CHECK(std::fabs(dot(es.vectors[i], es.vectors[j])) < 1e-9);
    }
    CHECK(dot(cross(es.vectors[0], es.vectors[1]), es.vectors[2]) == doctest::Approx(1.0).epsilon(1e-9));
    // Reconstruction: V diag(l) V^T.
    const auto back = DiffusionTensor::from_eigen(es.values, es.vectors, 1.0);
    CHECK(max_component_error(back, t) < 1e-15);
  }
}

TEST_CASE("FA and MD match the 50-digit oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ev(0.0, 3e-3);
  for (int trial = 0; trial < 5000; ++trial) {
    Vec3 l{ev(rng), ev(rng), ev(rng)};
    std::sort(l.begin(), l.end(), std::greater<>());
    CHECK(std::fabs(fractional_anisotropy(l) - big_fa(l)) < 1e-9);
    CHECK(std::fabs(mean_diffusivity(l) - big_md(l)) < 1e-9 * std::max(1.0, big_md(l)));
  }
  CHECK(fractional_anisotropy({1e-3, 1e-3, 1e-3}) == 0.0);
  CHECK(fractional_anisotropy({1e-3, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(fractional_anisotropy({0.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("scalar maps on the phantom") {
  PhantomSpec spec;
  spec.dims = {16, 16, 8};
  const auto ph = generate_phantom(spec);
  const Mask all(spec.dims, 1);
  const auto maps = scalar_maps(ph.truth, all);
  const auto &l = spec.tissue_eigenvalues;
  for (std::size_t i = 0; i < maps.fa.size(); ++i) {
    if (ph.tissue[i]) {
      CHECK(maps.fa[i] == doctest::Approx(big_fa(l)).epsilon(1e-9));
    } else if (!ph.fluid[i]) {
      CHECK(maps.fa[i] < 1e-9);
      CHECK(maps.md[i] == doctest::Approx(spec.background_diffusivity));
    }
  }
  CHECK(maps.nonfinite_removed == 0);
}

TEST_CASE("non-finite or negative tensors are reported, not hidden") {
  Grid3<DiffusionTensor> t({2, 1, 1});
  t[0] = DiffusionTensor::from_eigen({1e-3, 5e-4, -1e-4}, {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}, 1);
  t[1].dxx = std::nan("");
  const auto maps = scalar_maps(t, Mask({2, 1, 1}, 1));
  CHECK(maps.negative_eigenvalue_voxels == 1);
  CHECK(maps.nonfinite_removed == 1);
  CHECK(maps.mask[1] == 0);
}

TEST_CASE("chi-square is zero on a noiseless refit and grows with corruption") {
  PhantomSpec spec;
  spec.dims = {16, 16, 10};
  auto ph = generate_phantom(spec);
  const Mask all(spec.dims, 1);
  auto fit = fit_tensor(ph.series, all);
  auto chi = chi_square_slices(ph.series, fit, all);
  REQUIRE(chi.per_slice.size() == 10);
  for (const auto &m : chi.slice_mean) {
    REQUIRE(m.has_value());
    CHECK(*m < 1e-9);
  }
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) ph.series.at(i, j, 5, 7) *= 1.5;
  }
  fit = fit_tensor(ph.series, all);
  chi = chi_square_slices(ph.series, fit, all);
  for (std::size_t z = 0; z < 10; ++z) {
    if (z != 5) CHECK(*chi.slice_mean[z] < *chi.slice_mean[5]);
  }
  Mask half(spec.dims, 0);
  for (std::size_t i = 0; i < 16; ++i) half(i, 0, 0) = 1;
  chi = chi_square_slices(ph.series, fit, half);
  CHECK(chi.slice_mean[0].has_value());
  CHECK_FALSE(chi.slice_mean[1].has_value());
}

TEST_CASE("tracking follows a straight tract end to end") {
  PhantomSpec spec;
  spec.dims = {24, 12, 12};
  spec.geometry = PhantomGeometry::StraightTract;
  const auto ph = generate_phantom(spec);
  const auto maps = scalar_maps(ph.truth, ph.tissue);
  const std::vector<Vec3> seeds{ph.center};
  const auto lines = track_streamlines(maps, seeds);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].length() > 0.8 * ph.tract_length_mm);
  for (const auto &p : lines[0].points) CHECK(std::fabs(p[1] - ph.center[1]) < 1e-9);
  const std::vector<Vec3> outside{{0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(track_streamlines(maps, outside), Error);
  TrackingOptions bad;
  bad.step_mm = 0;
  CHECK_THROWS_AS(track_streamlines(maps, seeds, bad), Error);
  CHECK_FALSE(seed_lattice(maps, 2, 0.2).empty());
  CHECK(seed_lattice(maps, 2, 1.1).empty());
}

TEST_CASE("signal model and helpers") {
  DiffusionTensor t;
  t.dxx = 1e-3;
  CHECK(predict_signal(100, 1000, {1, 0, 0}, t) == doctest::Approx(100 * std::exp(-1.0)));
  CHECK(predict_signal(100, 1000, {0, 1, 0}, t) == doctest::Approx(100));
  CHECK(sign_normalized({0.1, -0.9, 0.2}) == Vec3{-0.1, 0.9, -0.2});
  Streamline s{{{0, 0, 0}, {3, 4, 0}, {3, 4, 1}}};
  CHECK(s.length() == doctest::Approx(6.0));
  GradientTable bad{{0.0, 1000.0}, {{0, 0, 0}, {0.5, 0, 0}}};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("property: scalar_maps eigenvalues agree with an iterative solver") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2e-3, 2e-3);
  Grid3<DiffusionTensor> t({1000, 1, 1});
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 1.0};
  }
  const auto maps = scalar_maps(t, Mask(t.dims(), 1));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto &d = t[i];
    Eigen::Matrix3d m;
    m << d.dxx, d.dxy, d.dxz, d.dxy, d.dyy, d.dyz, d.dxz, d.dyz, d.dzz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m);
    const auto ev = solver.eigenvalues(); // ascending
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::fabs(maps.eigenvalues[i][k] - ev(2 - static_cast<Eigen::Index>(k))) < 1e-9);
    }
    // Principal direction spans the same line as the solver's.
    const Eigen::Vector3d v = solver.eigenvectors().col(2);
    const Vec3 &p = maps.principal_dir[i];
    CHECK(std::fabs(std::fabs(p[0] * v(0) + p[1] * v(1) + p[2] * v(2)) - 1.0) < 1e-6);
  }
}

TEST_CASE("property: FA is scale invariant and MD scales linearly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ev(1e-5, 3e-3), k(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 l{ev(rng), ev(rng), ev(rng)};
    const double s = k(rng);
    const Vec3 ls = scaled(l, s);
    CHECK(fractional_anisotropy(ls) == doctest::Approx(fractional_anisotropy(l)).epsilon(1e-12));
    CHECK(mean_diffusivity(ls) == doctest::Approx(s * mean_diffusivity(l)).epsilon(1e-12));
  }
}
