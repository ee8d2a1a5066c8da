#include "dmriqc/numerics.hpp"

#include "dmriqc/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dmriqc {

auto GradientTable::validate() const -> void {
  if (bvals.size() != bvecs.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "gradient table has " + std::to_string(bvals.size()) + " b-values but " +
                    std::to_string(bvecs.size()) + " b-vectors");
  }
  for (std::size_t n = 0; n < bvals.size(); ++n) {
    if (!std::isfinite(bvals[n]) || bvals[n] < 0) {
      throw Error(ErrorCode::InvalidArgument, "b-value " + std::to_string(n) + " is negative or not finite");
    }
    const double len = norm(bvecs[n]);
    if (bvals[n] > 0 && std::fabs(len - 1.0) > 1e-3) {
      throw Error(ErrorCode::InvalidArgument, "b-vector " + std::to_string(n) + " is not unit length");
    }
  }
}

DwiSeries::DwiSeries(Dims3 dims, Vec3 voxel_size, GradientTable gradients)
    : dims_(dims), voxel_size_(voxel_size), gradients_(std::move(gradients)),
      data_(dims.count() * gradients_.size(), 0.0) {
  if (dims.count() == 0 || gradients_.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "DWI series needs non-empty dimensions");
  }
  gradients_.validate();
}

auto DwiSeries::set_gradients(GradientTable gradients) -> void {
  if (gradients.size() != gradients_.size()) {
    throw Error(ErrorCode::InvalidArgument, "replacement gradient table has a different length");
  }
  gradients.validate();
  gradients_ = std::move(gradients);
}

auto DiffusionTensor::from_eigen(const Vec3 &evals, const std::array<Vec3, 3> &evecs, double s0)
    -> DiffusionTensor {
  double m[3][3] = {};
  for (int k = 0; k < 3; ++k) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += evals[k] * evecs[k][r] * evecs[k][c];
    }
  }
  return {m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2], s0};
}

auto predict_signal(double s0, double b, const Vec3 &g, const DiffusionTensor &tensor) -> double {
  if (b == 0.0) return s0;
  return s0 * std::exp(-b * tensor.quadratic_form(g));
}

namespace {

auto design_row(double b, const Vec3 &g) -> Eigen::Matrix<double, 1, 7> {
  Eigen::Matrix<double, 1, 7> row;
  row << 1.0, -b * g[0] * g[0], -b * g[1] * g[1], -b * g[2] * g[2], -2.0 * b * g[0] * g[1],
      -2.0 * b * g[0] * g[2], -2.0 * b * g[1] * g[2];
  return row;
}

auto to_tensor(const Eigen::Matrix<double, 7, 1> &coef) -> DiffusionTensor {
  return {coef(1), coef(2), coef(3), coef(4), coef(5), coef(6), std::exp(coef(0))};
}

} // namespace

auto fit_tensor(const DwiSeries &series, const Mask &mask, const FitOptions &options)
    -> TensorFit {
  const auto &dims = series.dims();
  if (mask.dims() != dims) {
    throw Error(ErrorCode::ShapeMismatch, "mask grid differs from the DWI grid");
  }
  const auto &grad = series.gradients();
  TensorFit fit;
  std::size_t b0_count = 0;
  for (std::size_t n = 0; n < grad.size(); ++n) {
    if (grad.bvals[n] <= options.b_max) {
      fit.volumes_used.push_back(n);
      if (grad.bvals[n] <= options.b0_threshold) ++b0_count;
    }
  }
  const auto m = fit.volumes_used.size();
  if (m < 7 || b0_count == 0) {
    throw Error(ErrorCode::InsufficientDirections,
                std::to_string(m) + " volumes with b <= " + std::to_string(options.b_max) +
                    " (" + std::to_string(b0_count) +
                    " non-weighted); need at least 7 including a b=0");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(m), 7);
  for (std::size_t r = 0; r < m; ++r) {
    const auto n = fit.volumes_used[r];
    design.row(static_cast<Eigen::Index>(r)) = design_row(grad.bvals[n], grad.bvecs[n]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 7) {
    throw Error(ErrorCode::SingularDesign,
                "gradient scheme does not determine a tensor (design rank " +
                    std::to_string(qr.rank()) + " < 7)");
  }
  const Eigen::MatrixXd pinv =
      qr.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));

  fit.tensors = Grid3<DiffusionTensor>(dims);
  fit.rss = Grid3<double>(dims, 0.0);
  fit.mask = Mask(dims, 0);

  Eigen::VectorXd logs(static_cast<Eigen::Index>(m));
  std::vector<double> samples(m);
  for (std::size_t idx = 0; idx < dims.count(); ++idx) {
    if (!mask[idx]) continue;
    double b0_sum = 0.0;
    std::size_t b0_n = 0;
    bool has_nonpositive = false;
    bool finite = true;
    for (std::size_t r = 0; r < m; ++r) {
      const auto n = fit.volumes_used[r];
      samples[r] = series.volume(n)[idx];
      finite = finite && std::isfinite(samples[r]);
      if (grad.bvals[n] <= options.b0_threshold) {
        b0_sum += samples[r];
        ++b0_n;
      }
      if (samples[r] <= 0.0) has_nonpositive = true;
    }
    const double b0_mean = b0_sum / static_cast<double>(b0_n);
    if (!finite || !(b0_mean > 0.0)) {
      ++fit.failed_voxels;
      continue;
    }
    const double floor = 1e-6 * b0_mean;
    for (std::size_t r = 0; r < m; ++r) {
      logs(static_cast<Eigen::Index>(r)) = std::log(std::max(samples[r], floor));
    }

    Eigen::Matrix<double, 7, 1> coef;
    double rss = 0.0;
    if (!has_nonpositive) {
      coef = pinv * logs;
      rss = (design * coef - logs).squaredNorm();
    } else {
      // Non-positive samples carry zero weight: refit on the remaining rows.
      std::vector<Eigen::Index> keep;
      for (std::size_t r = 0; r < m; ++r) {
        if (samples[r] > 0.0) keep.push_back(static_cast<Eigen::Index>(r));
      }
      if (keep.size() < 7) {
        ++fit.failed_voxels;
        continue;
      }
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), 7);
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t r = 0; r < keep.size(); ++r) {
        sub.row(static_cast<Eigen::Index>(r)) = design.row(keep[r]);
        rhs(static_cast<Eigen::Index>(r)) = logs(keep[r]);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> sub_qr(sub);
      if (sub_qr.rank() < 7) {
        ++fit.failed_voxels;
        continue;
      }
      coef = sub_qr.solve(rhs);
      rss = (sub * coef - rhs).squaredNorm();
    }
    fit.tensors[idx] = to_tensor(coef);
    fit.rss[idx] = rss;
    fit.mask[idx] = 1;
  }
  return fit;
}

namespace {

auto eigenvector_for(const DiffusionTensor &t, double lambda) -> Vec3 {
  const Vec3 rows[3] = {{t.dxx - lambda, t.dxy, t.dxz},
                        {t.dxy, t.dyy - lambda, t.dyz},
                        {t.dxz, t.dyz, t.dzz - lambda}};
  double scale = 0.0;
  std::size_t big_row = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    const double n = norm(rows[r]);
    if (n > scale) {
      scale = n;
      big_row = r;
    }
  }
  if (scale == 0.0) return {1.0, 0.0, 0.0};

  const Vec3 c[3] = {cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])};
  std::size_t best = 0;
  double best_norm = norm(c[0]);
  for (std::size_t i = 1; i < 3; ++i) {
    const double n = norm(c[i]);
    if (n > best_norm) {
      best_norm = n;
      best = i;
    }
  }
  if (best_norm > 1e-10 * scale * scale) return scaled(c[best], 1.0 / best_norm);

  // Rank-one shift: the eigenspace is the plane orthogonal to the dominant row.
  const Vec3 &r = rows[big_row];
  std::size_t axis = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (std::fabs(r[k]) < std::fabs(r[axis])) axis = k;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  const Vec3 v = cross(r, e);
  return scaled(v, 1.0 / norm(v));
}

auto any_orthogonal(const Vec3 &v) -> Vec3 {
  std::size_t axis = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (std::fabs(v[k]) < std::fabs(v[axis])) axis = k;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  const Vec3 w = cross(v, e);
  return scaled(w, 1.0 / norm(w));
}

// The trigonometric solve loses digits when eigenvalues nearly coincide. Vᵀ A V
// is then diagonal up to that error; a couple of Jacobi sweeps on it restore
// full precision without changing the closed-form result otherwise.
auto polish(const DiffusionTensor &t, EigenSystem &es) -> void {
  const double a[3][3] = {{t.dxx, t.dxy, t.dxz}, {t.dxy, t.dyy, t.dyz}, {t.dxz, t.dyz, t.dzz}};
  double v[3][3];
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 3; ++k) v[k][i] = es.vectors[i][k];
  }
  double b[3][3] = {};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t l = 0; l < 3; ++l) s += v[k][i] * a[k][l] * v[l][j];
      }
      b[i][j] = s;
    }
  }
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t q = p + 1; q < 3; ++q) {
        if (b[p][q] == 0.0) continue;
        const double theta = (b[q][q] - b[p][p]) / (2.0 * b[p][q]);
        const double tn = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tn * tn + 1.0), sn = tn * c;
        for (std::size_t k = 0; k < 3; ++k) {
          const double bkp = b[k][p], bkq = b[k][q];
          b[k][p] = c * bkp - sn * bkq;
          b[k][q] = sn * bkp + c * bkq;
        }
        for (std::size_t k = 0; k < 3; ++k) {
          const double bpk = b[p][k], bqk = b[q][k];
          b[p][k] = c * bpk - sn * bqk;
          b[q][k] = sn * bpk + c * bqk;
        }
        for (std::size_t k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - sn * vkq;
          v[k][q] = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return b[x][x] > b[y][y]; });
  for (std::size_t i = 0; i < 3; ++i) {
    es.values[i] = b[order[i]][order[i]];
    for (std::size_t k = 0; k < 3; ++k) es.vectors[i][k] = v[k][order[i]];
  }
}

} // namespace

auto eigen_symmetric(const DiffusionTensor &t) -> EigenSystem {
  EigenSystem es;
  const double p1 = t.dxy * t.dxy + t.dxz * t.dxz + t.dyz * t.dyz;
  if (p1 == 0.0) {
    const double diag[3] = {t.dxx, t.dyy, t.dzz};
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return diag[a] > diag[b]; });
    for (std::size_t i = 0; i < 3; ++i) {
      es.values[i] = diag[order[i]];
      es.vectors[i] = {0.0, 0.0, 0.0};
      es.vectors[i][order[i]] = 1.0;
    }
  } else {
    const double q = (t.dxx + t.dyy + t.dzz) / 3.0;
    const double p2 = (t.dxx - q) * (t.dxx - q) + (t.dyy - q) * (t.dyy - q) +
                      (t.dzz - q) * (t.dzz - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const double b11 = (t.dxx - q) / p, b22 = (t.dyy - q) / p, b33 = (t.dzz - q) / p;
    const double b12 = t.dxy / p, b13 = t.dxz / p, b23 = t.dyz / p;
    const double det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                       b13 * (b12 * b23 - b22 * b13);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    es.values[0] = q + 2.0 * p * std::cos(phi);
    es.values[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    es.values[1] = 3.0 * q - es.values[0] - es.values[2];

    es.vectors[0] = eigenvector_for(t, es.values[0]);
    Vec3 v3 = eigenvector_for(t, es.values[2]);
    v3 = v3 - scaled(es.vectors[0], dot(v3, es.vectors[0]));
    const double n3 = norm(v3);
    v3 = n3 > 1e-8 ? scaled(v3, 1.0 / n3) : any_orthogonal(es.vectors[0]);
    es.vectors[2] = v3;
    es.vectors[1] = cross(v3, es.vectors[0]);
    polish(t, es);
  }
  // Keep the set right-handed: v0 x v1 == v2.
  if (dot(cross(es.vectors[0], es.vectors[1]), es.vectors[2]) < 0.0) {
    es.vectors[2] = scaled(es.vectors[2], -1.0);
  }
  return es;
}

auto mean_diffusivity(const Vec3 &l) -> double { return (l[0] + l[1] + l[2]) / 3.0; }

auto fractional_anisotropy(const Vec3 &l) -> double {
  const double md = mean_diffusivity(l);
  const double dev = (l[0] - md) * (l[0] - md) + (l[1] - md) * (l[1] - md) + (l[2] - md) * (l[2] - md);
  const double mag = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
  if (mag == 0.0) return 0.0;
  return std::clamp(std::sqrt(1.5) * std::sqrt(dev) / std::sqrt(mag), 0.0, 1.0);
}

auto sign_normalized(Vec3 v) -> Vec3 {
  std::size_t big = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (std::fabs(v[k]) > std::fabs(v[big])) big = k;
  }
  return v[big] < 0.0 ? scaled(v, -1.0) : v;
}

auto scalar_maps(const Grid3<DiffusionTensor> &tensors, const Mask &mask, const Vec3 &voxel_size)
    -> ScalarMaps {
  const auto &dims = tensors.dims();
  if (mask.dims() != dims) throw Error(ErrorCode::ShapeMismatch, "mask grid differs from tensor grid");
  ScalarMaps maps;
  maps.fa = Grid3<double>(dims, 0.0);
  maps.md = Grid3<double>(dims, 0.0);
  maps.principal_dir = Grid3<Vec3>(dims, Vec3{0.0, 0.0, 0.0});
  maps.eigenvalues = Grid3<Vec3>(dims, Vec3{0.0, 0.0, 0.0});
  maps.mask = mask;
  maps.voxel_size = voxel_size;
  for (std::size_t idx = 0; idx < dims.count(); ++idx) {
    if (!mask[idx]) continue;
    const auto &t = tensors[idx];
    const auto comps = t.components();
    if (!std::all_of(comps.begin(), comps.end(), [](double v) { return std::isfinite(v); })) {
      maps.mask[idx] = 0;
      ++maps.nonfinite_removed;
      continue;
    }
    const auto es = eigen_symmetric(t);
    maps.eigenvalues[idx] = es.values;
    maps.md[idx] = mean_diffusivity(es.values);
    maps.fa[idx] = fractional_anisotropy(es.values);
    maps.principal_dir[idx] = sign_normalized(es.vectors[0]);
    if (es.values[2] < 0.0) ++maps.negative_eigenvalue_voxels;
  }
  return maps;
}

auto chi_square_slices(const DwiSeries &series, const TensorFit &fit, const Mask &mask,
                       double b_max) -> ChiSquareSlices {
  const auto &dims = series.dims();
  if (fit.tensors.dims() != dims || mask.dims() != dims) {
    throw Error(ErrorCode::ShapeMismatch, "tensor map or mask grid differs from the DWI grid");
  }
  constexpr double kEps = 1e-6;
  const auto &grad = series.gradients();
  ChiSquareSlices out;
  for (std::size_t n = 0; n < grad.size(); ++n) {
    if (grad.bvals[n] <= b_max) out.volumes.push_back(n);
  }
  out.per_slice.resize(dims.z);
  out.slice_mean.resize(dims.z);
  for (std::size_t k = 0; k < dims.z; ++k) {
    bool any = false;
    for (std::size_t j = 0; j < dims.y && !any; ++j) {
      for (std::size_t i = 0; i < dims.x && !any; ++i) {
        any = mask(i, j, k) && fit.mask(i, j, k);
      }
    }
    if (!any) continue;
    std::vector<double> values;
    values.reserve(out.volumes.size());
    CompensatedSum mean_acc;
    for (auto n : out.volumes) {
      CompensatedSum acc;
      for (std::size_t j = 0; j < dims.y; ++j) {
        for (std::size_t i = 0; i < dims.x; ++i) {
          if (!mask(i, j, k) || !fit.mask(i, j, k)) continue;
          const auto &t = fit.tensors(i, j, k);
          const double pred = predict_signal(t.s0, grad.bvals[n], grad.bvecs[n], t);
          const double diff = series.at(i, j, k, n) - pred;
          acc.add(diff * diff / std::max(pred, kEps));
        }
      }
      values.push_back(acc.value());
      mean_acc.add(acc.value());
    }
    out.slice_mean[k] = values.empty() ? 0.0 : mean_acc.value() / static_cast<double>(values.size());
    out.per_slice[k] = std::move(values);
  }
  return out;
}

auto Streamline::length() const -> double {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += norm(points[i] - points[i - 1]);
  return len;
}

namespace {

class FieldSampler {
public:
  explicit FieldSampler(const ScalarMaps &maps) : maps_(maps) {}

  [[nodiscard]] auto nearest_in_mask(const Vec3 &pos) const -> bool {
    const auto &d = maps_.mask.dims();
    const auto i = static_cast<std::ptrdiff_t>(std::lround(pos[0] / maps_.voxel_size[0]));
    const auto j = static_cast<std::ptrdiff_t>(std::lround(pos[1] / maps_.voxel_size[1]));
    const auto k = static_cast<std::ptrdiff_t>(std::lround(pos[2] / maps_.voxel_size[2]));
    if (!d.contains(i, j, k)) return false;
    return maps_.mask(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                      static_cast<std::size_t>(k)) != 0;
  }

  [[nodiscard]] auto nearest_dir(const Vec3 &pos) const -> Vec3 {
    const auto i = static_cast<std::size_t>(std::lround(pos[0] / maps_.voxel_size[0]));
    const auto j = static_cast<std::size_t>(std::lround(pos[1] / maps_.voxel_size[1]));
    const auto k = static_cast<std::size_t>(std::lround(pos[2] / maps_.voxel_size[2]));
    return maps_.principal_dir(i, j, k);
  }

  template <class F> auto for_corners(const Vec3 &pos, F &&f) const -> void {
    const auto &d = maps_.mask.dims();
    double c[3];
    std::ptrdiff_t base[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = pos[a] / maps_.voxel_size[a];
      base[a] = static_cast<std::ptrdiff_t>(std::floor(c[a]));
      c[a] -= static_cast<double>(base[a]);
    }
    for (int corner = 0; corner < 8; ++corner) {
      const std::ptrdiff_t i = base[0] + (corner & 1);
      const std::ptrdiff_t j = base[1] + ((corner >> 1) & 1);
      const std::ptrdiff_t k = base[2] + ((corner >> 2) & 1);
      const double w = ((corner & 1) ? c[0] : 1.0 - c[0]) *
                       (((corner >> 1) & 1) ? c[1] : 1.0 - c[1]) *
                       (((corner >> 2) & 1) ? c[2] : 1.0 - c[2]);
      if (w == 0.0 || !d.contains(i, j, k)) continue;
      f(maps_.fa.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                       static_cast<std::size_t>(k)),
        w);
    }
  }

  [[nodiscard]] auto fa(const Vec3 &pos) const -> double {
    double acc = 0.0;
    for_corners(pos, [&](std::size_t idx, double w) { acc += w * maps_.fa[idx]; });
    return acc;
  }

  /// Weighted sum of corner directions, each flipped onto `reference`.
  [[nodiscard]] auto direction(const Vec3 &pos, const Vec3 &reference) const
      -> std::optional<Vec3> {
    Vec3 acc{0.0, 0.0, 0.0};
    for_corners(pos, [&](std::size_t idx, double w) {
      if (!maps_.mask[idx]) return;
      const Vec3 &v = maps_.principal_dir[idx];
      acc = acc + scaled(v, dot(v, reference) < 0.0 ? -w : w);
    });
    const double n = norm(acc);
    if (!(n > 1e-12)) return std::nullopt;
    return scaled(acc, 1.0 / n);
  }

private:
  const ScalarMaps &maps_;
};

auto track_one_way(const FieldSampler &field, const Vec3 &seed, const Vec3 &initial,
                   const TrackingOptions &opt) -> std::vector<Vec3> {
  std::vector<Vec3> points;
  const double cos_stop = std::cos(opt.angle_stop_deg * std::numbers::pi / 180.0);
  Vec3 pos = seed;
  Vec3 prev = initial;
  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    auto dir = field.direction(pos, prev);
    if (!dir) break;
    if (dot(*dir, prev) < cos_stop) break;
    const Vec3 next = pos + scaled(*dir, opt.step_mm);
    if (!field.nearest_in_mask(next)) break;
    if (field.fa(next) < opt.fa_stop) break;
    points.push_back(next);
    prev = *dir;
    pos = next;
  }
  return points;
}

} // namespace

auto track_streamlines(const ScalarMaps &maps, std::span<const Vec3> seeds,
                       const TrackingOptions &options) -> std::vector<Streamline> {
  if (!(options.step_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");
  const FieldSampler field(maps);
  std::vector<Streamline> out;
  out.reserve(seeds.size());
  for (const auto &seed : seeds) {
    if (!field.nearest_in_mask(seed)) {
      throw Error(ErrorCode::SeedOutsideMask,
                  "seed (" + std::to_string(seed[0]) + ", " + std::to_string(seed[1]) + ", " +
                      std::to_string(seed[2]) + ") is outside the mask");
    }
    Streamline sl;
    if (field.fa(seed) < options.fa_stop) {
      sl.points.push_back(seed);
      out.push_back(std::move(sl));
      continue;
    }
    auto start = field.direction(seed, field.nearest_dir(seed));
    if (!start) {
      sl.points.push_back(seed);
      out.push_back(std::move(sl));
      continue;
    }
    auto forward = track_one_way(field, seed, *start, options);
    auto backward = track_one_way(field, seed, scaled(*start, -1.0), options);
    sl.points.reserve(forward.size() + backward.size() + 1);
    sl.points.assign(backward.rbegin(), backward.rend());
    sl.points.push_back(seed);
    sl.points.insert(sl.points.end(), forward.begin(), forward.end());
    out.push_back(std::move(sl));
  }
  return out;
}

auto seed_lattice(const ScalarMaps &maps, std::size_t stride, double fa_min) -> std::vector<Vec3> {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "seed stride must be positive");
  const auto &d = maps.mask.dims();
  std::vector<Vec3> seeds;
  for (std::size_t k = 0; k < d.z; k += stride) {
    for (std::size_t j = 0; j < d.y; j += stride) {
      for (std::size_t i = 0; i < d.x; i += stride) {
        if (!maps.mask(i, j, k) || maps.fa(i, j, k) < fa_min) continue;
        seeds.push_back({static_cast<double>(i) * maps.voxel_size[0],
                         static_cast<double>(j) * maps.voxel_size[1],
                         static_cast<double>(k) * maps.voxel_size[2]});
      }
    }
  }
  return seeds;
}

} // namespace dmriqc
