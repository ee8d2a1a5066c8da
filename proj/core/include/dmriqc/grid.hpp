#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dmriqc {

using Vec3 = std::array<double, 3>;

constexpr auto dot(const Vec3 &a, const Vec3 &b) noexcept -> double {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline auto norm(const Vec3 &a) noexcept -> double { return std::sqrt(dot(a, a)); }
constexpr auto cross(const Vec3 &a, const Vec3 &b) noexcept -> Vec3 {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
constexpr auto scaled(const Vec3 &a, double s) noexcept -> Vec3 {
  return {a[0] * s, a[1] * s, a[2] * s};
}
constexpr auto operator+(const Vec3 &a, const Vec3 &b) noexcept -> Vec3 {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
constexpr auto operator-(const Vec3 &a, const Vec3 &b) noexcept -> Vec3 {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

struct Dims3 {
  std::size_t x = 0, y = 0, z = 0;

  [[nodiscard]] constexpr auto count() const noexcept -> std::size_t { return x * y * z; }
  [[nodiscard]] constexpr auto contains(std::ptrdiff_t i, std::ptrdiff_t j,
                                        std::ptrdiff_t k) const noexcept -> bool {
    return i >= 0 && j >= 0 && k >= 0 && static_cast<std::size_t>(i) < x &&
           static_cast<std::size_t>(j) < y && static_cast<std::size_t>(k) < z;
  }
  auto operator==(const Dims3 &) const -> bool = default;
};

/// Dense 3D array, x fastest (NIfTI order).
template <class T> class Grid3 {
public:
  Grid3() = default;
  explicit Grid3(Dims3 dims, T fill = T{}) : dims_(dims), data_(dims.count(), fill) {}

  [[nodiscard]] auto dims() const noexcept -> const Dims3 & { return dims_; }
  [[nodiscard]] auto size() const noexcept -> std::size_t { return data_.size(); }
  [[nodiscard]] auto empty() const noexcept -> bool { return data_.empty(); }

  [[nodiscard]] auto index(std::size_t i, std::size_t j, std::size_t k) const noexcept
      -> std::size_t {
    return i + dims_.x * (j + dims_.y * k);
  }
  auto operator()(std::size_t i, std::size_t j, std::size_t k) -> T & {
    return data_[index(i, j, k)];
  }
  auto operator()(std::size_t i, std::size_t j, std::size_t k) const -> const T & {
    return data_[index(i, j, k)];
  }
  auto operator[](std::size_t idx) -> T & { return data_[idx]; }
  auto operator[](std::size_t idx) const -> const T & { return data_[idx]; }

  [[nodiscard]] auto data() noexcept -> std::vector<T> & { return data_; }
  [[nodiscard]] auto data() const noexcept -> const std::vector<T> & { return data_; }

  auto operator==(const Grid3 &) const -> bool = default;

private:
  Dims3 dims_{};
  std::vector<T> data_;
};

using Mask = Grid3<std::uint8_t>;

inline auto count_mask(const Mask &mask) -> std::size_t {
  std::size_t n = 0;
  for (auto v : mask.data()) n += v != 0;
  return n;
}

/// Neumaier-compensated accumulator; the result does not depend on how the
/// terms were grouped beyond the last few ulps.
class CompensatedSum {
public:
  auto add(double v) noexcept -> void {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] auto value() const noexcept -> double { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace dmriqc
