#include "dmriqc/render.hpp"

#include "dmriqc/error.hpp"
#include "dmriqc/io.hpp"
#include "font.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <zlib.h>

namespace dmriqc {

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), rgb(w * h * 3) {
  for (std::size_t i = 0; i < w * h; ++i) std::copy(fill.begin(), fill.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
}

auto Image::pixel(std::size_t x, std::size_t y) const -> Rgb {
  const auto i = 3 * (y * width + x);
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

auto Image::set(std::size_t x, std::size_t y, Rgb c) -> void {
  const auto i = 3 * (y * width + x);
  rgb[i] = c[0];
  rgb[i + 1] = c[1];
  rgb[i + 2] = c[2];
}

namespace {

auto put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) -> void {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

auto put_chunk(std::vector<std::uint8_t> &out, const char *type, std::span<const std::uint8_t> data) -> void {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const auto start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

auto to_byte(double v) -> std::uint8_t {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct SliceView {
  std::size_t width = 0;
  std::size_t height = 0;
};

auto slice_extent(const Dims3 &d, Plane plane) -> std::size_t {
  switch (plane) {
  case Plane::Axial: return d.z;
  case Plane::Coronal: return d.y;
  case Plane::Sagittal: return d.x;
  }
  return 0;
}

auto view_of(const Dims3 &d, Plane plane) -> SliceView {
  switch (plane) {
  case Plane::Axial: return {d.x, d.y};
  case Plane::Coronal: return {d.x, d.z};
  case Plane::Sagittal: return {d.y, d.z};
  }
  return {};
}

/// Voxel shown at display column `c`, row `r` (row 0 on top).
auto voxel_at(const Dims3 &d, Plane plane, std::size_t s, std::size_t c, std::size_t r) -> std::array<std::size_t, 3> {
  switch (plane) {
  case Plane::Axial: return {c, d.y - 1 - r, s};
  case Plane::Coronal: return {c, s, d.z - 1 - r};
  case Plane::Sagittal: return {s, c, d.z - 1 - r};
  }
  return {0, 0, 0};
}

struct Window {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] auto gray(double v) const -> std::uint8_t {
    if (!(hi > lo)) {
      if (v > hi) return 255;
      if (v < lo) return 0;
      return 128;
    }
    return to_byte(255.0 * std::clamp((v - lo) / (hi - lo), 0.0, 1.0));
  }
};

auto window_of(const Grid3<double> &v, const RenderSpec &spec) -> Window {
  if (spec.window) return {(*spec.window)[0], (*spec.window)[1]};
  std::vector<double> finite_values;
  finite_values.reserve(v.size());
  for (double x : v.data()) {
    if (std::isfinite(x)) finite_values.push_back(x);
  }
  if (finite_values.empty()) return {0.0, 0.0};
  return {percentile(finite_values, spec.low_percentile), percentile(std::move(finite_values), spec.high_percentile)};
}

struct MontageGrid {
  std::vector<std::size_t> slices;
  SliceView view;
  std::size_t cols = 1;
  std::size_t rows = 1;
  std::size_t scale = 1;
};

auto montage_grid(const Dims3 &d, const RenderSpec &spec) -> MontageGrid {
  if (d.count() == 0) throw Error(ErrorCode::EmptyVolume, "cannot render an empty volume");
  MontageGrid g;
  g.slices = montage_slices(slice_extent(d, spec.plane), spec);
  if (g.slices.empty()) throw Error(ErrorCode::EmptyVolume, "no slices selected");
  g.view = view_of(d, spec.plane);
  g.cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(g.slices.size()))));
  g.rows = (g.slices.size() + g.cols - 1) / g.cols;
  g.scale = std::max<std::size_t>(1, spec.scale);
  return g;
}

template <class F> auto paint_montage(const Dims3 &d, const RenderSpec &spec, F &&color) -> Image {
  const auto g = montage_grid(d, spec);
  const auto pw = g.view.width * g.scale, ph = g.view.height * g.scale;
  Image img(g.cols * pw, g.rows * ph);
  for (std::size_t n = 0; n < g.slices.size(); ++n) {
    const auto ox = (n % g.cols) * pw, oy = (n / g.cols) * ph;
    for (std::size_t r = 0; r < g.view.height; ++r) {
      for (std::size_t c = 0; c < g.view.width; ++c) {
        const auto [i, j, k] = voxel_at(d, spec.plane, g.slices[n], c, r);
        const Rgb px = color(i, j, k);
        for (std::size_t dy = 0; dy < g.scale; ++dy) {
          for (std::size_t dx = 0; dx < g.scale; ++dx) img.set(ox + c * g.scale + dx, oy + r * g.scale + dy, px);
        }
      }
    }
  }
  return img;
}

auto splitmix64(std::uint64_t x) -> std::uint64_t {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

auto hsv(double h, double s, double v) -> Rgb {
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int sector = static_cast<int>(hh);
  const double f = hh - sector;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (sector) {
  case 0: r = v, g = t, b = p; break;
  case 1: r = q, g = v, b = p; break;
  case 2: r = p, g = v, b = t; break;
  case 3: r = p, g = q, b = v; break;
  case 4: r = t, g = p, b = v; break;
  default: r = v, g = p, b = q; break;
  }
  return {to_byte(255 * r), to_byte(255 * g), to_byte(255 * b)};
}

auto in_plane(const DiffusionTensor &t, Plane plane) -> std::array<double, 3> {
  switch (plane) {
  case Plane::Axial: return {t.dxx, t.dxy, t.dyy};
  case Plane::Coronal: return {t.dxx, t.dxz, t.dzz};
  case Plane::Sagittal: return {t.dyy, t.dyz, t.dzz};
  }
  return {0, 0, 0};
}

auto resample_to_height(const Image &img, std::size_t height) -> Image {
  if (img.height == height || img.height == 0) return img;
  const auto width = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(img.width) * static_cast<double>(height) /
                                              static_cast<double>(img.height))));
  Image out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto sy = std::min(img.height - 1, y * img.height / height);
    for (std::size_t x = 0; x < width; ++x) out.set(x, y, img.pixel(std::min(img.width - 1, x * img.width / width), sy));
  }
  return out;
}

auto blit(Image &dst, const Image &src, std::size_t ox, std::size_t oy) -> void {
  for (std::size_t y = 0; y < src.height && oy + y < dst.height; ++y) {
    for (std::size_t x = 0; x < src.width && ox + x < dst.width; ++x) dst.set(ox + x, oy + y, src.pixel(x, y));
  }
}

} // namespace

auto encode_png(const Image &image) -> std::vector<std::uint8_t> {
  if (image.width == 0 || image.height == 0) throw Error(ErrorCode::EmptyVolume, "cannot encode an empty image");
  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(image.height * (1 + 3 * image.width));
  for (std::size_t y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const auto *row = image.rgb.data() + 3 * y * image.width;
    raw.insert(raw.end(), row, row + 3 * image.width);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(len);
  if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error(ErrorCode::IoFailure, "PNG compression failed");
  }
  z.resize(len);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

auto write_png(const Image &image, const std::filesystem::path &path) -> void {
  write_file_atomic(path, encode_png(image));
}

auto to_string(Plane plane) -> std::string_view {
  switch (plane) {
  case Plane::Axial: return "axial";
  case Plane::Coronal: return "coronal";
  case Plane::Sagittal: return "sagittal";
  }
  return "axial";
}

auto montage_slices(std::size_t extent, const RenderSpec &spec) -> std::vector<std::size_t> {
  if (!spec.slices.empty()) {
    for (auto s : spec.slices) {
      if (s >= extent) {
        throw Error(ErrorCode::SliceOutOfRange,
                    "slice " + std::to_string(s) + " outside [0, " + std::to_string(extent) + ")");
      }
    }
    return spec.slices;
  }
  const auto k = std::min(spec.auto_slices, extent);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back((i + 1) * extent / (k + 1));
  return out;
}

auto render_montage(const Grid3<double> &volume, const RenderSpec &spec) -> Image {
  const auto w = window_of(volume, spec);
  return paint_montage(volume.dims(), spec, [&](std::size_t i, std::size_t j, std::size_t k) {
    const auto g = w.gray(volume(i, j, k));
    return Rgb{g, g, g};
  });
}

auto label_color(std::int32_t label) -> Rgb {
  const auto h = splitmix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(label)));
  const double hue = static_cast<double>(h >> 11) * 0x1.0p-53;
  return hsv(hue, 0.85, 1.0);
}

auto render_label_overlay(const Grid3<double> &base, const Grid3<std::int32_t> &labels, const RenderSpec &spec)
    -> Image {
  if (base.dims() != labels.dims()) throw Error(ErrorCode::ShapeMismatch, "label map and base image grids differ");
  const auto w = window_of(base, spec);
  const double a = std::clamp(spec.opacity, 0.0, 1.0);
  return paint_montage(base.dims(), spec, [&](std::size_t i, std::size_t j, std::size_t k) {
    const auto g = w.gray(base(i, j, k));
    const auto l = labels(i, j, k);
    if (l == 0 || a == 0.0) return Rgb{g, g, g};
    const auto c = label_color(l);
    Rgb out;
    for (std::size_t ch = 0; ch < 3; ++ch) out[ch] = to_byte((1.0 - a) * g + a * c[ch]);
    return out;
  });
}

auto glyph_layout(const Dims3 &dims, Plane plane, std::size_t cell) -> GlyphLayout {
  const auto v = view_of(dims, plane);
  GlyphLayout l;
  l.cell = std::max<std::size_t>(cell, 3);
  l.stride = std::max<std::size_t>(1, (std::max(v.width, v.height) + 63) / 64);
  l.columns = (v.width + l.stride - 1) / l.stride;
  l.rows = (v.height + l.stride - 1) / l.stride;
  return l;
}

auto glyph_color(const Vec3 &principal_dir, double fa) -> Rgb {
  const double b = std::clamp(fa, 0.0, 1.0);
  return {to_byte(255.0 * std::fabs(principal_dir[0]) * b), to_byte(255.0 * std::fabs(principal_dir[1]) * b),
          to_byte(255.0 * std::fabs(principal_dir[2]) * b)};
}

auto render_tensor_glyphs(const Grid3<DiffusionTensor> &tensors, const ScalarMaps &maps, Plane plane,
                          std::size_t slice, std::size_t cell) -> Image {
  const auto &d = tensors.dims();
  if (maps.fa.dims() != d || maps.mask.dims() != d) throw Error(ErrorCode::ShapeMismatch, "tensor and scalar map grids differ");
  if (d.count() == 0) throw Error(ErrorCode::EmptyVolume, "cannot render an empty tensor map");
  if (slice >= slice_extent(d, plane)) {
    throw Error(ErrorCode::SliceOutOfRange, "slice " + std::to_string(slice) + " outside the " +
                                                std::string(to_string(plane)) + " extent");
  }
  const auto layout = glyph_layout(d, plane, cell);
  const auto view = view_of(d, plane);

  struct Sample {
    std::size_t col, row;
    std::array<std::size_t, 3> voxel;
    double l1, l2, theta;
  };
  std::vector<Sample> samples;
  double lmax = 0.0;
  for (std::size_t r = 0; r < layout.rows; ++r) {
    for (std::size_t c = 0; c < layout.columns; ++c) {
      const auto dc = c * layout.stride, dr = r * layout.stride;
      if (dc >= view.width || dr >= view.height) continue;
      const auto vox = voxel_at(d, plane, slice, dc, dr);
      if (!maps.mask(vox[0], vox[1], vox[2])) continue;
      const auto [a, b, cc] = in_plane(tensors(vox[0], vox[1], vox[2]), plane);
      const double mid = 0.5 * (a + cc);
      const double rad = std::hypot(0.5 * (a - cc), b);
      const double l1 = mid + rad, l2 = mid - rad;
      if (!std::isfinite(l1) || l1 <= 0.0) continue;
      samples.push_back({c, r, vox, l1, std::max(l2, 0.0), 0.5 * std::atan2(2.0 * b, a - cc)});
      lmax = std::max(lmax, l1);
    }
  }

  Image img(layout.columns * layout.cell, layout.rows * layout.cell, kGlyphBackground);
  const double radius = static_cast<double>(layout.cell) / 2.0 - 1.0;
  const auto half = static_cast<std::ptrdiff_t>(layout.cell / 2);
  for (const auto &s : samples) {
    const double sa = std::max(1.0, radius * std::sqrt(s.l1 / lmax));
    const double sb = std::max(1.0, radius * std::sqrt(s.l2 / lmax));
    const double ct = std::cos(s.theta), st = std::sin(s.theta);
    const auto color = glyph_color(maps.principal_dir(s.voxel[0], s.voxel[1], s.voxel[2]),
                                   maps.fa(s.voxel[0], s.voxel[1], s.voxel[2]));
    const auto cx = static_cast<std::ptrdiff_t>(s.col * layout.cell) + half;
    const auto cy = static_cast<std::ptrdiff_t>(s.row * layout.cell) + half;
    for (std::ptrdiff_t dy = -half; dy < half; ++dy) {
      for (std::ptrdiff_t dx = -half; dx < half; ++dx) {
        const double u = static_cast<double>(dx), v = -static_cast<double>(dy);
        const double p = u * ct + v * st, q = -u * st + v * ct;
        if ((p * p) / (sa * sa) + (q * q) / (sb * sb) <= 1.0) {
          img.set(static_cast<std::size_t>(cx + dx), static_cast<std::size_t>(cy + dy), color);
        }
      }
    }
  }
  return img;
}

auto text_width(std::string_view text, std::size_t scale) -> std::size_t {
  if (text.empty()) return 0;
  return (text.size() * (detail::kGlyphWidth + 1) - 1) * scale;
}

auto draw_text(Image &image, std::size_t x, std::size_t y, std::string_view text, Rgb color, std::size_t scale)
    -> void {
  for (std::size_t n = 0; n < text.size(); ++n) {
    const auto &rows = detail::glyph_rows(text[n]);
    const auto gx = x + n * (detail::kGlyphWidth + 1) * scale;
    for (int r = 0; r < detail::kGlyphHeight; ++r) {
      for (int c = 0; c < detail::kGlyphWidth; ++c) {
        if (!(rows[static_cast<std::size_t>(r)] & (0x10 >> c))) continue;
        for (std::size_t sy = 0; sy < scale; ++sy) {
          for (std::size_t sx = 0; sx < scale; ++sx) {
            const auto px = gx + static_cast<std::size_t>(c) * scale + sx;
            const auto py = y + static_cast<std::size_t>(r) * scale + sy;
            if (px < image.width && py < image.height) image.set(px, py, color);
          }
        }
      }
    }
  }
}

auto render_comparison(const Image &left, const Image &right, std::string_view left_caption,
                       std::string_view right_caption) -> Image {
  const auto r = resample_to_height(right, left.height);
  constexpr std::size_t kGap = 4;
  constexpr std::size_t kStrip = detail::kGlyphHeight + 6;
  const auto lw = std::max(left.width, text_width(left_caption));
  const auto rw = std::max(r.width, text_width(right_caption));
  Image out(lw + kGap + rw, std::max<std::size_t>(left.height, 1) + kStrip);
  blit(out, left, 0, 0);
  blit(out, r, lw + kGap, 0);
  const Rgb white{255, 255, 255};
  const auto ty = left.height + 3;
  draw_text(out, (lw - text_width(left_caption)) / 2, ty, left_caption, white);
  draw_text(out, lw + kGap + (rw - text_width(right_caption)) / 2, ty, right_caption, white);
  return out;
}

auto heat_color(double t) -> Rgb {
  static constexpr std::array<std::array<double, 3>, 5> kStops{{
      {0, 0, 0}, {87, 16, 110}, {188, 55, 84}, {249, 142, 9}, {252, 255, 164}}};
  if (!std::isfinite(t)) t = 0.0;
  const double x = std::clamp(t, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(3, static_cast<std::size_t>(x));
  const double f = x - static_cast<double>(i);
  Rgb out;
  for (std::size_t c = 0; c < 3; ++c) out[c] = to_byte(kStops[i][c] + (kStops[i + 1][c] - kStops[i][c]) * f);
  return out;
}

auto render_connectome(const Matrix &m, ConnectomeWeighting weighting) -> Image {
  if (m.rows != m.cols) {
    throw Error(ErrorCode::NotSquare, "connectome is " + std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
  if (m.rows == 0) throw Error(ErrorCode::EmptyVolume, "connectome is empty");
  const auto n = m.rows;
  const std::size_t cell = std::clamp<std::size_t>(512 / n, 1, 16);
  double scale = 1.0;
  if (weighting == ConnectomeWeighting::Nos) {
    double mx = 0.0;
    for (double v : m.values) {
      if (std::isfinite(v)) mx = std::max(mx, v);
    }
    scale = mx > 0.0 ? std::log1p(mx) : 1.0;
  }
  Image img(n * cell, n * cell);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m(i, j);
      const double t = weighting == ConnectomeWeighting::Nos ? std::log1p(std::max(v, 0.0)) / scale : v;
      const auto c = heat_color(t);
      for (std::size_t y = 0; y < cell; ++y) {
        for (std::size_t x = 0; x < cell; ++x) img.set(j * cell + x, i * cell + y, c);
      }
    }
  }
  return img;
}

auto render_bundle(std::span<const Streamline> streamlines, std::string_view caption) -> Image {
  constexpr std::size_t kStrip = detail::kGlyphHeight + 6;
  const Rgb white{255, 255, 255};
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  std::size_t points = 0;
  for (const auto &s : streamlines) {
    for (const auto &p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      min_x = std::min(min_x, p[0]);
      max_x = std::max(max_x, p[0]);
      min_y = std::min(min_y, p[1]);
      max_y = std::max(max_y, p[1]);
      ++points;
    }
  }
  if (points == 0) {
    const std::string label = std::string(caption) + " EMPTY";
    Image img(std::max<std::size_t>(128, text_width(label) + 8), 64 + kStrip);
    draw_text(img, 4, 3, label, white);
    return img;
  }
  // 1 mm bins, coarsened so neither axis exceeds 256 bins.
  const double extent = std::max(max_x - min_x, max_y - min_y) + 4.0;
  const double bin = std::max(1.0, std::ceil(extent / 256.0));
  const double x0 = std::floor(min_x) - 2.0, y0 = std::floor(min_y) - 2.0;
  const auto nx = static_cast<std::size_t>(std::ceil((max_x + 2.0 - x0) / bin)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil((max_y + 2.0 - y0) / bin)) + 1;
  std::vector<double> density(nx * ny, 0.0);
  for (const auto &s : streamlines) {
    for (const auto &p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      const auto i = std::min(nx - 1, static_cast<std::size_t>((p[0] - x0) / bin));
      const auto j = std::min(ny - 1, static_cast<std::size_t>((p[1] - y0) / bin));
      density[j * nx + i] += 1.0;
    }
  }
  const double mx = *std::max_element(density.begin(), density.end());
  constexpr std::size_t kCell = 4;
  const auto label = std::string(caption) + " N=" + std::to_string(streamlines.size());
  Image img(std::max(nx * kCell, text_width(label) + 8), ny * kCell + kStrip);
  draw_text(img, 4, 3, label, white);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto c = heat_color(std::sqrt(density[j * nx + i] / mx));
      const auto row = ny - 1 - j;
      for (std::size_t y = 0; y < kCell; ++y) {
        for (std::size_t x = 0; x < kCell; ++x) img.set(i * kCell + x, kStrip + row * kCell + y, c);
      }
    }
  }
  return img;
}

auto panel_file_name(std::string_view scan, std::string_view node, std::string_view asset) -> std::string {
  return std::string(scan) + "_" + std::string(node) + "_" + std::string(asset) + ".png";
}

auto panel_asset_name(std::string_view panel, std::string_view unit) -> std::string {
  std::string out(panel);
  std::replace(out.begin(), out.end(), ':', '-');
  if (!unit.empty()) out += "-" + std::string(unit);
  return out;
}

} // namespace dmriqc
