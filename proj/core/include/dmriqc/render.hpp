#pragma once

#include "dmriqc/diagnostics.hpp"
#include "dmriqc/numerics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmriqc {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, top row first.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h, Rgb fill = {0, 0, 0});

  [[nodiscard]] auto pixel(std::size_t x, std::size_t y) const -> Rgb;
  auto set(std::size_t x, std::size_t y, Rgb c) -> void;
  auto operator==(const Image &) const -> bool = default;
};

/// Deterministic PNG (no ancillary chunks, fixed compression level).
auto encode_png(const Image &image) -> std::vector<std::uint8_t>;
auto write_png(const Image &image, const std::filesystem::path &path) -> void;

/// Axial fixes z, coronal fixes y, sagittal fixes x. Displayed slices put +x
/// (or +y for sagittal) to the right and the remaining axis pointing up.
enum class Plane { Axial, Coronal, Sagittal };

auto to_string(Plane plane) -> std::string_view;

struct RenderSpec {
  Plane plane = Plane::Axial;
  /// Empty selects `auto_slices` evenly spaced slices.
  std::vector<std::size_t> slices;
  std::size_t auto_slices = 9;
  double low_percentile = 2.0;
  double high_percentile = 98.0;
  /// Fixed [lo, hi] window overriding the percentiles.
  std::optional<std::array<double, 2>> window;
  double opacity = 0.4;
  /// Output pixels per voxel edge (nearest neighbour).
  std::size_t scale = 2;
};

/// Slices chosen for `spec` along an axis of length `extent`.
auto montage_slices(std::size_t extent, const RenderSpec &spec) -> std::vector<std::size_t>;

/// Grayscale montage, windowed to the spec percentiles of all voxels. A
/// constant volume renders mid-gray. Errors: EmptyVolume, SliceOutOfRange.
auto render_montage(const Grid3<double> &volume, const RenderSpec &spec = {}) -> Image;

/// Fixed hash-derived color per label id.
auto label_color(std::int32_t label) -> Rgb;

/// Montage of `base` with nonzero labels alpha-blended at spec.opacity.
/// Errors: ShapeMismatch, EmptyVolume.
auto render_label_overlay(const Grid3<double> &base, const Grid3<std::int32_t> &labels,
                          const RenderSpec &spec = {}) -> Image;

struct GlyphLayout {
  /// Voxels per glyph along each image axis.
  std::size_t stride = 1;
  /// Pixels per glyph cell edge.
  std::size_t cell = 12;
  std::size_t columns = 0;
  std::size_t rows = 0;
};

auto glyph_layout(const Dims3 &dims, Plane plane, std::size_t cell = 12) -> GlyphLayout;

/// Glyph fill color for a voxel: 255 * |principal_dir| * FA per channel.
auto glyph_color(const Vec3 &principal_dir, double fa) -> Rgb;

/// One ellipse per sampled voxel (at most 64x64 glyphs), shaped by the
/// in-plane projection of the tensor. Voxels outside the mask stay
/// background. Errors: SliceOutOfRange, ShapeMismatch.
auto render_tensor_glyphs(const Grid3<DiffusionTensor> &tensors, const ScalarMaps &maps,
                          Plane plane, std::size_t slice, std::size_t cell = 12) -> Image;

inline constexpr Rgb kGlyphBackground{40, 40, 40};

/// Side-by-side panel with a caption strip under each half. The right image is
/// resampled to the left height when they differ.
auto render_comparison(const Image &left, const Image &right, std::string_view left_caption,
                       std::string_view right_caption) -> Image;

enum class ConnectomeWeighting { Nos, Fa };

/// Heatmap, row i top to bottom, column j left to right. NOS uses log(1 + x)
/// scaled to the matrix maximum; FA maps [0, 1] linearly. Errors: NotSquare.
auto render_connectome(const Matrix &matrix, ConnectomeWeighting weighting) -> Image;
/// Colormap lookup for t in [0, 1].
auto heat_color(double t) -> Rgb;

/// Axial projection of streamline point density on a 1 mm grid fitted to the
/// bundle. An empty bundle renders a labelled placeholder.
auto render_bundle(std::span<const Streamline> streamlines, std::string_view caption) -> Image;

/// 5x7 bitmap text; lowercase renders as uppercase, unknown glyphs as '?'.
auto draw_text(Image &image, std::size_t x, std::size_t y, std::string_view text, Rgb color,
               std::size_t scale = 1) -> void;
auto text_width(std::string_view text, std::size_t scale = 1) -> std::size_t;

/// File name for a rendered panel: {scan}_{node}_{asset}.png.
auto panel_file_name(std::string_view scan, std::string_view node, std::string_view asset)
    -> std::string;
/// Asset name for a panel (':' becomes '-'), with "-<unit>" for unit panels.
auto panel_asset_name(std::string_view panel, std::string_view unit = {}) -> std::string;

} // namespace dmriqc
