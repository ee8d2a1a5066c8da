#pragma once

#include "dmriqc/diagnostics.hpp"
#include "dmriqc/numerics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmriqc {

enum class NiftiDatatype : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
};

/// Scalar image of up to four dimensions, x fastest. `data` holds values with
/// scl_slope/scl_inter already applied.
struct Volume {
  std::array<std::size_t, 4> dims{1, 1, 1, 1};
  std::size_t ndim = 3;
  Vec3 voxel_size{1.0, 1.0, 1.0};
  NiftiDatatype datatype = NiftiDatatype::Float32;
  double scl_slope = 1.0;
  double scl_inter = 0.0;
  std::vector<double> data;

  [[nodiscard]] auto spatial() const noexcept -> Dims3 { return {dims[0], dims[1], dims[2]}; }
  [[nodiscard]] auto frames() const noexcept -> std::size_t { return dims[3]; }
};

auto volume_from_grid(const Grid3<double> &grid, const Vec3 &voxel_size) -> Volume;
auto volume_from_series(const DwiSeries &series) -> Volume;
/// Throws ShapeMismatch unless the volume has exactly one frame.
auto volume_to_grid(const Volume &volume) -> Grid3<double>;
/// Nonzero voxels become 1.
auto volume_to_mask(const Volume &volume) -> Mask;
/// Values are rounded to the nearest integer label.
auto volume_to_labels(const Volume &volume) -> Grid3<std::int32_t>;
/// Throws CountMismatch when frames differ from the gradient count.
auto volume_to_series(const Volume &volume, GradientTable gradients) -> DwiSeries;

/// Single-file NIfTI-1 from raw (already decompressed) bytes.
/// Errors: BadMagic, BadHeader, UnsupportedDatatype, TruncatedData.
auto parse_nifti(std::span<const std::uint8_t> bytes) -> Volume;
/// Decompresses transparently when the name ends in ".gz".
auto read_nifti(const std::filesystem::path &path) -> Volume;
/// Float32 little-endian, slope 1, intercept 0, data at offset 352.
auto encode_nifti(const Volume &volume) -> std::vector<std::uint8_t>;
/// Gzip-compresses when the name ends in ".gz". Errors: InvalidArgument, IoFailure.
auto write_nifti(const Volume &volume, const std::filesystem::path &path) -> void;

/// Zero vectors are accepted only for b-values at or below `b0_threshold`;
/// other vectors are normalized when their norm lies in [0.9, 1.1].
/// Errors: CountMismatch, MalformedNumber, NonUnitVector.
auto parse_gradients(std::string_view bval_text, std::string_view bvec_text,
                     double b0_threshold = 10.0) -> GradientTable;
auto read_gradients(const std::filesystem::path &bval_path, const std::filesystem::path &bvec_path)
    -> GradientTable;
auto format_bvals(const GradientTable &table) -> std::string;
auto format_bvecs(const GradientTable &table) -> std::string;

/// Errors: BadHeader, UnsupportedDatatype, UnterminatedStream, MalformedNumber,
/// CountMismatch (declared count disagrees with the payload).
auto parse_tck(std::span<const std::uint8_t> bytes) -> std::vector<Streamline>;
auto read_tck(const std::filesystem::path &path) -> std::vector<Streamline>;
auto encode_tck(std::span<const Streamline> streamlines) -> std::vector<std::uint8_t>;
auto write_tck(std::span<const Streamline> streamlines, const std::filesystem::path &path) -> void;

/// First line is a '#' comment; then one line of 0/1 tokens per volume.
/// Errors: BadHeader, RaggedRows, NonBinaryToken.
auto parse_outlier_map(std::string_view text) -> OutlierMap;
auto read_outlier_map(const std::filesystem::path &path) -> OutlierMap;
auto format_outlier_map(const OutlierMap &map) -> std::string;

/// Errors: NotSquare, RaggedRows, MalformedNumber, EmptyInput.
auto parse_matrix_csv(std::string_view text) -> Matrix;
auto read_matrix_csv(const std::filesystem::path &path) -> Matrix;
/// Shortest representation that reads back to the same doubles.
auto format_matrix_csv(const Matrix &matrix) -> std::string;
auto write_matrix_csv(const Matrix &matrix, const std::filesystem::path &path) -> void;

/// One line per volume: tx ty tz (mm) rx ry rz (degrees). Blank lines and
/// '#' comments are ignored. Errors: CountMismatch, MalformedNumber.
auto parse_motion_trace(std::string_view text) -> MotionTrace;
auto read_motion_trace(const std::filesystem::path &path) -> MotionTrace;
auto format_motion_trace(const MotionTrace &trace) -> std::string;

// File helpers shared by the readers and writers.

auto read_file_bytes(const std::filesystem::path &path) -> std::vector<std::uint8_t>;
auto read_file_text(const std::filesystem::path &path) -> std::string;
/// Writes to a sibling temporary and renames over `path`.
auto write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes)
    -> void;
auto write_file_atomic(const std::filesystem::path &path, std::string_view text) -> void;
auto gzip_compress(std::span<const std::uint8_t> bytes) -> std::vector<std::uint8_t>;
/// Errors: TruncatedData, BadHeader.
auto gzip_decompress(std::span<const std::uint8_t> bytes) -> std::vector<std::uint8_t>;
/// Round-trip double formatting ("%.17g" trimmed to the shortest exact form).
auto format_double(double value) -> std::string;

} // namespace dmriqc
