#include "dmriqc/io.hpp"

#include "dmriqc/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <zlib.h>

namespace dmriqc {

namespace fs = std::filesystem;

namespace {

auto ends_with_gz(const fs::path &path) -> bool {
  const auto s = path.filename().string();
  return s.size() > 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

template <class T> auto load(const std::uint8_t *p, bool swap) -> T {
  std::array<std::uint8_t, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

template <class T> auto store(std::vector<std::uint8_t> &out, std::size_t at, T v) -> void {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::memcpy(out.data() + at, &v, sizeof(T));
}

auto datatype_size(std::int16_t code) -> std::size_t {
  switch (static_cast<NiftiDatatype>(code)) {
  case NiftiDatatype::UInt8: return 1;
  case NiftiDatatype::Int16: return 2;
  case NiftiDatatype::Int32: return 4;
  case NiftiDatatype::Float32: return 4;
  case NiftiDatatype::Float64: return 8;
  }
  return 0;
}

constexpr std::size_t kNiftiHeader = 348;
constexpr std::size_t kNiftiOffset = 352;

auto trim(std::string_view s) -> std::string_view {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

auto split_lines(std::string_view text) -> std::vector<std::string_view> {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

auto split_ws(std::string_view s) -> std::vector<std::string_view> {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

auto parse_number(std::string_view token, std::string_view where) -> double {
  double v = 0.0;
  std::string_view t = token;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto *end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedNumber,
                std::string(where) + ": '" + std::string(token.substr(0, 32)) + "' is not a finite number");
  }
  return v;
}

} // namespace

auto format_double(double value) -> std::string {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- volumes

auto volume_from_grid(const Grid3<double> &grid, const Vec3 &voxel_size) -> Volume {
  Volume v;
  v.dims = {grid.dims().x, grid.dims().y, grid.dims().z, 1};
  v.ndim = 3;
  v.voxel_size = voxel_size;
  v.data = grid.data();
  return v;
}

auto volume_from_series(const DwiSeries &series) -> Volume {
  Volume v;
  const auto &d = series.dims();
  v.dims = {d.x, d.y, d.z, series.volumes()};
  v.ndim = 4;
  v.voxel_size = series.voxel_size();
  v.data = series.data();
  return v;
}

auto volume_to_grid(const Volume &volume) -> Grid3<double> {
  if (volume.frames() != 1) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected a 3D image, got " + std::to_string(volume.frames()) + " frames");
  }
  Grid3<double> g(volume.spatial());
  g.data() = volume.data;
  return g;
}

auto volume_to_mask(const Volume &volume) -> Mask {
  const auto g = volume_to_grid(volume);
  Mask m(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] != 0.0 ? 1 : 0;
  return m;
}

auto volume_to_labels(const Volume &volume) -> Grid3<std::int32_t> {
  const auto g = volume_to_grid(volume);
  Grid3<std::int32_t> out(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = std::round(g[i]);
    if (!std::isfinite(r) || std::fabs(r) > 2.0e9) {
      throw Error(ErrorCode::InvalidArgument, "label value out of range");
    }
    out[i] = static_cast<std::int32_t>(r);
  }
  return out;
}

auto volume_to_series(const Volume &volume, GradientTable gradients) -> DwiSeries {
  if (volume.frames() != gradients.size()) {
    throw Error(ErrorCode::CountMismatch, "image has " + std::to_string(volume.frames()) +
                                              " volumes but the gradient table has " +
                                              std::to_string(gradients.size()));
  }
  DwiSeries s(volume.spatial(), volume.voxel_size, std::move(gradients));
  s.data() = volume.data;
  return s;
}

// ---------------------------------------------------------------- NIfTI-1

auto parse_nifti(std::span<const std::uint8_t> bytes) -> Volume {
  if (bytes.size() < kNiftiHeader) {
    throw Error(ErrorCode::TruncatedData, "NIfTI header needs 348 bytes, got " + std::to_string(bytes.size()));
  }
  const auto *h = bytes.data();
  if (std::memcmp(h + 344, "n+1\0", 4) != 0) {
    if (std::memcmp(h + 344, "ni1\0", 4) == 0) {
      throw Error(ErrorCode::BadMagic, "two-file NIfTI (.hdr/.img) is not supported");
    }
    if (std::memcmp(h + 344, "n+2\0", 4) == 0) {
      throw Error(ErrorCode::BadMagic, "NIfTI-2 is not supported");
    }
    throw Error(ErrorCode::BadMagic, "missing NIfTI-1 magic 'n+1'");
  }
  bool swap = false;
  auto ndim = load<std::int16_t>(h + 40, false);
  if (ndim < 1 || ndim > 7) {
    swap = true;
    ndim = load<std::int16_t>(h + 40, true);
    if (ndim < 1 || ndim > 7) throw Error(ErrorCode::BadHeader, "dim[0] is not in [1, 7] in either byte order");
  }
  if (load<std::int32_t>(h, swap) != 348) throw Error(ErrorCode::BadHeader, "sizeof_hdr is not 348");

  Volume v;
  std::array<std::int64_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[static_cast<std::size_t>(i)] = load<std::int16_t>(h + 40 + 2 * i, swap);
  for (int i = 5; i <= ndim; ++i) {
    if (dim[static_cast<std::size_t>(i)] != 1) {
      throw Error(ErrorCode::BadHeader, "images with more than 4 dimensions are not supported");
    }
  }
  v.ndim = static_cast<std::size_t>(std::min<std::int16_t>(ndim, 4));
  std::size_t count = 1;
  for (std::size_t i = 1; i <= 4; ++i) {
    std::size_t n = 1;
    if (i <= v.ndim) {
      if (dim[i] < 1) throw Error(ErrorCode::BadHeader, "dim[" + std::to_string(i) + "] must be positive");
      n = static_cast<std::size_t>(dim[i]);
    }
    v.dims[i - 1] = n;
    count *= n; // at most (2^15)^4, no overflow in 64 bits
  }

  const auto code = load<std::int16_t>(h + 70, swap);
  const auto elem = datatype_size(code);
  if (elem == 0) throw Error(ErrorCode::UnsupportedDatatype, "NIfTI datatype code " + std::to_string(code) + " is not supported");
  v.datatype = static_cast<NiftiDatatype>(code);

  for (std::size_t i = 0; i < 3; ++i) {
    if (i < v.ndim) {
      const double p = load<float>(h + 80 + 4 * i, swap);
      if (!std::isfinite(p) || p <= 0.0) {
        throw Error(ErrorCode::BadHeader, "pixdim[" + std::to_string(i + 1) + "] must be positive");
      }
      v.voxel_size[i] = p;
    } else {
      v.voxel_size[i] = 1.0;
    }
  }

  const double vox_offset = load<float>(h + 108, swap);
  if (!std::isfinite(vox_offset) || vox_offset < static_cast<double>(kNiftiOffset) ||
      vox_offset != std::floor(vox_offset) || vox_offset > static_cast<double>(bytes.size())) {
    if (std::isfinite(vox_offset) && vox_offset > static_cast<double>(bytes.size())) {
      throw Error(ErrorCode::TruncatedData, "vox_offset lies beyond the end of the file");
    }
    throw Error(ErrorCode::BadHeader, "vox_offset must be an integer >= 352");
  }
  const auto offset = static_cast<std::size_t>(vox_offset);
  const std::size_t expected = count * elem;
  const std::size_t actual = bytes.size() - offset;
  if (actual < expected) {
    throw Error(ErrorCode::TruncatedData,
                "expected " + std::to_string(expected) + " data bytes, got " + std::to_string(actual));
  }

  const double slope = load<float>(h + 112, swap);
  const double inter = load<float>(h + 116, swap);
  const bool scaled_data = std::isfinite(slope) && slope != 0.0;
  v.scl_slope = scaled_data ? slope : 1.0;
  v.scl_inter = scaled_data && std::isfinite(inter) ? inter : 0.0;

  v.data.resize(count);
  const auto *p = bytes.data() + offset;
  for (std::size_t i = 0; i < count; ++i, p += elem) {
    double x = 0.0;
    switch (v.datatype) {
    case NiftiDatatype::UInt8: x = *p; break;
    case NiftiDatatype::Int16: x = load<std::int16_t>(p, swap); break;
    case NiftiDatatype::Int32: x = load<std::int32_t>(p, swap); break;
    case NiftiDatatype::Float32: x = load<float>(p, swap); break;
    case NiftiDatatype::Float64: x = load<double>(p, swap); break;
    }
    v.data[i] = scaled_data ? x * v.scl_slope + v.scl_inter : x;
  }
  return v;
}

auto read_nifti(const fs::path &path) -> Volume {
  auto bytes = read_file_bytes(path);
  if (ends_with_gz(path)) bytes = gzip_decompress(bytes);
  try {
    return parse_nifti(bytes);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

auto encode_nifti(const Volume &volume) -> std::vector<std::uint8_t> {
  if (volume.ndim < 1 || volume.ndim > 4) throw Error(ErrorCode::InvalidArgument, "volumes have 1 to 4 dimensions");
  std::size_t count = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto n = volume.dims[i];
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "zero-sized dimension");
    if (i >= volume.ndim && n != 1) throw Error(ErrorCode::InvalidArgument, "dims beyond ndim must be 1");
    if (n > 32767) throw Error(ErrorCode::InvalidArgument, "dimension exceeds the NIfTI-1 limit");
    count *= n;
  }
  if (count != volume.data.size()) {
    throw Error(ErrorCode::ShapeMismatch, "dims product does not match the element count");
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(3, volume.ndim); ++i) {
    if (!(volume.voxel_size[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel sizes must be positive");
  }

  std::vector<std::uint8_t> out(kNiftiOffset + count * 4, 0);
  store<std::int32_t>(out, 0, 348);
  out[38] = 'r';
  store<std::int16_t>(out, 40, static_cast<std::int16_t>(volume.ndim));
  for (std::size_t i = 0; i < 7; ++i) {
    store<std::int16_t>(out, 42 + 2 * i, static_cast<std::int16_t>(i < 4 ? volume.dims[i] : 1));
  }
  store<std::int16_t>(out, 70, static_cast<std::int16_t>(NiftiDatatype::Float32));
  store<std::int16_t>(out, 72, 32);
  store<float>(out, 76, 1.0f);
  for (std::size_t i = 0; i < 7; ++i) {
    const float p = i < 3 ? static_cast<float>(volume.voxel_size[i]) : 1.0f;
    store<float>(out, 80 + 4 * i, p);
  }
  store<float>(out, 108, static_cast<float>(kNiftiOffset));
  store<float>(out, 112, 1.0f);
  store<float>(out, 116, 0.0f);
  out[123] = 2 | 8; // mm, seconds
  store<std::int16_t>(out, 252, 0);
  store<std::int16_t>(out, 254, 1);
  // sform: world = index * voxel size.
  for (std::size_t r = 0; r < 3; ++r) {
    store<float>(out, 280 + 16 * r + 4 * r, static_cast<float>(volume.voxel_size[r]));
  }
  std::memcpy(out.data() + 344, "n+1\0", 4);
  for (std::size_t i = 0; i < count; ++i) {
    store<float>(out, kNiftiOffset + 4 * i, static_cast<float>(volume.data[i]));
  }
  return out;
}

auto write_nifti(const Volume &volume, const fs::path &path) -> void {
  auto bytes = encode_nifti(volume);
  if (ends_with_gz(path)) bytes = gzip_compress(bytes);
  write_file_atomic(path, bytes);
}

// ---------------------------------------------------------------- gradients

auto parse_gradients(std::string_view bval_text, std::string_view bvec_text, double b0_threshold)
    -> GradientTable {
  GradientTable t;
  for (auto tok : split_ws(bval_text)) {
    const double b = parse_number(tok, "bval");
    if (b < 0.0) throw Error(ErrorCode::MalformedNumber, "bval: negative b-value");
    t.bvals.push_back(b);
  }
  std::vector<std::vector<double>> rows;
  for (auto line : split_lines(bvec_text)) {
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    auto &row = rows.emplace_back();
    for (auto tok : toks) row.push_back(parse_number(tok, "bvec"));
  }
  const auto n = t.bvals.size();
  if (n == 0) throw Error(ErrorCode::CountMismatch, "bval file lists no volumes");
  if (rows.size() != 3) {
    throw Error(ErrorCode::CountMismatch, "bvec file needs 3 rows, got " + std::to_string(rows.size()));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    if (rows[a].size() != n) {
      throw Error(ErrorCode::CountMismatch, "bval lists " + std::to_string(n) + " volumes but bvec row " +
                                                std::to_string(a + 1) + " has " + std::to_string(rows[a].size()));
    }
  }
  t.bvecs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 g{rows[0][i], rows[1][i], rows[2][i]};
    const double len = norm(g);
    if (len == 0.0) {
      if (t.bvals[i] > b0_threshold) {
        throw Error(ErrorCode::NonUnitVector, "volume " + std::to_string(i) + " has b > 0 with a zero vector");
      }
    } else if (len >= 0.9 && len <= 1.1) {
      g = scaled(g, 1.0 / len);
    } else {
      throw Error(ErrorCode::NonUnitVector,
                  "volume " + std::to_string(i) + " has |g| = " + format_double(len) + " outside [0.9, 1.1]");
    }
    t.bvecs[i] = g;
  }
  return t;
}

auto read_gradients(const fs::path &bval_path, const fs::path &bvec_path) -> GradientTable {
  return parse_gradients(read_file_text(bval_path), read_file_text(bvec_path));
}

auto format_bvals(const GradientTable &table) -> std::string {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) out += (i ? " " : "") + format_double(table.bvals[i]);
  return out + "\n";
}

auto format_bvecs(const GradientTable &table) -> std::string {
  std::string out;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < table.size(); ++i) out += (i ? " " : "") + format_double(table.bvecs[i][a]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- TCK

auto parse_tck(std::span<const std::uint8_t> bytes) -> std::vector<Streamline> {
  const std::string_view text(reinterpret_cast<const char *>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return std::nullopt;
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto first = next_line();
  if (!first || *first != "mrtrix tracks") throw Error(ErrorCode::BadHeader, "track file must start with 'mrtrix tracks'");
  std::optional<std::string> datatype;
  std::optional<std::size_t> offset;
  std::optional<std::size_t> declared;
  bool ended = false;
  while (auto line = next_line()) {
    if (*line == "END") {
      ended = true;
      break;
    }
    const auto colon = line->find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::BadHeader, "header line without ':'");
    }
    const auto key = trim(line->substr(0, colon));
    const auto value = trim(line->substr(colon + 1));
    if (key == "datatype") {
      datatype = std::string(value);
    } else if (key == "file") {
      auto parts = split_ws(value);
      std::size_t off = 0;
      if (parts.size() != 2 || parts[0] != ".") {
        throw Error(ErrorCode::BadHeader, "only 'file: . <offset>' is supported");
      }
      auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), off);
      if (ec != std::errc{} || ptr != parts[1].data() + parts[1].size()) {
        throw Error(ErrorCode::BadHeader, "malformed file offset");
      }
      offset = off;
    } else if (key == "count") {
      std::size_t c = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), c);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorCode::BadHeader, "malformed count");
      }
      declared = c;
    }
  }
  if (!ended) throw Error(ErrorCode::BadHeader, "header is not terminated by END");
  if (!datatype) throw Error(ErrorCode::BadHeader, "header has no datatype");
  if (*datatype != "Float32LE") {
    throw Error(ErrorCode::UnsupportedDatatype, "track datatype '" + *datatype + "' is not supported");
  }
  if (!offset) throw Error(ErrorCode::BadHeader, "header has no file offset");
  if (*offset < pos || *offset > bytes.size()) {
    throw Error(ErrorCode::BadHeader, "file offset points inside the header or past the end");
  }

  std::vector<Streamline> out;
  Streamline current;
  const auto *p = bytes.data() + *offset;
  const auto *end = bytes.data() + bytes.size();
  bool terminated = false;
  while (end - p >= 12) {
    const float x = load<float>(p, false), y = load<float>(p + 4, false), z = load<float>(p + 8, false);
    p += 12;
    const int nans = std::isnan(x) + std::isnan(y) + std::isnan(z);
    const int infs = std::isinf(x) + std::isinf(y) + std::isinf(z);
    if (infs == 3) {
      terminated = true;
      break;
    }
    if (nans == 3) {
      if (!current.points.empty()) out.push_back(std::move(current));
      current = {};
      continue;
    }
    if (nans || infs) throw Error(ErrorCode::MalformedNumber, "track point with a partial NaN/Inf triplet");
    current.points.push_back({x, y, z});
  }
  if (!terminated) throw Error(ErrorCode::UnterminatedStream, "track payload has no end-of-stream marker");
  if (!current.points.empty()) {
    throw Error(ErrorCode::UnterminatedStream, "last streamline is not closed before the end marker");
  }
  if (declared && *declared != out.size()) {
    throw Error(ErrorCode::CountMismatch, "header declares " + std::to_string(*declared) + " streamlines, payload has " +
                                              std::to_string(out.size()));
  }
  return out;
}

auto read_tck(const fs::path &path) -> std::vector<Streamline> {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_tck(bytes);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

auto encode_tck(std::span<const Streamline> streamlines) -> std::vector<std::uint8_t> {
  const std::string head = "mrtrix tracks\ndatatype: Float32LE\ncount: " + std::to_string(streamlines.size()) + "\n";
  std::size_t offset = head.size() + 20;
  std::string header;
  for (;;) {
    header = head + "file: . " + std::to_string(offset) + "\nEND\n";
    if (header.size() <= offset) break;
    offset = header.size();
  }
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.resize(offset, 0);
  auto put = [&](float x, float y, float z) {
    for (float f : {x, y, z}) {
      const auto b = std::bit_cast<std::array<std::uint8_t, 4>>(f);
      out.insert(out.end(), b.begin(), b.end());
    }
  };
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  for (const auto &s : streamlines) {
    for (const auto &pt : s.points) {
      put(static_cast<float>(pt[0]), static_cast<float>(pt[1]), static_cast<float>(pt[2]));
    }
    put(nan, nan, nan);
  }
  put(inf, inf, inf);
  return out;
}

auto write_tck(std::span<const Streamline> streamlines, const fs::path &path) -> void {
  write_file_atomic(path, encode_tck(streamlines));
}

// ---------------------------------------------------------------- outlier map

auto parse_outlier_map(std::string_view text) -> OutlierMap {
  auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]).empty() || trim(lines[0]).front() != '#') {
    throw Error(ErrorCode::BadHeader, "outlier map must start with a '#' header line");
  }
  OutlierMap map;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto toks = split_ws(lines[li]);
    if (toks.empty()) continue;
    if (map.volumes == 0) {
      map.slices = toks.size();
    } else if (toks.size() != map.slices) {
      throw Error(ErrorCode::RaggedRows, "line " + std::to_string(li + 1) + " has " + std::to_string(toks.size()) +
                                             " columns, expected " + std::to_string(map.slices));
    }
    for (auto t : toks) {
      if (t != "0" && t != "1") {
        throw Error(ErrorCode::NonBinaryToken,
                    "line " + std::to_string(li + 1) + ": token '" + std::string(t.substr(0, 16)) + "' is not 0 or 1");
      }
      map.flags.push_back(t == "1" ? 1 : 0);
    }
    ++map.volumes;
  }
  return map;
}

auto read_outlier_map(const fs::path &path) -> OutlierMap { return parse_outlier_map(read_file_text(path)); }

auto format_outlier_map(const OutlierMap &map) -> std::string {
  std::string out = "# rows: volumes, columns: slices (1 = imputed)\n";
  for (std::size_t v = 0; v < map.volumes; ++v) {
    for (std::size_t s = 0; s < map.slices; ++s) {
      out += s ? " " : "";
      out += map.at(v, s) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- matrices

auto parse_matrix_csv(std::string_view text) -> Matrix {
  std::vector<std::vector<double>> rows;
  std::size_t li = 0;
  for (auto line : split_lines(text)) {
    ++li;
    if (trim(line).empty()) continue;
    auto &row = rows.emplace_back();
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const auto cell = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      row.push_back(parse_number(cell, "matrix line " + std::to_string(li)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.size() != rows.front().size()) {
      throw Error(ErrorCode::RaggedRows, "matrix line " + std::to_string(li) + " has " + std::to_string(row.size()) +
                                             " columns, expected " + std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "matrix file has no rows");
  const auto n = rows.size();
  const auto m = rows.front().size();
  if (n != m) {
    throw Error(ErrorCode::NotSquare, "matrix is " + std::to_string(n) + "x" + std::to_string(m));
  }
  Matrix out(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r, c) = rows[r][c];
  }
  return out;
}

auto read_matrix_csv(const fs::path &path) -> Matrix { return parse_matrix_csv(read_file_text(path)); }

auto format_matrix_csv(const Matrix &matrix) -> std::string {
  std::string out;
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    for (std::size_t c = 0; c < matrix.cols; ++c) {
      if (c) out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

auto write_matrix_csv(const Matrix &matrix, const fs::path &path) -> void {
  write_file_atomic(path, format_matrix_csv(matrix));
}

// ---------------------------------------------------------------- motion

auto parse_motion_trace(std::string_view text) -> MotionTrace {
  MotionTrace trace;
  std::size_t li = 0;
  for (auto line : split_lines(text)) {
    ++li;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto toks = split_ws(t);
    if (toks.size() != 6) {
      throw Error(ErrorCode::CountMismatch,
                  "motion line " + std::to_string(li) + " has " + std::to_string(toks.size()) + " values, expected 6");
    }
    const auto where = "motion line " + std::to_string(li);
    Vec3 tr, rot;
    for (std::size_t a = 0; a < 3; ++a) {
      tr[a] = parse_number(toks[a], where);
      rot[a] = parse_number(toks[a + 3], where);
    }
    trace.translation_mm.push_back(tr);
    trace.rotation_deg.push_back(rot);
  }
  return trace;
}

auto read_motion_trace(const fs::path &path) -> MotionTrace { return parse_motion_trace(read_file_text(path)); }

auto format_motion_trace(const MotionTrace &trace) -> std::string {
  std::string out = "# tx ty tz (mm) rx ry rz (deg)\n";
  for (std::size_t n = 0; n < trace.size(); ++n) {
    for (std::size_t a = 0; a < 6; ++a) {
      const double v = a < 3 ? trace.translation_mm[n][a] : trace.rotation_deg[n][a - 3];
      out += (a ? " " : "") + format_double(v);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- files

auto read_file_bytes(const fs::path &path) -> std::vector<std::uint8_t> {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return out;
}

auto read_file_text(const fs::path &path) -> std::string {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

auto write_file_atomic(const fs::path &path, std::span<const std::uint8_t> bytes) -> void {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rng() % 1000000000ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot replace " + path.string());
  }
}

auto write_file_atomic(const fs::path &path, std::string_view text) -> void {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

auto gzip_compress(std::span<const std::uint8_t> bytes) -> std::vector<std::uint8_t> {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::IoFailure, "zlib initialisation failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
  zs.next_in = const_cast<Bytef *>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::IoFailure, "gzip compression failed");
  return out;
}

auto gzip_decompress(std::span<const std::uint8_t> bytes) -> std::vector<std::uint8_t> {
  // Decompressed NIfTI larger than this is not a realistic single scan.
  constexpr std::size_t kLimit = std::size_t{8} << 30;
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw Error(ErrorCode::IoFailure, "zlib initialisation failed");
  zs.next_in = const_cast<Bytef *>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) throw Error(ErrorCode::TruncatedData, "gzip stream ends early");
      throw Error(ErrorCode::BadHeader, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (out.size() > kLimit) {
      inflateEnd(&zs);
      throw Error(ErrorCode::TruncatedData, "gzip stream expands beyond the size limit");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::TruncatedData, "gzip stream ends early");
    }
  }
  inflateEnd(&zs);
  return out;
}

} // namespace dmriqc
