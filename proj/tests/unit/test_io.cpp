#include "dmriqc/io.hpp"
#include "fixture.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>

using namespace dmriqc;
using testing::code_of;

namespace {

const std::filesystem::path kFixtures = DMRIQC_FIXTURE_DIR;

auto bytes_of(std::string_view s) -> std::vector<std::uint8_t> { return {s.begin(), s.end()}; }

auto le_i16(std::vector<std::uint8_t> &b, std::size_t off, std::int16_t v) -> void { std::memcpy(&b[off], &v, 2); }

} // namespace

TEST_CASE("golden NIfTI: int16 with slope and intercept") {
  const auto v = read_nifti(kFixtures / "int16_scaled.nii");
  CHECK(v.dims == std::array<std::size_t, 4>{3, 2, 2, 1});
  CHECK(v.ndim == 3);
  CHECK(v.datatype == NiftiDatatype::Int16);
  CHECK(v.voxel_size == Vec3{2.0, 2.0, 3.0});
  REQUIRE(v.data.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(v.data[i] == (static_cast<double>(i) - 6.0) * 10.0 * 0.5 + 1.0);
  }
}

TEST_CASE("golden NIfTI: big-endian float32 4D") {
  const auto v = read_nifti(kFixtures / "float32_be_4d.nii");
  CHECK(v.dims == std::array<std::size_t, 4>{2, 2, 1, 2});
  CHECK(v.ndim == 4);
  CHECK(v.voxel_size[0] == 1.5);
  for (std::size_t i = 0; i < 8; ++i) CHECK(v.data[i] == 0.25 * static_cast<double>(i));
}

TEST_CASE("golden NIfTI: gzipped uint8") {
  const auto v = read_nifti(kFixtures / "uint8.nii.gz");
  CHECK(v.datatype == NiftiDatatype::UInt8);
  CHECK(v.data == std::vector<double>{0, 7, 128, 255});
}

TEST_CASE("NIfTI round-trip through the writer") {
  testing::TempDir dir;
  Grid3<double> g({3, 4, 5});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.5 * static_cast<double>(i) - 3.0;
  const auto vol = volume_from_grid(g, {1.25, 1.5, 2.0});
  for (const char *name : {"a.nii", "a.nii.gz"}) {
    write_nifti(vol, dir / name);
    const auto back = read_nifti(dir / name);
    CHECK(back.dims == vol.dims);
    CHECK(back.voxel_size == vol.voxel_size);
    CHECK(back.data == vol.data);
    CHECK(volume_to_grid(back).data() == g.data());
  }
  const auto bytes = encode_nifti(vol);
  CHECK(bytes.size() == 352 + 4 * g.size());
  CHECK(parse_nifti(bytes).data == vol.data);
}

TEST_CASE("NIfTI error codes") {
  const auto good = read_file_bytes(kFixtures / "int16_scaled.nii");
  CHECK(code_of([&] { parse_nifti(std::span(good).first(100)); }) == ErrorCode::TruncatedData);
  CHECK(code_of([&] { parse_nifti(std::span(good).first(good.size() - 1)); }) == ErrorCode::TruncatedData);
  auto b = good;
  b[344] = 'x';
  CHECK(code_of([&] { parse_nifti(b); }) == ErrorCode::BadMagic);
  b = good;
  b[344] = 'n';
  b[345] = 'i';
  b[346] = '1';
  CHECK(code_of([&] { parse_nifti(b); }) == ErrorCode::BadMagic);
  b = good;
  le_i16(b, 70, 1536);
  CHECK(code_of([&] { parse_nifti(b); }) == ErrorCode::UnsupportedDatatype);
  b = good;
  le_i16(b, 42, 0);
  CHECK(code_of([&] { parse_nifti(b); }) == ErrorCode::BadHeader);
  b = good;
  le_i16(b, 40, 5);
  le_i16(b, 50, 2);
  CHECK(code_of([&] { parse_nifti(b); }) == ErrorCode::BadHeader);
  CHECK(code_of([&] { read_nifti("/nonexistent/x.nii"); }) == ErrorCode::IoFailure);
  const auto gz = read_file_bytes(kFixtures / "uint8.nii.gz");
  CHECK(code_of([&] { gzip_decompress(std::span(gz).first(gz.size() - 6)); }) == ErrorCode::TruncatedData);
}

TEST_CASE("volume conversions") {
  Volume v;
  v.dims = {2, 1, 1, 3};
  v.ndim = 4;
  v.data = {1, 2, 3, 4, 5, 6};
  CHECK(code_of([&] { volume_to_grid(v); }) == ErrorCode::ShapeMismatch);
  GradientTable g{{0, 1000}, {Vec3{0, 0, 0}, Vec3{1, 0, 0}}};
  CHECK(code_of([&] { volume_to_series(v, g); }) == ErrorCode::CountMismatch);
  g.bvals.push_back(1000);
  g.bvecs.push_back({0, 1, 0});
  const auto s = volume_to_series(v, g);
  CHECK(s.at(1, 0, 0, 2) == 6);
  CHECK(volume_from_series(s).data == v.data);
  Volume lab;
  lab.dims = {3, 1, 1, 1};
  lab.data = {0.0, 2.4, 2.6};
  CHECK(volume_to_labels(lab)[2] == 3);
  CHECK(volume_to_mask(lab)[0] == 0);
  CHECK(volume_to_mask(lab)[1] == 1);
}

TEST_CASE("golden gradients") {
  const auto g = read_gradients(kFixtures / "grad.bval", kFixtures / "grad.bvec");
  REQUIRE(g.size() == 4);
  CHECK(g.bvals == std::vector<double>{0, 1000, 1000, 1000});
  CHECK(g.bvecs[1] == Vec3{1, 0, 0});
  CHECK(g.bvecs[3][0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(norm(g.bvecs[3]) == doctest::Approx(1.0).epsilon(1e-15));
  const auto back = parse_gradients(format_bvals(g), format_bvecs(g));
  CHECK(back.bvals == g.bvals);
  CHECK(back.bvecs == g.bvecs);
}

TEST_CASE("gradient error codes") {
  CHECK(code_of([] { parse_gradients("0 1000", "0 1 0\n0 0 1\n0 0"); }) == ErrorCode::CountMismatch);
  CHECK(code_of([] { parse_gradients("0 1000", "0 1\n0 0\n"); }) == ErrorCode::CountMismatch);
  CHECK(code_of([] { parse_gradients("0 abc", "0 1\n0 0\n0 0"); }) == ErrorCode::MalformedNumber);
  CHECK(code_of([] { parse_gradients("0 -5", "0 1\n0 0\n0 0"); }) == ErrorCode::MalformedNumber);
  CHECK(code_of([] { parse_gradients("0 1000", "0 0\n0 0\n0 0"); }) == ErrorCode::NonUnitVector);
  CHECK(code_of([] { parse_gradients("0 1000", "0 0.5\n0 0\n0 0"); }) == ErrorCode::NonUnitVector);
  CHECK(code_of([] { parse_gradients("", ""); }) == ErrorCode::CountMismatch);
  // Slightly off-unit vectors are normalized.
  const auto g = parse_gradients("0 1000", "0 1.05\n0 0\n0 0");
  CHECK(g.bvecs[1][0] == 1.0);
}

TEST_CASE("golden tck") {
  const auto s = read_tck(kFixtures / "three.tck");
  REQUIRE(s.size() == 3);
  CHECK(s[0].points == std::vector<Vec3>{{0, 0, 0}, {1, 2, 3}});
  CHECK(s[1].points.size() == 3);
  CHECK(s[1].points[0] == Vec3{-1.5, 0.5, 2});
  CHECK(s[2].points == std::vector<Vec3>{{10, 20, 30}});
  CHECK(s[0].length() == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("tck round-trip and error codes") {
  std::vector<Streamline> s{{{{0.5, 1, 2}, {3, 4, 5}}}, {{{-1, -2, -3}}}, {}};
  s.pop_back();
  const auto bytes = encode_tck(s);
  CHECK(parse_tck(bytes) == s);
  testing::TempDir dir;
  write_tck(s, dir / "a.tck");
  CHECK(read_tck(dir / "a.tck") == s);
  CHECK(encode_tck({}).size() > 0);
  CHECK(parse_tck(encode_tck({})).empty());

  CHECK(code_of([] { parse_tck(bytes_of("not tracks\nEND\n")); }) == ErrorCode::BadHeader);
  CHECK(code_of([] { parse_tck(bytes_of("mrtrix tracks\ndatatype: Float32LE\nfile: . 60\n")); }) ==
        ErrorCode::BadHeader);
  const auto text = std::string(bytes.begin(), bytes.end());
  auto dt = text;
  dt.replace(dt.find("Float32LE"), 9, "Float64LE");
  CHECK(code_of([&] { parse_tck(bytes_of(dt)); }) == ErrorCode::UnsupportedDatatype);
  // Drop the end-of-stream triplet.
  CHECK(code_of([&] { parse_tck(std::span(bytes).first(bytes.size() - 12)); }) == ErrorCode::UnterminatedStream);
  auto cnt = text;
  cnt.replace(cnt.find("count: 2"), 8, "count: 5");
  CHECK(code_of([&] { parse_tck(bytes_of(cnt)); }) == ErrorCode::CountMismatch);
}

TEST_CASE("outlier maps") {
  const auto m = parse_outlier_map("# volumes x slices\n0 1 0\n1 0 0\n");
  CHECK(m.volumes == 2);
  CHECK(m.slices == 3);
  CHECK(m.at(0, 1));
  CHECK(m.at(1, 0));
  CHECK_FALSE(m.at(1, 2));
  CHECK(parse_outlier_map(format_outlier_map(m)) == m);
  CHECK(code_of([] { parse_outlier_map("0 1\n"); }) == ErrorCode::BadHeader);
  CHECK(code_of([] { parse_outlier_map("#\n0 1\n1\n"); }) == ErrorCode::RaggedRows);
  CHECK(code_of([] { parse_outlier_map("#\n0 2\n"); }) == ErrorCode::NonBinaryToken);
}

TEST_CASE("matrix CSV") {
  Matrix m(3, 3);
  const double tricky[] = {0.1, 1.0 / 3.0, 1e-300, 12345678.9, 0, 5e-324, 2.5, 7, 1e22};
  for (std::size_t i = 0; i < 9; ++i) m.values[i] = tricky[i];
  CHECK(parse_matrix_csv(format_matrix_csv(m)) == m);
  testing::TempDir dir;
  write_matrix_csv(m, dir / "m.csv");
  CHECK(read_matrix_csv(dir / "m.csv") == m);
  CHECK(code_of([] { parse_matrix_csv("1,2\n3,4\n5,6\n"); }) == ErrorCode::NotSquare);
  CHECK(code_of([] { parse_matrix_csv("1,2\n3\n"); }) == ErrorCode::RaggedRows);
  CHECK(code_of([] { parse_matrix_csv("1,x\n3,4\n"); }) == ErrorCode::MalformedNumber);
  CHECK(code_of([] { parse_matrix_csv(""); }) == ErrorCode::EmptyInput);
}

TEST_CASE("motion traces") {
  const auto t = parse_motion_trace("# header\n0 0 0 0 0 0\n\n0.5 -1 2 0.1 0.2 0.3\n");
  REQUIRE(t.size() == 2);
  CHECK(t.translation_mm[1] == Vec3{0.5, -1, 2});
  CHECK(t.rotation_deg[1] == Vec3{0.1, 0.2, 0.3});
  const auto back = parse_motion_trace(format_motion_trace(t));
  CHECK(back.translation_mm == t.translation_mm);
  CHECK(back.rotation_deg == t.rotation_deg);
  CHECK(code_of([] { parse_motion_trace("0 0 0 0 0\n"); }) == ErrorCode::CountMismatch);
  CHECK(code_of([] { parse_motion_trace("0 0 0 0 0 z\n"); }) == ErrorCode::MalformedNumber);
}

TEST_CASE("format_double reads back exactly") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    double v;
    const auto bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("atomic writes replace the target") {
  testing::TempDir dir;
  write_file_atomic(dir / "f.txt", std::string_view("one"));
  write_file_atomic(dir / "f.txt", std::string_view("two"));
  CHECK(read_file_text(dir / "f.txt") == "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto &e : std::filesystem::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 1);
  // Parents are created on demand, but not through a regular file.
  write_file_atomic(dir / "sub" / "g.txt", std::string_view("x"));
  CHECK(read_file_text(dir / "sub" / "g.txt") == "x");
  CHECK(code_of([&] { write_file_atomic(dir / "f.txt" / "g.txt", std::string_view("x")); }) ==
        ErrorCode::IoFailure);
}
