#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "ddcam/error.hpp"
#include "ddcam/tensor.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace ddcam;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ddcam_test_tensor";
  fs::create_directories(dir);
  return dir / name;
}

void write_raw_npy(const fs::path& path, const std::string& dict, const std::string& payload) {
  std::string header = dict;
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  out.put(static_cast<char>(header.size() & 0xFF));
  out.put(static_cast<char>(header.size() >> 8));
  out << header << payload;
}

std::string floats(std::initializer_list<float> values) {
  std::string s(values.size() * 4, '\0');
  std::memcpy(s.data(), values.begin(), s.size());
  return s;
}

}  // namespace

TEST_CASE("load_tensor decodes a hand-written 2x2 file") {
  const auto path = scratch("two_by_two.npy");
  write_raw_npy(path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", floats({1, 2, 3, 4}));
  const auto t = load_tensor(path);
  CHECK(t.shape() == Shape{2, 2});
  CHECK(t.values() == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("empty and scalar-like shapes round-trip") {
  const auto path = scratch("empty.npy");
  save_tensor(Tensor({0}), path);
  const auto t = load_tensor(path);
  CHECK(t.shape() == Shape{0});
  CHECK(t.empty());

  save_tensor(Tensor({3, 0, 2}), path);
  CHECK(load_tensor(path).shape() == Shape{3, 0, 2});

  save_tensor(Tensor({1}, {0.5F}), path);
  const auto one = load_tensor(path);
  CHECK(one.shape() == Shape{1});
  CHECK(one.values() == std::vector<float>{0.5F});
}

TEST_CASE("save/load round trip is bit exact") {
  std::mt19937_64 rng(7);
  for (const Shape& shape : {Shape{512, 7, 7}, Shape{3, 4, 5}}) {
    auto t = testing::random_tensor(rng, shape, -100.0F, 100.0F);
    t.data()[0] = -0.0F;
    t.data()[1] = std::numeric_limits<float>::denorm_min();
    const auto path = scratch("roundtrip.npy");
    save_tensor(t, path);
    const auto back = load_tensor(path);
    REQUIRE(back.shape() == t.shape());
    CHECK(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("written header is aligned and parseable") {
  const auto path = scratch("aligned.npy");
  save_tensor(Tensor({2, 3}), path);
  CHECK(fs::file_size(path) % 64 == 24 % 64);  // 64-byte header + 6 floats
  std::ifstream in(path, std::ios::binary);
  std::string head(10, '\0');
  in.read(head.data(), 10);
  const std::size_t len = static_cast<unsigned char>(head[8]) | (static_cast<unsigned char>(head[9]) << 8);
  CHECK((10 + len) % 64 == 0);
}

TEST_CASE("load_tensor rejects unsupported files") {
  const auto path = scratch("bad.npy");
  SUBCASE("float64") {
    write_raw_npy(path, "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }", std::string(8, '\0'));
    CHECK_THROWS_AS(load_tensor(path), FormatError);
  }
  SUBCASE("big endian") {
    write_raw_npy(path, "{'descr': '>f4', 'fortran_order': False, 'shape': (1,), }", std::string(4, '\0'));
    CHECK_THROWS_AS(load_tensor(path), FormatError);
  }
  SUBCASE("fortran order") {
    write_raw_npy(path, "{'descr': '<f4', 'fortran_order': True, 'shape': (2, 2), }", floats({1, 2, 3, 4}));
    CHECK_THROWS_WITH_AS(load_tensor(path), doctest::Contains("Fortran"), FormatError);
  }
  SUBCASE("truncated payload") {
    write_raw_npy(path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", floats({1, 2, 3}));
    CHECK_THROWS_AS(load_tensor(path), FormatError);
  }
  SUBCASE("non-finite values") {
    write_raw_npy(path, "{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }",
                  floats({1, std::numeric_limits<float>::quiet_NaN()}));
    CHECK_THROWS_WITH_AS(load_tensor(path), doctest::Contains("non-finite"), FormatError);
    write_raw_npy(path, "{'descr': '<f4', 'fortran_order': False, 'shape': (1,), }",
                  floats({std::numeric_limits<float>::infinity()}));
    CHECK_THROWS_AS(load_tensor(path), FormatError);
  }
  SUBCASE("bad magic") {
    std::ofstream(path, std::ios::binary) << "not numpy at all";
    CHECK_THROWS_AS(load_tensor(path), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_tensor(scratch("does_not_exist.npy")), IoError); }
}

TEST_CASE("apply_unit_mask zeroes inactive slices") {
  const Tensor t({3, 1}, {1, 2, 3});
  CHECK(apply_unit_mask(t, UnitSet(3, {0, 2})).values() == std::vector<float>{1, 0, 3});
  CHECK(apply_unit_mask(t, UnitSet::full(3)) == t);
  CHECK(apply_unit_mask(t, UnitSet::empty(3)).values() == std::vector<float>{0, 0, 0});
  CHECK_THROWS_AS(apply_unit_mask(t, UnitSet::full(4)), ShapeError);
}

TEST_CASE("apply_unit_mask is idempotent and leaves active slices bit-identical") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = testing::random_tensor(rng, {9, 2, 3}, -5.0F, 5.0F);
    const auto s = UnitSet::from_mask(9, rng() & 0x1FF);
    const auto once = apply_unit_mask(t, s);
    CHECK(apply_unit_mask(once, s) == once);
    for (std::size_t i = 0; i < 9; ++i) {
      const auto src = t.slice(i);
      const auto dst = once.slice(i);
      for (std::size_t k = 0; k < src.size(); ++k) CHECK(dst[k] == (s.contains(i) ? src[k] : 0.0F));
    }
  }
}

TEST_CASE("minmax_normalize") {
  CHECK(minmax_normalize(Tensor({2, 2}, {0, 5, 10, 5})).values() == std::vector<float>{0, 0.5F, 1, 0.5F});
  CHECK(minmax_normalize(Tensor({2, 2}, {3, 3, 3, 3})).values() == std::vector<float>{0, 0, 0, 0});

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_tensor(rng, {7, 7}, -3.0F, 8.0F);
    const auto n = minmax_normalize(m);
    CHECK(*std::ranges::min_element(n.data()) == 0.0F);
    CHECK(*std::ranges::max_element(n.data()) == 1.0F);
    const auto expected = testing::normalize_grid(testing::to_grid(m));
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 7; ++c) CHECK(n.at(r, c) == doctest::Approx(expected[r][c]).epsilon(1e-6));

    // invariance under a * m + b, a > 0
    std::uniform_real_distribution<float> pos(0.1F, 10.0F), shift(-50.0F, 50.0F);
    const float a = pos(rng);
    const float b = shift(rng);
    Tensor affine = m;
    for (float& v : affine.data()) v = a * v + b;
    const auto n2 = minmax_normalize(affine);
    for (std::size_t i = 0; i < n.size(); ++i) CHECK(n2.data()[i] == doctest::Approx(n.data()[i]).epsilon(1e-4));
  }
}

TEST_CASE("bilinear_upsample matches frozen half-pixel values") {
  // Frozen from torch.nn.functional.interpolate(mode="bilinear", align_corners=False);
  // see tests/oracles/frozen_values.py.
  const auto out = bilinear_upsample(Tensor({2, 2}, {0, 1, 2, 3}), 4, 4);
  const std::vector<float> expected{0, 0.25F, 0.75F, 1,   0.5F, 0.75F, 1.25F, 1.5F,
                                    1.5F, 1.75F, 2.25F, 2.5F, 2, 2.25F, 2.75F, 3};
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.data()[i] == doctest::Approx(expected[i]));

  const auto odd = bilinear_upsample(Tensor({3, 2}, {0.5F, -1, 2, 4, 7, 1}), 5, 7);
  const std::vector<double> row0{0.5, 0.5, 0.178571388, -0.250000089, -0.678571463, -1.0, -1.0};
  const std::vector<double> row3{5.000000954, 5.000000954, 4.400000572, 3.600000143, 2.799999475, 2.199999571,
                                 2.199999571};
  for (std::size_t c = 0; c < 7; ++c) {
    CHECK(odd.at(0, c) == doctest::Approx(row0[c]).epsilon(1e-5));
    CHECK(odd.at(3, c) == doctest::Approx(row3[c]).epsilon(1e-5));
  }
}

TEST_CASE("bilinear_upsample agrees with the scalar reference and preserves range") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> extent(1, 9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t ih = extent(rng), iw = extent(rng), oh = extent(rng) * 3, ow = extent(rng) * 2;
    const auto m = testing::random_tensor(rng, {ih, iw}, -2.0F, 2.0F);
    const auto out = bilinear_upsample(m, oh, ow);
    REQUIRE(out.shape() == Shape{oh, ow});
    const auto grid = testing::to_grid(m);
    const float lo = *std::ranges::min_element(m.data());
    const float hi = *std::ranges::max_element(m.data());
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        CHECK(out.at(r, c) == doctest::Approx(testing::bilinear_at(grid, oh, ow, r, c)).epsilon(1e-6));
        CHECK(out.at(r, c) >= lo);
        CHECK(out.at(r, c) <= hi);
      }
    }
  }
}

TEST_CASE("bilinear_upsample of constants") {
  const auto one = bilinear_upsample(Tensor({1, 1}, {0.7F}), 5, 3);
  for (float v : one.data()) CHECK(v == 0.7F);
  Tensor flat({4, 4});
  for (float& v : flat.data()) v = 2.5F;
  const auto big = bilinear_upsample(flat, 224, 224);
  CHECK(big.shape() == Shape{224, 224});
  for (float v : big.data()) CHECK(v == 2.5F);
  CHECK_THROWS_AS(bilinear_upsample(flat, 0, 3), DomainError);
}

TEST_CASE("SaliencyMap enforces [0, 1] and PGM output") {
  CHECK_THROWS_AS(SaliencyMap(Tensor({1, 2}, {0.5F, 1.5F})), DomainError);
  CHECK_THROWS_AS(SaliencyMap(Tensor({2}, {0.5F, 0.5F})), DomainError);
  const SaliencyMap map(Tensor({2, 3}, {0, 0.5F, 1, 0.2F, 0.8F, 1}));
  const auto path = scratch("map.pgm");
  save_pgm(map, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(bytes.substr(0, header.size()) == header);
  const std::vector<int> pixels{0, 128, 255, 51, 204, 255};
  for (std::size_t i = 0; i < 6; ++i) CHECK(static_cast<unsigned char>(bytes[header.size() + i]) == pixels[i]);
}
