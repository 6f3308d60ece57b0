#include <doctest.h>

#include <numeric>
#include <random>

#include "ddcam/error.hpp"
#include "ddcam/saliency.hpp"
#include "support/oracles.hpp"

using namespace ddcam;

TEST_CASE("normalize_drops") {
  CHECK(normalize_drops({3.7}) == std::vector<double>{1.0});
  CHECK(normalize_drops({2, 2}) == std::vector<double>{0.5, 0.5});
  CHECK(normalize_drops({1, -4, 3}) == std::vector<double>{0.25, 0.0, 0.75});
  CHECK(normalize_drops({-1, 0}) == std::vector<double>{0.5, 0.5});
  CHECK(normalize_drops({}).empty());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-2, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(1 + rng() % 30);
    for (auto& v : d) v = dist(rng);
    const auto w = normalize_drops(d);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : w) CHECK(v >= 0.0);
  }
}

TEST_CASE("linear drops equal the analytic contribution") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng() % 12;
    const auto head = testing::random_linear_head(rng, 3, m);
    const auto a = testing::random_tensor(rng, {m, 4, 4}, 0.0F, 1.0F);
    auto selected = UnitSet::from_mask(m, rng() & ((1ULL << m) - 1));
    if (selected.is_empty()) selected.insert(0);
    const std::size_t target = rng() % 3;
    for (auto baseline : {DropBaseline::selected, DropBaseline::full}) {
      const auto uw = compute_unit_weights(head, a, selected, target, baseline);
      const auto members = selected.indices();
      double baseline_offset = 0.0;
      if (baseline == DropBaseline::full) {
        // Units outside the selection contribute to y but not to y'.
        for (std::size_t k = 0; k < m; ++k) {
          if (selected.contains(k)) continue;
          double mean = 0;
          for (float v : a.slice(k)) mean += v;
          baseline_offset += head.weight.at(target, k) * mean / 16.0;
        }
      }
      for (std::size_t i = 0; i < members.size(); ++i) {
        double mean = 0;
        for (float v : a.slice(members[i])) mean += v;
        const double analytic = head.weight.at(target, members[i]) * mean / 16.0 + baseline_offset;
        CHECK(uw.delta[i] == doctest::Approx(analytic).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("parallel drops equal sequential drops") {
  std::mt19937_64 rng(6);
  const auto head = testing::random_attention_head(rng, 6, 4);
  const auto p = testing::random_tensor(rng, {16, 6}, -1.0F, 1.0F);
  const UnitSet s(16, {0, 3, 5, 9, 15});
  const auto a = compute_unit_weights(head, p, s, 2, DropBaseline::selected, false);
  const auto b = compute_unit_weights(head, p, s, 2, DropBaseline::selected, true);
  CHECK(a.delta == b.delta);
  CHECK(a.weights == b.weights);
  CHECK(compute_unit_weights(head, p, UnitSet(16), 2).weights.empty());
}

TEST_CASE("compose_cnn_map") {
  SUBCASE("two weighted maps through the scalar pipeline") {
    std::mt19937_64 rng(77);
    const auto a = testing::random_tensor(rng, {3, 4, 4}, 0.0F, 2.0F);
    const UnitSet s(3, {0, 2});
    const std::vector<double> w{0.25, 0.75};
    const auto map = compose_cnn_map(a, s, w, 10, 13);
    CHECK(map.height() == 10);
    CHECK(map.width() == 13);

    testing::Grid combined(4, std::vector<double>(4, 0.0));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) combined[r][c] = 0.25 * a.at(0, r, c) + 0.75 * a.at(2, r, c);
    const auto norm = testing::normalize_grid(combined);
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 0; c < 13; ++c)
        CHECK(map.at(r, c) == doctest::Approx(testing::bilinear_at(norm, 10, 13, r, c)).epsilon(1e-5).scale(1.0));
  }
  SUBCASE("excluded units do not influence the map") {
    std::mt19937_64 rng(78);
    auto a = testing::random_tensor(rng, {6, 5, 5}, 0.0F, 1.0F);
    const UnitSet s(6, {1, 4});
    const std::vector<double> w{0.6, 0.4};
    const auto before = compose_cnn_map(a, s, w, 20, 20);
    for (std::size_t k : {0u, 2u, 3u, 5u})
      for (float& v : a.slice(k)) v = v * 50.0F - 3.0F;
    CHECK(compose_cnn_map(a, s, w, 20, 20) == before);
  }
  SUBCASE("values stay in the unit interval") {
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = testing::random_tensor(rng, {4, 3, 3}, -1.0F, 1.0F);
      const auto s = UnitSet::from_mask(4, 1 + rng() % 15);
      std::vector<double> w(s.size(), 1.0 / static_cast<double>(s.size()));
      const auto map = compose_cnn_map(a, s, w, 17, 9);
      for (float v : map.tensor().data()) CHECK((v >= 0.0F && v <= 1.0F));
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(compose_cnn_map(Tensor({3, 2, 2}), UnitSet(4, {0}), {1.0}, 4, 4), ShapeError);
    CHECK_THROWS_AS(compose_cnn_map(Tensor({3, 2, 2}), UnitSet(3, {0}), {0.5, 0.5}, 4, 4), ShapeError);
  }
}

TEST_CASE("compose_vit_map") {
  SUBCASE("a single selected patch peaks at its grid cell") {
    const auto map = compose_vit_map({1.0}, UnitSet(4, {2}), 2, 2);
    CHECK(map.at(1, 0) == 1.0F);
    CHECK(map.at(0, 0) == 0.0F);
    CHECK(map.at(0, 1) == 0.0F);
    CHECK(map.at(1, 1) == 0.0F);
  }
  SUBCASE("two equal weights give two equal peaks") {
    const auto map = compose_vit_map({0.5, 0.5}, UnitSet(9, {0, 8}), 3, 3);
    CHECK(map.at(0, 0) == 1.0F);
    CHECK(map.at(2, 2) == 1.0F);
    CHECK(map.at(1, 1) == 0.0F);
  }
  SUBCASE("14 x 14 grid against the scalar pipeline") {
    std::mt19937_64 rng(5);
    UnitSet selected(196);
    for (std::size_t i = 0; i < 196; ++i)
      if (rng() % 7 == 0) selected.insert(i);
    std::vector<double> w(selected.size());
    std::uniform_real_distribution<double> dist(0, 1);
    for (auto& v : w) v = dist(rng);
    const auto map = compose_vit_map(w, selected, 224, 224);
    testing::Grid grid(14, std::vector<double>(14, 0.0));
    const auto members = selected.indices();
    for (std::size_t i = 0; i < members.size(); ++i)
      grid[members[i] / 14][members[i] % 14] = static_cast<float>(w[i]);
    const auto norm = testing::normalize_grid(grid);
    for (std::size_t r = 0; r < 224; r += 7)
      for (std::size_t c = 0; c < 224; c += 5)
        CHECK(map.at(r, c) == doctest::Approx(testing::bilinear_at(norm, 224, 224, r, c)).epsilon(1e-5).scale(1.0));
  }
  SUBCASE("weight times token norm") {
    const Tensor p({4, 2}, {3, 4, 0, 1, 1, 0, 0, 2});
    const auto map = compose_vit_map({0.5, 0.5}, UnitSet(4, {0, 3}), 2, 2, PatchScalar::weight_times_norm, &p);
    CHECK(map.at(0, 0) == 1.0F);
    CHECK(map.at(1, 1) == doctest::Approx(0.4));
    CHECK_THROWS_AS(compose_vit_map({1.0}, UnitSet(4, {0}), 2, 2, PatchScalar::weight_times_norm), ShapeError);
  }
  SUBCASE("rescaling the weights leaves the map unchanged") {
    const UnitSet s(16, {1, 6, 7, 12});
    const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
    const auto a = compose_vit_map(w, s, 32, 32);
    const auto b = compose_vit_map({0.4, 0.8, 1.2, 1.6}, s, 32, 32);
    for (std::size_t i = 0; i < a.tensor().size(); ++i)
      CHECK(a.tensor().data()[i] == doctest::Approx(b.tensor().data()[i]).epsilon(1e-6).scale(1.0));
  }
  CHECK_THROWS_AS(compose_vit_map({1.0}, UnitSet(12, {0}), 4, 4), ShapeError);
}
