#include <doctest.h>

#include <cmath>

#include "aneudet/anchors.hpp"
#include "aneudet/errors.hpp"
#include "aneudet/random.hpp"
#include "../oracles.hpp"

using namespace aneudet;

TEST_CASE("anchor_grid layout") {
  const auto anchors = anchor_grid();
  CHECK(anchors.size() == 41472);
  CHECK(anchors[0].position == Vec3{2, 2, 2});
  CHECK(anchors[0].size == 5.0);
  CHECK(anchors[2].size == 20.0);
  // index = ((k * G + j) * G + i) * S + s
  const Anchor& a = anchors[((3 * 24 + 2) * 24 + 1) * 3 + 1];
  CHECK(a.grid_index == Int3{1, 2, 3});
  CHECK(a.position == Vec3{6, 10, 14});
  CHECK(a.scale_index == 1);

  const auto fine = anchor_grid({96, 96, {10.0}});
  CHECK(fine[5].position == Vec3{5.5, 0.5, 0.5});
  CHECK_THROWS_AS(anchor_grid({96, 25, {5.0}}), ConfigError);
}

TEST_CASE("iou3d examples and properties") {
  const BoundingBox a{{0, 0, 0}, 4}, b{{2, 0, 0}, 4};
  CHECK(iou3d(a, a) == 1.0);
  CHECK(iou3d(a, {{10, 0, 0}, 4}) == 0.0);
  CHECK(iou3d(a, b) == doctest::Approx(32.0 / 96.0));

  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    auto draw = [&] {
      return BoundingBox{{0.5 * static_cast<double>(uniform_index(rng, 20)), 0.5 * static_cast<double>(uniform_index(rng, 20)),
                          0.5 * static_cast<double>(uniform_index(rng, 20))},
                         0.5 * static_cast<double>(1 + uniform_index(rng, 12))};
    };
    const BoundingBox x = draw(), y = draw();
    const double v = iou3d(x, y);
    CHECK(v == iou3d(y, x));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(oracle::lattice_iou(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("encode and decode") {
  Anchor a{{12, 12, 12}, {48, 48, 48}, 10.0, 1};
  SUBCASE("zero case") {
    const TargetVector t = encode({{48, 48, 48}, 10.0}, a, 1.0);
    CHECK(t == TargetVector{1, 0, 0, 0, 0});
  }
  SUBCASE("offset") {
    const TargetVector t = encode({{53, 48, 48}, 10.0}, a, 0.7);
    CHECK(t == TargetVector{0.7, 0.5, 0, 0, 0});
  }
  SUBCASE("log size") { CHECK(encode({{48, 48, 48}, 10.0 * std::exp(1.0)}, a, 1).ds == doctest::Approx(1.0)); }
  SUBCASE("decode zero offsets") {
    Anchor big{{0, 0, 0}, {2, 2, 2}, 20.0, 2};
    const Decoded d = decode({0.9, 0, 0, 0, 0}, big);
    CHECK(d.box == BoundingBox{{2, 2, 2}, 20.0});
    CHECK(d.probability == 0.9);
  }
  SUBCASE("decode ln 2") {
    Anchor small{{0, 0, 0}, {2, 2, 2}, 5.0, 0};
    CHECK(decode({0.5, 0, 0, 0, std::log(2.0)}, small).box.diameter == doctest::Approx(10.0));
  }
}

TEST_CASE("assign_labels") {
  const auto anchors = anchor_grid();
  SUBCASE("no lesions means all negative") {
    for (const auto& l : assign_labels(anchors, {})) CHECK(l.status == AnchorStatus::Negative);
  }
  SUBCASE("coincident lesion is positive with the zero target") {
    const Anchor& a = anchors[((5 * 24 + 5) * 24 + 5) * 3 + 1];
    const auto labels = assign_labels(anchors, {a.box()});
    const auto& l = labels[((5 * 24 + 5) * 24 + 5) * 3 + 1];
    CHECK(l.status == AnchorStatus::Positive);
    REQUIRE(l.target);
    CHECK(*l.target == TargetVector{1, 0, 0, 0, 0});
    CHECK(l.matched_index == std::optional<std::size_t>(0));
  }
  SUBCASE("IoU one third is ignored") {
    const std::vector<Anchor> one{{{0, 0, 0}, {0, 0, 0}, 4.0, 0}};
    CHECK(assign_labels(one, {{{2, 0, 0}, 4.0}})[0].status == AnchorStatus::Ignored);
  }
  SUBCASE("status agrees with brute-force IoU over a sweep of diameters") {
    const std::vector<Anchor> one{{{0, 0, 0}, {10, 10, 10}, 10.0, 1}};
    for (int i = 1; i <= 400; ++i) {
      const double d = 0.05 * i;
      const BoundingBox box{{10, 10, 10}, d};
      const double iou = std::pow(std::min(d, 10.0), 3) / std::pow(std::max(d, 10.0), 3);
      const auto st = assign_labels(one, {box})[0].status;
      CHECK((st == AnchorStatus::Positive) == (iou > 0.5));
      CHECK((st == AnchorStatus::Negative) == (iou < 0.02));
    }
  }
  SUBCASE("ties go to the lowest lesion index and positives are permutation invariant") {
    const std::vector<Anchor> one{{{0, 0, 0}, {10, 10, 10}, 10.0, 1}};
    const BoundingBox l1{{11, 10, 10}, 10.0}, l2{{9, 10, 10}, 10.0};
    CHECK(assign_labels(one, {l1, l2})[0].matched_index == std::optional<std::size_t>(0));
    CHECK(assign_labels(one, {l2, l1})[0].matched_index == std::optional<std::size_t>(0));

    Rng rng(4);
    std::vector<BoundingBox> lesions;
    for (int i = 0; i < 4; ++i) {
      lesions.push_back({{uniform(rng, 10, 86), uniform(rng, 10, 86), uniform(rng, 10, 86)}, uniform(rng, 4, 20)});
    }
    std::vector<BoundingBox> reversed(lesions.rbegin(), lesions.rend());
    const auto a = assign_labels(anchors, lesions), b = assign_labels(anchors, reversed);
    for (std::size_t i = 0; i < anchors.size(); ++i) CHECK(a[i].status == b[i].status);
  }
}
