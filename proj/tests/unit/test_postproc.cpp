#include <doctest.h>

#include <algorithm>

#include "aneudet/anchors.hpp"
#include "aneudet/postproc.hpp"
#include "aneudet/random.hpp"
#include "../oracles.hpp"

using namespace aneudet;

namespace {

CandidateDetection cand(Vec3 c, double d, double p) { return {{c, d}, p, Stage::Detector, {}, {}}; }

std::vector<CandidateDetection> random_cands(Rng& rng, std::size_t n) {
  std::vector<CandidateDetection> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c{0.5 * static_cast<double>(uniform_index(rng, 24)), 0.5 * static_cast<double>(uniform_index(rng, 24)),
                 0.5 * static_cast<double>(uniform_index(rng, 24))};
    // Coarse probabilities so ties occur.
    out.push_back(cand(c, 0.5 * static_cast<double>(2 + uniform_index(rng, 12)), 0.05 * static_cast<double>(uniform_index(rng, 21))));
  }
  return out;
}

}  // namespace

TEST_CASE("nms examples") {
  CHECK(nms({cand({1, 1, 1}, 4, 0.9)}).size() == 1);
  const auto two = nms({cand({2, 0, 0}, 4, 0.8), cand({0, 0, 0}, 4, 0.9)});
  REQUIRE(two.size() == 1);
  CHECK(two[0].probability == 0.9);
  CHECK(nms({cand({0, 0, 0}, 4, 0.2)}).empty());
  CHECK(nms({cand({0, 0, 0}, 4, 0.25)}).empty());
  CHECK(nms({cand({0, 0, 0}, 4, 0.2500001)}).size() == 1);
}

TEST_CASE("nms agrees with the brute-force oracle and its invariants") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cands = random_cands(rng, 1 + uniform_index(rng, 20));
    const auto got = nms(cands);
    std::vector<oracle::Cand> oc;
    for (const auto& c : cands) oc.push_back({c.box, c.probability});
    const auto want = oracle::nms(oc, 0.25, 0.25);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].box == want[i].box);
      CHECK(got[i].probability == want[i].p);
    }
    CHECK(nms(got) == got);
    for (std::size_t i = 0; i < got.size(); ++i) {
      for (std::size_t j = i + 1; j < got.size(); ++j) CHECK(iou3d(got[i].box, got[j].box) <= 0.25);
      if (i > 0) CHECK(got[i - 1].probability >= got[i].probability);
    }
  }
}

TEST_CASE("to_volume_coords") {
  const PatchSpec zero{};
  const auto same = to_volume_coords({cand({2, 2, 2}, 4, 0.9)}, zero);
  CHECK(same[0].box.center == Vec3{2, 2, 2});
  const PatchSpec tile{{80, 0, 0}};
  const auto moved = to_volume_coords({cand({2, 2, 2}, 4, 0.9)}, tile);
  CHECK(moved[0].box.center == Vec3{82, 2, 2});
  CHECK(moved[0].box.diameter == 4);
  CHECK(moved[0].source_tile == tile);
  const auto back = to_volume_coords(moved, PatchSpec{{-80, 0, 0}});
  CHECK(back[0].box.center == Vec3{2, 2, 2});
}

TEST_CASE("merge_tiles") {
  const PatchSpec t0{{0, 0, 0}}, t1{{80, 0, 0}};
  SUBCASE("one tile equals nms of the globalized list") {
    Rng rng(5);
    const auto c = random_cands(rng, 15);
    CHECK(merge_tiles({{t1, c}}) == nms(to_volume_coords(c, t1)));
  }
  SUBCASE("duplicate across overlapping tiles collapses") {
    const auto out = merge_tiles({{t0, {cand({85, 40, 40}, 8, 0.8)}}, {t1, {cand({5, 40, 40}, 8, 0.7)}}});
    REQUIRE(out.size() == 1);
    CHECK(out[0].probability == 0.8);
    CHECK(out[0].box.center == Vec3{85, 40, 40});
  }
  SUBCASE("empty") { CHECK(merge_tiles({}).empty()); }
  SUBCASE("tile order does not matter") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<TileCandidates> tiles;
      for (int t = 0; t < 4; ++t) {
        tiles.push_back({PatchSpec{{static_cast<std::int64_t>(uniform_index(rng, 3)) * 4, 0, 0}}, random_cands(rng, 5)});
      }
      const auto a = merge_tiles(tiles);
      std::reverse(tiles.begin(), tiles.end());
      CHECK(merge_tiles(tiles) == a);
    }
  }
}

TEST_CASE("decode_tile keeps tile-local outputs above the floor") {
  const auto anchors = anchor_grid();
  std::vector<TargetVector> out(anchors.size());
  out[7] = encode({{10, 3, 4}, 6}, anchors[7], 0.9);
  out[100] = encode({{30, 30, 30}, 6}, anchors[100], 0.2);
  const PatchSpec tile{{80, 0, 16}};
  const auto d = decode_tile(anchors, out, tile, 0.25);
  REQUIRE(d.size() == 1);
  CHECK(d[0].box.center.x == doctest::Approx(10));
  CHECK(d[0].box.center.z == doctest::Approx(4));
  CHECK(merge_tiles({{tile, d}})[0].box.center.x == doctest::Approx(90));
  CHECK(d[0].scale_index == std::optional<int>(anchors[7].scale_index));
  CHECK(d[0].source_tile == tile);
}
