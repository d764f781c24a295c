#include <doctest.h>

#include <cmath>

#include "aneudet/pipeline.hpp"
#include "aneudet/synth.hpp"
#include "../test_util.hpp"

using namespace aneudet;

namespace {

bool near(const BoundingBox& a, const BoundingBox& b, double tol) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(a.center[i] - b.center[i]) > tol) return false;
  }
  return std::abs(a.diameter - b.diameter) <= tol;
}

}  // namespace

TEST_CASE("oracle tile detector through the full detection path") {
  const AnchorGridParams grid;
  const auto anchors = anchor_grid(grid);
  PhantomSpec spec;
  spec.seed = 3;
  spec.n_aneurysms = 3;
  spec.aneurysm_diameter_range = {5, 30};
  const Phantom ph = generate_phantom(spec);

  std::vector<CandidateDetection> truth;
  for (const auto& l : ph.lesions) truth.push_back({l.box, 1.0, Stage::Detector, {}, {}});
  const OracleTileDetector det(anchors, grid, truth);
  const auto out = detect_volume(ph.volume, det, anchors, DetectParams{});
  REQUIRE(out.size() == truth.size());
  for (const auto& t : truth) {
    CHECK(std::any_of(out.begin(), out.end(), [&](const CandidateDetection& c) {
      return near(c.box, t.box, 1e-9) && c.probability == 1.0;
    }));
  }
}

TEST_CASE("detection reports coordinates of the untruncated volume") {
  const AnchorGridParams grid;
  const auto anchors = anchor_grid(grid);
  Volume v({64, 64, 300}, {1, 1, 1}, 0.0f, "tall");
  v.set_cranial_axis(CranialAxis::PlusZ);
  const BoundingBox box{{30, 30, 250}, 8};
  // The detector sees truncated coordinates: slices 100..299 remain.
  const OracleTileDetector det(anchors, grid, {{{{30, 30, 150}, 8}, 0.9, Stage::Detector, {}, {}}});
  const auto out = detect_volume(v, det, anchors, DetectParams{});
  REQUIRE(out.size() == 1);
  CHECK(near(out[0].box, box, 1e-9));
  REQUIRE(out[0].source_tile);
  CHECK(out[0].source_tile->origin.z >= 100);
}

TEST_CASE("sensitivity mode keeps low-probability candidates") {
  const AnchorGridParams grid;
  const auto anchors = anchor_grid(grid);
  Volume v({96, 96, 96}, {1, 1, 1}, 0.0f, "v");
  v.set_cranial_axis(CranialAxis::PlusZ);
  const OracleTileDetector det(anchors, grid, {{{{40, 40, 40}, 8}, 0.1, Stage::Detector, {}, {}}});
  DetectParams p;
  CHECK(detect_volume(v, det, anchors, p).empty());
  p.sensitivity_mode = true;
  CHECK(detect_volume(v, det, anchors, p).size() == 1);
}

TEST_CASE("reduce_volume with the truth classifier") {
  PhantomSpec spec;
  spec.seed = 8;
  const Phantom ph = generate_phantom(spec);
  std::vector<BoundingBox> boxes;
  std::vector<CandidateDetection> cands;
  for (const auto& l : ph.lesions) {
    boxes.push_back(l.box);
    cands.push_back({l.box, 0.4, Stage::Detector, {}, {}});
  }
  OracleDetectorSpec fp;
  fp.hit_prob = 0.0;
  fp.fp_per_volume = 6.0;
  fp.seed = 2;
  for (auto& c : oracle_detect(boxes, ph.volume.dims(), fp)) cands.push_back(c);

  const auto out = reduce_volume(ph.volume, cands, TruthClassifier(boxes), ReduceParams{});
  for (const auto& c : out) {
    CHECK(c.stage == Stage::Reduced);
    const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const BoundingBox& b) { return b.contains(c.box.center); });
    CHECK(c.probability == (inside ? 1.0 : 0.0));
  }
  CHECK(reduce_volume(ph.volume, {}, TruthClassifier(boxes), ReduceParams{}).empty());
}

TEST_CASE("FPR training export") {
  testutil::TempDir dir("fprx");
  Volume v({64, 64, 64}, {1, 1, 1}, 20.0f, "v");
  const std::vector<CandidateDetection> cands{{{{32, 32, 32}, 6}, 0.9, Stage::Detector, {}, {}},
                                              {{{5, 5, 5}, 6}, 0.5, Stage::Detector, {}, {}}};
  const auto rows = export_fpr_training(v, cands, {{{32, 32, 32}, 6}}, kDefaultFprPatchSizes, dir.path());
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].label == FprLabel::Positive);
  CHECK(rows[3].label == FprLabel::Negative);
  const Volume patch = read_volume(dir / rows[5].patch_file);
  CHECK(patch.dims() == kDefaultFprPatchSizes[2]);
}
