#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "aneudet/anchors.hpp"
#include "aneudet/volume.hpp"

namespace aneudet {

enum class Stage { Detector, Reduced };

struct CandidateDetection {
  BoundingBox box;
  double probability = 0.0;
  Stage stage = Stage::Detector;
  std::optional<PatchSpec> source_tile;
  std::optional<int> scale_index;

  friend bool operator==(const CandidateDetection&, const CandidateDetection&) = default;
};

struct NmsParams {
  double iou_thresh = 0.25;
  double prob_thresh = 0.25;
};

// Strict total order used everywhere candidates are ranked: probability
// descending, then box centre, diameter and provenance ascending.
bool ranks_before(const CandidateDetection& a, const CandidateDetection& b);

// Drops candidates with probability <= prob_thresh, then greedy suppression
// of anything with IoU > iou_thresh against a kept box.
std::vector<CandidateDetection> nms(std::vector<CandidateDetection> cands, NmsParams params = {});

std::vector<CandidateDetection> to_volume_coords(std::vector<CandidateDetection> cands,
                                                 const PatchSpec& tile);

using TileCandidates = std::pair<PatchSpec, std::vector<CandidateDetection>>;

std::vector<CandidateDetection> merge_tiles(const std::vector<TileCandidates>& per_tile,
                                            NmsParams params = {});

// Decodes per-anchor network outputs of one tile into tile-local candidates,
// keeping those with probability > prob_floor.
std::vector<CandidateDetection> decode_tile(const std::vector<Anchor>& anchors,
                                            const std::vector<TargetVector>& outputs,
                                            const PatchSpec& tile, double prob_floor);

}  // namespace aneudet
