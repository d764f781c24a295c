#include "aneudet/postproc.hpp"

#include <algorithm>
#include <tuple>

#include "aneudet/errors.hpp"

namespace aneudet {

bool ranks_before(const CandidateDetection& a, const CandidateDetection& b) {
  if (a.probability != b.probability) return a.probability > b.probability;
  if (a.box.center != b.box.center) return a.box.center < b.box.center;
  if (a.box.diameter != b.box.diameter) return a.box.diameter < b.box.diameter;
  if (a.source_tile != b.source_tile) return a.source_tile < b.source_tile;
  if (a.scale_index != b.scale_index) return a.scale_index < b.scale_index;
  return a.stage < b.stage;
}

std::vector<CandidateDetection> nms(std::vector<CandidateDetection> cands, NmsParams params) {
  std::erase_if(cands, [&](const CandidateDetection& c) { return !(c.probability > params.prob_thresh); });
  std::sort(cands.begin(), cands.end(), ranks_before);
  std::vector<CandidateDetection> kept;
  std::vector<bool> removed(cands.size(), false);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(cands[i]);
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (!removed[j] && iou3d(cands[i].box, cands[j].box) > params.iou_thresh) removed[j] = true;
    }
  }
  return kept;
}

std::vector<CandidateDetection> to_volume_coords(std::vector<CandidateDetection> cands,
                                                 const PatchSpec& tile) {
  const Vec3 offset = tile.origin.to_vec();
  for (auto& c : cands) {
    c.box.center = c.box.center + offset;
    if (!c.source_tile) c.source_tile = tile;
  }
  return cands;
}

std::vector<CandidateDetection> merge_tiles(const std::vector<TileCandidates>& per_tile,
                                            NmsParams params) {
  std::vector<CandidateDetection> all;
  for (const auto& [tile, cands] : per_tile) {
    auto global = to_volume_coords(cands, tile);
    all.insert(all.end(), global.begin(), global.end());
  }
  return nms(std::move(all), params);
}

std::vector<CandidateDetection> decode_tile(const std::vector<Anchor>& anchors,
                                            const std::vector<TargetVector>& outputs,
                                            const PatchSpec& tile, double prob_floor) {
  if (anchors.size() != outputs.size()) {
    throw ConfigError("detector output count does not match the anchor grid");
  }
  std::vector<CandidateDetection> out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!(outputs[i].p > prob_floor)) continue;
    const Decoded d = decode(outputs[i], anchors[i]);
    CandidateDetection c;
    c.box = d.box;
    c.probability = std::clamp(d.probability, 0.0, 1.0);
    c.source_tile = tile;
    c.scale_index = anchors[i].scale_index;
    out.push_back(c);
  }
  return out;
}

}  // namespace aneudet
