#include "aneudet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aneudet/errors.hpp"

namespace aneudet {

OracleTileDetector::OracleTileDetector(std::vector<Anchor> anchors, AnchorGridParams grid,
                                       std::vector<CandidateDetection> candidates)
    : anchors_(std::move(anchors)), grid_(std::move(grid)), candidates_(std::move(candidates)) {
  const std::int64_t g = grid_.grid_size;
  if (static_cast<std::int64_t>(anchors_.size()) != g * g * g * static_cast<std::int64_t>(grid_.anchor_sizes.size())) {
    throw ConfigError("anchor list does not match the grid parameters");
  }
}

std::vector<TargetVector> OracleTileDetector::predict(const Volume& /*patch*/, const PatchSpec& tile) const {
  const std::int64_t g = grid_.grid_size;
  const auto n_scales = static_cast<std::int64_t>(grid_.anchor_sizes.size());
  const double factor = static_cast<double>(grid_.patch_size / g);
  std::vector<TargetVector> out(anchors_.size());

  for (const auto& c : candidates_) {
    Vec3 local = c.box.center - tile.origin.to_vec();
    bool inside = true;
    Int3 cell;
    for (int a = 0; a < 3; ++a) {
      if (!(local[a] >= 0.0 && local[a] < static_cast<double>(tile.size[a]))) inside = false;
      cell[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(local[a] / factor)), 0, g - 1);
    }
    if (!inside) continue;
    std::int64_t best_scale = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t s = 0; s < n_scales; ++s) {
      const double gap = std::abs(std::log(c.box.diameter / grid_.anchor_sizes[s]));
      if (gap < best_gap) {
        best_gap = gap;
        best_scale = s;
      }
    }
    const auto idx = static_cast<std::size_t>(((cell.z * g + cell.y) * g + cell.x) * n_scales + best_scale);
    if (out[idx].p >= c.probability) continue;
    out[idx] = encode({local, c.box.diameter}, anchors_[idx], c.probability);
  }
  return out;
}

std::vector<CandidateDetection> detect_volume(const Volume& hu, const PatchDetector& detector,
                                              const std::vector<Anchor>& anchors,
                                              const DetectParams& params) {
  const SliceRange slices = cranial_window(hu, params.max_extent_mm);
  const Volume prepared = normalize_hu(truncate_cranial(hu, params.max_extent_mm), params.window);
  const float pad = normalize_hu(Volume({1, 1, 1}, {1, 1, 1}, params.pad_value_hu), params.window).values()[0];

  NmsParams nms = params.nms;
  if (params.sensitivity_mode) nms.prob_thresh = params.sensitivity_floor;

  std::vector<TileCandidates> per_tile;
  for (const PatchSpec& tile : tile_volume(prepared, params.patch_size, params.overlap, pad)) {
    const Volume patch = extract_patch(prepared, tile);
    const auto outputs = detector.predict(patch, tile);
    per_tile.emplace_back(tile, decode_tile(anchors, outputs, tile, nms.prob_thresh));
  }
  auto merged = merge_tiles(per_tile, nms);
  const Vec3 shift{0.0, 0.0, static_cast<double>(slices.first)};
  for (auto& c : merged) {
    c.box.center = c.box.center + shift;
    if (c.source_tile) c.source_tile->origin.z += slices.first;
  }
  return merged;
}

std::vector<CandidateDetection> reduce_volume(const Volume& hu, std::vector<CandidateDetection> cands,
                                              const PatchClassifier& classifier, const ReduceParams& params) {
  auto selected = select_candidates(std::move(cands), true, params.sensitivity_floor, params.nms);
  std::vector<CandidateDetection> out;
  out.reserve(selected.size());
  for (const auto& c : selected) {
    const FprPatchSet set = extract_fpr_patches(hu, c, params.patch_sizes, true, params.window);
    out.push_back(rescore(c, classifier.classify(set)));
  }
  return out;
}

std::vector<FprTrainingRecord> export_fpr_training(const Volume& hu,
                                                   const std::vector<CandidateDetection>& cands,
                                                   const std::vector<BoundingBox>& lesions,
                                                   const FprPatchSizes& sizes,
                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<FprTrainingRecord> rows;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const FprPatchSet set = extract_fpr_patches(hu, cands[i], sizes, false);
    for (std::size_t s = 0; s < kFprScales; ++s) {
      const std::string name = hu.id() + "_c" + std::to_string(i) + "_s" + std::to_string(s);
      write_volume(set.patches[s], dir / name);
      rows.push_back({hu.id(), cands[i].box.center, label_candidate(cands[i], lesions, sizes[s]),
                      static_cast<int>(s), name});
    }
  }
  return rows;
}

}  // namespace aneudet
