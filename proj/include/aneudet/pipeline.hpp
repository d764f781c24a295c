#pragma once

#include <filesystem>
#include <vector>

#include "aneudet/anchors.hpp"
#include "aneudet/fpr.hpp"
#include "aneudet/lesion.hpp"
#include "aneudet/postproc.hpp"
#include "aneudet/records.hpp"
#include "aneudet/volume.hpp"

namespace aneudet {

// Stage-1 scorer: maps one normalized tile to a target vector per anchor
// (anchor_grid order). `tile` locates the patch in the preprocessed volume.
class PatchDetector {
 public:
  virtual ~PatchDetector() = default;
  virtual std::vector<TargetVector> predict(const Volume& patch, const PatchSpec& tile) const = 0;
};

// Replays known candidates through the anchor encoding: each candidate whose
// centre falls in a tile is written to the best-fitting anchor of that tile.
class OracleTileDetector : public PatchDetector {
 public:
  OracleTileDetector(std::vector<Anchor> anchors, AnchorGridParams grid,
                     std::vector<CandidateDetection> candidates);
  std::vector<TargetVector> predict(const Volume& patch, const PatchSpec& tile) const override;

 private:
  std::vector<Anchor> anchors_;
  AnchorGridParams grid_;
  std::vector<CandidateDetection> candidates_;
};

struct DetectParams {
  HuWindow window;
  double max_extent_mm = 200.0;
  std::int64_t patch_size = 96;
  std::int64_t overlap = 16;
  float pad_value_hu = kAirHu;
  NmsParams nms;
  bool sensitivity_mode = false;
  double sensitivity_floor = 0.05;
};

// truncate -> normalize -> tile -> score -> decode -> merge_tiles. Candidates
// come back in the coordinates of the untruncated input volume.
std::vector<CandidateDetection> detect_volume(const Volume& hu, const PatchDetector& detector,
                                              const std::vector<Anchor>& anchors,
                                              const DetectParams& params);

struct ReduceParams {
  HuWindow window;
  FprPatchSizes patch_sizes = kDefaultFprPatchSizes;
  double sensitivity_floor = 0.05;
  NmsParams nms;
};

// select_candidates (sensitivity mode) -> multi-scale patches -> classifier -> rescore.
std::vector<CandidateDetection> reduce_volume(const Volume& hu, std::vector<CandidateDetection> cands,
                                              const PatchClassifier& classifier, const ReduceParams& params);

// Writes one HU patch file per (candidate, scale) under `dir` and returns the
// manifest rows, labelled against `lesions` per scale.
std::vector<FprTrainingRecord> export_fpr_training(const Volume& hu,
                                                   const std::vector<CandidateDetection>& cands,
                                                   const std::vector<BoundingBox>& lesions,
                                                   const FprPatchSizes& sizes,
                                                   const std::filesystem::path& dir);

}  // namespace aneudet
