#pragma once

#include <array>
#include <vector>

#include "aneudet/postproc.hpp"
#include "aneudet/volume.hpp"

namespace aneudet {

inline constexpr std::size_t kFprScales = 3;
using FprPatchSizes = std::array<Int3, kFprScales>;

inline constexpr FprPatchSizes kDefaultFprPatchSizes{
    Int3{20, 20, 10}, Int3{32, 32, 16}, Int3{48, 48, 32}};

struct FprPatchSet {
  CandidateDetection candidate;
  std::array<Volume, kFprScales> patches;
};

enum class FprLabel { Positive, Negative, Excluded };

using FprScores = std::array<double, kFprScales>;

// Any second-stage scorer: one probability per patch scale.
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;
  virtual FprScores classify(const FprPatchSet& patches) const = 0;
};

// NMS with the low sensitivity floor (sensitivity mode) or the regular one.
std::vector<CandidateDetection> select_candidates(std::vector<CandidateDetection> cands,
                                                  bool sensitivity_mode,
                                                  double sensitivity_floor = 0.05,
                                                  NmsParams normal = {});

// Origin of a patch of `size` whose index size/2 holds the candidate voxel.
Int3 centered_origin(const Vec3& center, const Int3& size);

// Patches are HU-windowed to [-1, 1] unless `normalize` is false.
FprPatchSet extract_fpr_patches(const Volume& v, const CandidateDetection& cand,
                                const FprPatchSizes& sizes = kDefaultFprPatchSizes,
                                bool normalize = true, HuWindow window = {});

FprLabel label_candidate(const CandidateDetection& cand, const std::vector<BoundingBox>& lesions,
                         const Int3& patch_size);

CandidateDetection rescore(CandidateDetection cand, const FprScores& probs);

const char* to_string(FprLabel label);

}  // namespace aneudet
