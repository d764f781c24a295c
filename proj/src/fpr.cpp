#include "aneudet/fpr.hpp"

#include <algorithm>
#include <cmath>

#include "aneudet/errors.hpp"

namespace aneudet {

std::vector<CandidateDetection> select_candidates(std::vector<CandidateDetection> cands,
                                                  bool sensitivity_mode, double sensitivity_floor,
                                                  NmsParams normal) {
  NmsParams params = normal;
  if (sensitivity_mode) params.prob_thresh = sensitivity_floor;
  return nms(std::move(cands), params);
}

Int3 centered_origin(const Vec3& center, const Int3& size) {
  Int3 origin;
  for (int a = 0; a < 3; ++a) {
    origin[a] = static_cast<std::int64_t>(std::floor(center[a])) - size[a] / 2;
  }
  return origin;
}

FprPatchSet extract_fpr_patches(const Volume& v, const CandidateDetection& cand,
                                const FprPatchSizes& sizes, bool normalize, HuWindow window) {
  const Vec3& c = cand.box.center;
  for (int a = 0; a < 3; ++a) {
    if (!(c[a] >= 0.0 && c[a] < static_cast<double>(v.dims()[a]))) {
      throw DataError("candidate centre lies outside volume " + v.id());
    }
  }
  FprPatchSet set{cand, {}};
  for (std::size_t s = 0; s < kFprScales; ++s) {
    const PatchSpec spec{centered_origin(c, sizes[s]), sizes[s], kAirHu};
    Volume patch = extract_patch(v, spec);
    set.patches[s] = normalize ? normalize_hu(patch, window) : std::move(patch);
  }
  return set;
}

FprLabel label_candidate(const CandidateDetection& cand, const std::vector<BoundingBox>& lesions,
                         const Int3& patch_size) {
  const Vec3& c = cand.box.center;
  for (const auto& l : lesions) {
    if (l.contains(c)) return FprLabel::Positive;
  }
  for (const auto& l : lesions) {
    bool near = true;
    for (int a = 0; a < 3; ++a) {
      if (!(std::abs(c[a] - l.center[a]) < 0.5 * static_cast<double>(patch_size[a]))) {
        near = false;
        break;
      }
    }
    if (near) return FprLabel::Excluded;
  }
  return FprLabel::Negative;
}

CandidateDetection rescore(CandidateDetection cand, const FprScores& probs) {
  FprScores sorted = probs;
  for (double p : sorted) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("classifier probability outside [0, 1]");
  }
  // Fixed summation order so the mean does not depend on scale order.
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double p : sorted) sum += p;
  cand.stage = Stage::Reduced;
  cand.probability = sum / static_cast<double>(probs.size());
  return cand;
}

const char* to_string(FprLabel label) {
  switch (label) {
    case FprLabel::Positive: return "pos";
    case FprLabel::Negative: return "neg";
    default: return "excluded";
  }
}

}  // namespace aneudet
