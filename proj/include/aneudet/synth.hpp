#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aneudet/fpr.hpp"
#include "aneudet/lesion.hpp"
#include "aneudet/postproc.hpp"
#include "aneudet/volume.hpp"

namespace aneudet {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhantomSpec {
  Int3 dims{128, 128, 96};
  Vec3 spacing{0.5, 0.5, 0.5};
  CranialAxis cranial_axis = CranialAxis::PlusZ;
  int n_vessels = 4;
  Range vessel_radius_range{1.5, 3.0};
  int n_aneurysms = 2;
  Range aneurysm_diameter_range{2.5, 20.0};  // voxels
  double vessel_hu = 300.0;
  double aneurysm_hu = 320.0;
  double background_hu = 40.0;
  double noise_sigma = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  Volume volume;
  std::vector<Lesion> lesions;
};

Phantom generate_phantom(const PhantomSpec& spec, const std::string& volume_id = "phantom");

// Size bins on the physical diameter: <=3, 3-5, 5-10, >=10 mm.
std::string size_class(double diameter_mm);

struct OracleDetectorSpec {
  double hit_prob = 1.0;
  double center_jitter_sigma = 0.0;    // voxels, per axis
  double diameter_jitter_ratio = 0.0;  // relative sigma
  double fp_per_volume = 0.0;
  Range fp_prob_range{0.3, 1.0};
  Range tp_prob_range{1.0, 1.0};
  Range fp_diameter_range{4.0, 12.0};
  std::uint64_t seed = 0;

  void validate() const;
};

// Volume-coordinate candidates simulating a detector of known quality.
std::vector<CandidateDetection> oracle_detect(const std::vector<BoundingBox>& truth,
                                              const Int3& dims, const OracleDetectorSpec& spec);

// Analytic per-scale score: fraction of bright voxels inside the central
// ellipsoid minus the fraction in the surrounding shell, mapped to [0, 1].
FprScores reference_classifier(const FprPatchSet& patches, double bright_threshold = 0.15);

class ReferenceClassifier : public PatchClassifier {
 public:
  explicit ReferenceClassifier(double bright_threshold = 0.15) : threshold_(bright_threshold) {}
  FprScores classify(const FprPatchSet& patches) const override {
    return reference_classifier(patches, threshold_);
  }

 private:
  double threshold_;
};

// Perfect classifier: 1 where the candidate centre lies inside a lesion, 0 elsewhere.
class TruthClassifier : public PatchClassifier {
 public:
  explicit TruthClassifier(std::vector<BoundingBox> lesions) : lesions_(std::move(lesions)) {}
  FprScores classify(const FprPatchSet& patches) const override;

 private:
  std::vector<BoundingBox> lesions_;
};

}  // namespace aneudet
