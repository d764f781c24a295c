#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aneudet/geometry.hpp"

namespace aneudet {

struct Anchor {
  Int3 grid_index;
  Vec3 position;     // voxel coordinates inside the patch
  double size = 10;  // cube side in voxels
  int scale_index = 0;

  BoundingBox box() const { return {position, size}; }
};

// Network output at one anchor: probability plus offsets normalized by the
// anchor size and a log size ratio.
struct TargetVector {
  double p = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double ds = 0.0;

  double operator[](int i) const;
  double& operator[](int i);
  friend bool operator==(const TargetVector&, const TargetVector&) = default;
};

enum class AnchorStatus { Positive, Negative, Ignored };

struct AnchorLabel {
  AnchorStatus status = AnchorStatus::Negative;
  std::optional<BoundingBox> matched_box;
  std::optional<std::size_t> matched_index;
  std::optional<TargetVector> target;
};

struct AnchorGridParams {
  std::int64_t patch_size = 96;
  std::int64_t grid_size = 24;
  std::vector<double> anchor_sizes{5.0, 10.0, 20.0};
};

// Anchors ordered grid-point-major, x fastest, scale innermost:
// index = ((k * G + j) * G + i) * S + s.
std::vector<Anchor> anchor_grid(const AnchorGridParams& params = {});

double iou3d(const BoundingBox& a, const BoundingBox& b);

TargetVector encode(const BoundingBox& box, const Anchor& anchor, double p);

struct Decoded {
  BoundingBox box;
  double probability = 0.0;
};
Decoded decode(const TargetVector& t, const Anchor& anchor);

std::vector<AnchorLabel> assign_labels(const std::vector<Anchor>& anchors,
                                       const std::vector<BoundingBox>& lesions,
                                       double pos_iou = 0.5, double neg_iou = 0.02);

}  // namespace aneudet
