#include "aneudet/anchors.hpp"

#include <algorithm>
#include <cmath>

#include "aneudet/errors.hpp"

namespace aneudet {

double TargetVector::operator[](int i) const {
  switch (i) {
    case 0: return p;
    case 1: return dx;
    case 2: return dy;
    case 3: return dz;
    default: return ds;
  }
}

double& TargetVector::operator[](int i) {
  switch (i) {
    case 0: return p;
    case 1: return dx;
    case 2: return dy;
    case 3: return dz;
    default: return ds;
  }
}

std::vector<Anchor> anchor_grid(const AnchorGridParams& params) {
  if (params.grid_size < 1 || params.patch_size < 1 || params.patch_size % params.grid_size != 0) {
    throw ConfigError("patch_size must be a positive multiple of grid_size");
  }
  if (params.anchor_sizes.empty()) throw ConfigError("at least one anchor size is required");
  for (double s : params.anchor_sizes) {
    if (!(s > 0.0)) throw ConfigError("anchor sizes must be > 0");
  }
  const std::int64_t g = params.grid_size;
  const double factor = static_cast<double>(params.patch_size / g);
  const auto n_scales = static_cast<int>(params.anchor_sizes.size());

  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(g * g * g * n_scales));
  for (std::int64_t k = 0; k < g; ++k) {
    for (std::int64_t j = 0; j < g; ++j) {
      for (std::int64_t i = 0; i < g; ++i) {
        const Vec3 pos{(i + 0.5) * factor, (j + 0.5) * factor, (k + 0.5) * factor};
        for (int s = 0; s < n_scales; ++s) {
          anchors.push_back({{i, j, k}, pos, params.anchor_sizes[s], s});
        }
      }
    }
  }
  return anchors;
}

double iou3d(const BoundingBox& a, const BoundingBox& b) {
  double inter = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double overlap = std::min(a.hi(axis), b.hi(axis)) - std::max(a.lo(axis), b.lo(axis));
    if (overlap <= 0.0) return 0.0;
    inter *= overlap;
  }
  const double va = a.diameter * a.diameter * a.diameter;
  const double vb = b.diameter * b.diameter * b.diameter;
  return std::clamp(inter / (va + vb - inter), 0.0, 1.0);
}

TargetVector encode(const BoundingBox& box, const Anchor& anchor, double p) {
  const double l = anchor.size;
  return {p, (box.center.x - anchor.position.x) / l, (box.center.y - anchor.position.y) / l,
          (box.center.z - anchor.position.z) / l, std::log(box.diameter / l)};
}

Decoded decode(const TargetVector& t, const Anchor& anchor) {
  const double l = anchor.size;
  const Vec3 c{anchor.position.x + t.dx * l, anchor.position.y + t.dy * l,
               anchor.position.z + t.dz * l};
  return {{c, l * std::exp(t.ds)}, t.p};
}

std::vector<AnchorLabel> assign_labels(const std::vector<Anchor>& anchors,
                                       const std::vector<BoundingBox>& lesions, double pos_iou,
                                       double neg_iou) {
  if (!(pos_iou > neg_iou)) throw ConfigError("positive IoU threshold must exceed negative");
  std::vector<AnchorLabel> labels(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const BoundingBox abox = anchors[i].box();
    double best = 0.0;
    std::optional<std::size_t> best_idx;
    for (std::size_t l = 0; l < lesions.size(); ++l) {
      const double v = iou3d(abox, lesions[l]);
      if (!best_idx || v > best) {
        best = v;
        best_idx = l;
      }
    }
    AnchorLabel& lab = labels[i];
    if (best_idx && best > pos_iou) {
      lab.status = AnchorStatus::Positive;
      lab.matched_box = lesions[*best_idx];
      lab.matched_index = best_idx;
      lab.target = encode(lesions[*best_idx], anchors[i], 1.0);
    } else if (best < neg_iou) {
      lab.status = AnchorStatus::Negative;
    } else {
      lab.status = AnchorStatus::Ignored;
    }
  }
  return labels;
}

}  // namespace aneudet
