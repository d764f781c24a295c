#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aneudet/geometry.hpp"

namespace aneudet {

enum class CranialAxis { Unknown, PlusZ, MinusZ };

inline constexpr float kAirHu = -1000.0f;

// Dense scalar volume, x-fastest storage. Values are HU on load and
// real-valued after normalization.
class Volume {
 public:
  Volume() = default;
  Volume(Int3 dims, Vec3 spacing, float fill = 0.0f, std::string volume_id = {});
  Volume(Int3 dims, Vec3 spacing, std::vector<float> values, std::string volume_id = {});

  const Int3& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const std::string& id() const { return id_; }
  CranialAxis cranial_axis() const { return cranial_; }
  void set_id(std::string id) { id_ = std::move(id); }
  void set_cranial_axis(CranialAxis axis) { cranial_ = axis; }

  std::int64_t size() const { return dims_.product(); }
  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x + dims_.x * (y + dims_.y * z);
  }
  bool in_bounds(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.x && y < dims_.y && z < dims_.z;
  }
  float at(std::int64_t x, std::int64_t y, std::int64_t z) const { return values_[index(x, y, z)]; }
  float& at(std::int64_t x, std::int64_t y, std::int64_t z) { return values_[index(x, y, z)]; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Int3 dims_{1, 1, 1};
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::vector<float> values_ = std::vector<float>(1, 0.0f);
  std::string id_;
  CranialAxis cranial_ = CranialAxis::Unknown;
};

struct PatchSpec {
  Int3 origin;
  Int3 size{96, 96, 96};
  float pad_value = kAirHu;

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
  friend auto operator<=>(const PatchSpec& a, const PatchSpec& b) {
    if (auto c = a.origin <=> b.origin; c != 0) return c;
    return a.size <=> b.size;
  }
};

struct AugmentParams {
  Vec3 shift;
  double zoom = 1.0;
  std::array<bool, 3> flip{false, false, false};
  double contrast_scale = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Ranges for randomly drawn augmentations. Magnitudes are configuration.
struct AugmentRanges {
  double max_shift = 8.0;
  double zoom_min = 0.8;
  double zoom_max = 1.2;
  bool allow_flip = false;
  double contrast_min = 0.9;
  double contrast_max = 1.1;
  double noise_sigma_max = 20.0;
};

struct HuWindow {
  double lo = -1000.0;
  double hi = 1000.0;
};

// --- I/O -------------------------------------------------------------------

// Paths for the raw/sidecar pair. `path` may be the bare stem or either file.
std::filesystem::path volume_stem(const std::filesystem::path& path);
Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& v, const std::filesystem::path& path);

// --- preprocessing -----------------------------------------------------------

// Clamp to the HU window, then map it linearly onto [-1, 1].
Volume normalize_hu(const Volume& v, HuWindow window = {});

struct SliceRange {
  std::int64_t first = 0;
  std::int64_t count = 0;
};

// Cranial-most slices whose axial extent fits in `max_extent_mm`.
SliceRange cranial_window(const Volume& v, double max_extent_mm = 200.0);
Volume truncate_cranial(const Volume& v, double max_extent_mm = 200.0);

// --- tiling ------------------------------------------------------------------

std::vector<std::int64_t> tile_origins(std::int64_t extent, std::int64_t patch, std::int64_t overlap);
std::vector<PatchSpec> tile_volume(const Volume& v, std::int64_t patch_size = 96,
                                   std::int64_t overlap = 16, float pad_value = kAirHu);
Volume extract_patch(const Volume& v, const PatchSpec& spec);

// --- augmentation and sampling ----------------------------------------------

struct Augmented {
  Volume patch;
  std::vector<BoundingBox> boxes;
};

Augmented augment(const Volume& patch, const std::vector<BoundingBox>& boxes,
                  const AugmentParams& params, float pad_value = kAirHu);
AugmentParams draw_augment_params(const AugmentRanges& ranges, std::uint64_t seed);

struct TrainingPatch {
  PatchSpec spec;
  std::optional<std::size_t> lesion;  // set for lesion-centred draws
};

std::vector<TrainingPatch> sample_training_patches(const Volume& v,
                                                   const std::vector<BoundingBox>& lesions,
                                                   std::size_t n, double positive_fraction,
                                                   std::uint64_t seed,
                                                   std::int64_t patch_size = 96);

}  // namespace aneudet
