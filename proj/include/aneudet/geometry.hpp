#pragma once

#include <array>
#include <cstdint>
#include <compare>

namespace aneudet {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
  friend auto operator<=>(const Vec3&, const Vec3&) = default;
};

struct Int3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  std::int64_t operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  std::int64_t& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  std::int64_t product() const { return x * y * z; }
  Vec3 to_vec() const {
    return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
  }

  friend bool operator==(const Int3&, const Int3&) = default;
  friend auto operator<=>(const Int3&, const Int3&) = default;
};

// Axis-aligned cube in voxel coordinates. Voxel i spans [i, i + 1), so the
// centre of voxel i sits at i + 0.5.
struct BoundingBox {
  Vec3 center;
  double diameter = 1.0;

  double lo(int axis) const { return center[axis] - 0.5 * diameter; }
  double hi(int axis) const { return center[axis] + 0.5 * diameter; }

  // Closed-interval containment.
  bool contains(const Vec3& p) const {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < lo(a) || p[a] > hi(a)) return false;
    }
    return true;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

}  // namespace aneudet
