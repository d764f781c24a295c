#pragma once

// Brute-force reference implementations used only by tests. They are written
// from the definitions, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "aneudet/geometry.hpp"

namespace oracle {

using aneudet::BoundingBox;
using aneudet::Vec3;

// IoU of two cubes whose faces lie on the quarter-voxel lattice, by counting
// lattice cells in the intersection and in each box.
inline double lattice_iou(const BoundingBox& a, const BoundingBox& b) {
  auto q = [](double v) { return static_cast<std::int64_t>(std::llround(v * 4.0)); };
  std::int64_t inter = 1;
  std::int64_t va = 1, vb = 1;
  for (int axis = 0; axis < 3; ++axis) {
    const std::int64_t alo = q(a.center[axis] - a.diameter / 2), ahi = q(a.center[axis] + a.diameter / 2);
    const std::int64_t blo = q(b.center[axis] - b.diameter / 2), bhi = q(b.center[axis] + b.diameter / 2);
    std::int64_t shared = 0;
    for (std::int64_t cell = std::min(alo, blo); cell < std::max(ahi, bhi); ++cell) {
      if (cell >= alo && cell < ahi && cell >= blo && cell < bhi) ++shared;
    }
    inter *= shared;
    va *= ahi - alo;
    vb *= bhi - blo;
  }
  const std::int64_t uni = va + vb - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool inside_closed(const Vec3& p, const BoundingBox& b) {
  const double h = b.diameter / 2;
  return std::abs(p.x - b.center.x) <= h && std::abs(p.y - b.center.y) <= h && std::abs(p.z - b.center.z) <= h;
}

struct Cand {
  BoundingBox box;
  double p;
};

// Rank: probability descending, then centre x, y, z, then diameter.
inline bool rank_less(const Cand& a, const Cand& b) {
  return std::make_tuple(-a.p, a.box.center.x, a.box.center.y, a.box.center.z, a.box.diameter) <
         std::make_tuple(-b.p, b.box.center.x, b.box.center.y, b.box.center.z, b.box.diameter);
}

// Kept set defined recursively: a candidate above the floor survives iff no
// better-ranked survivor overlaps it by more than the IoU threshold.
inline std::vector<Cand> nms(std::vector<Cand> c, double iou_t, double p_t) {
  std::vector<Cand> above;
  for (const auto& x : c) {
    if (x.p > p_t) above.push_back(x);
  }
  std::vector<bool> keep(above.size(), false), decided(above.size(), false);
  for (std::size_t round = 0; round < above.size(); ++round) {
    // Best undecided candidate.
    std::size_t best = above.size();
    for (std::size_t i = 0; i < above.size(); ++i) {
      if (decided[i]) continue;
      if (best == above.size() || rank_less(above[i], above[best])) best = i;
    }
    decided[best] = true;
    keep[best] = true;
    for (std::size_t i = 0; i < above.size(); ++i) {
      if (keep[i] && i != best && lattice_iou(above[i].box, above[best].box) > iou_t) keep[best] = false;
    }
  }
  std::vector<Cand> out;
  for (std::size_t i = 0; i < above.size(); ++i) {
    if (keep[i]) out.push_back(above[i]);
  }
  std::sort(out.begin(), out.end(), rank_less);
  return out;
}

struct Match {
  std::size_t lesions_found = 0;
  std::size_t false_positives = 0;
  std::vector<bool> tp;
};

inline Match match(const std::vector<Cand>& cands, const std::vector<BoundingBox>& lesions) {
  Match m;
  for (const auto& c : cands) {
    bool hit = false;
    for (const auto& l : lesions) hit = hit || inside_closed(c.box.center, l);
    m.tp.push_back(hit);
    if (!hit) ++m.false_positives;
  }
  for (const auto& l : lesions) {
    bool found = false;
    for (const auto& c : cands) found = found || inside_closed(c.box.center, l);
    if (found) ++m.lesions_found;
  }
  return m;
}

struct Volume {
  std::vector<BoundingBox> lesions;
  std::vector<Cand> cands;
};

struct FrocPoint {
  double threshold, fppv, sensitivity;
};

// Re-matches the whole dataset at every distinct probability.
inline std::vector<FrocPoint> froc(const std::vector<Volume>& vols) {
  std::set<double, std::greater<double>> thresholds;
  std::size_t n_lesions = 0;
  for (const auto& v : vols) {
    n_lesions += v.lesions.size();
    for (const auto& c : v.cands) thresholds.insert(c.p);
  }
  std::vector<FrocPoint> out;
  for (double t : thresholds) {
    std::size_t fp = 0, found = 0;
    for (const auto& v : vols) {
      std::vector<Cand> kept;
      for (const auto& c : v.cands) {
        if (c.p >= t) kept.push_back(c);
      }
      const Match m = match(kept, v.lesions);
      fp += m.false_positives;
      found += m.lesions_found;
    }
    out.push_back({t, static_cast<double>(fp) / static_cast<double>(vols.size()),
                   static_cast<double>(found) / static_cast<double>(n_lesions)});
  }
  return out;
}

inline double sensitivity_at(const std::vector<FrocPoint>& pts, double fppv) {
  double best = 0.0;
  for (const auto& p : pts) {
    if (p.fppv <= fppv && p.sensitivity > best) best = p.sensitivity;
  }
  return best;
}

// Exact binomial coefficient for small arguments.
inline std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Two-sided Fisher test by enumerating every table with the same margins and
// comparing the integer numerators of their hypergeometric probabilities.
inline double fisher(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t r1 = a + b, r2 = c + d, c1 = a + c;
  const std::uint64_t observed = choose(r1, a) * choose(r2, c);
  std::uint64_t total = 0, tail = 0;
  for (std::uint64_t x = 0; x <= std::min(r1, c1); ++x) {
    if (c1 - x > r2) continue;
    const std::uint64_t w = choose(r1, x) * choose(r2, c1 - x);
    total += w;
    if (w <= observed) tail += w;
  }
  return static_cast<double>(tail) / static_cast<double>(total);
}

// AUC as the fraction of correctly ordered (positive, negative) pairs.
inline double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double s = 0.0;
  for (double p : pos) {
    for (double n : neg) s += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return s / static_cast<double>(pos.size() * neg.size());
}

}  // namespace oracle
