#include "aneudet/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "aneudet/errors.hpp"
#include "aneudet/random.hpp"

namespace aneudet {

namespace {

constexpr int kMaxPlacementTries = 1000;
constexpr int kMaxVesselSteps = 400;
constexpr double kVesselStep = 2.0;

const std::array<const char*, 7> kLocations{"ICA", "MCA", "PCOM", "PCA", "BA", "ACOM", "ACA"};

void check_range(const Range& r, const char* what, bool allow_zero) {
  const bool ok = allow_zero ? (r.lo >= 0.0 && r.hi >= r.lo) : (r.lo > 0.0 && r.hi >= r.lo);
  if (!ok) throw ConfigError(std::string(what) + " must be positive and ordered");
}

void check_prob_range(const Range& r, const char* what) {
  if (!(r.lo >= 0.0 && r.hi <= 1.0 && r.lo <= r.hi)) {
    throw ConfigError(std::string(what) + " must be an ordered sub-range of [0, 1]");
  }
}

double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const double n = norm(v);
    if (n > 1e-3 && n <= 1.0) return v * (1.0 / n);
  }
}

bool inside_dims(const Vec3& p, const Vec3& dims) {
  return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < dims.x && p.y < dims.y && p.z < dims.z;
}

struct Vessel {
  std::vector<Vec3> path;
  double radius = 1.0;
};

Vessel grow_vessel(Rng& rng, const Vec3& dims, double radius) {
  const Vec3 start{uniform(rng, 0, dims.x), uniform(rng, 0, dims.y), uniform(rng, 0, dims.z)};
  const Vec3 dir0 = random_unit(rng);
  std::vector<Vec3> fwd{start};
  std::vector<Vec3> back;
  for (int side = 0; side < 2; ++side) {
    Vec3 dir = side == 0 ? dir0 : dir0 * -1.0;
    Vec3 p = start;
    auto& out = side == 0 ? fwd : back;
    for (int s = 0; s < kMaxVesselSteps; ++s) {
      const Vec3 wobble{normal(rng, 0.15), normal(rng, 0.15), normal(rng, 0.15)};
      dir = dir + wobble;
      dir = dir * (1.0 / std::max(norm(dir), 1e-9));
      p = p + dir * kVesselStep;
      if (!inside_dims(p, dims)) break;
      out.push_back(p);
    }
  }
  Vessel v;
  v.radius = radius;
  v.path.assign(back.rbegin(), back.rend());
  v.path.insert(v.path.end(), fwd.begin(), fwd.end());
  return v;
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const Vec3 ap = p - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y + ab.z * ab.z;
  double t = len2 > 0 ? (ap.x * ab.x + ap.y * ab.y + ap.z * ab.z) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

// Calls fn(x, y, z, voxel_centre) for voxels whose centre lies in [lo, hi].
template <class Fn>
void for_voxels_in(const Volume& v, const Vec3& lo, const Vec3& hi, Fn&& fn) {
  Int3 a, b;
  for (int ax = 0; ax < 3; ++ax) {
    a[ax] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(lo[ax] - 0.5)));
    b[ax] = std::min<std::int64_t>(v.dims()[ax] - 1, static_cast<std::int64_t>(std::ceil(hi[ax] - 0.5)));
  }
  for (std::int64_t z = a.z; z <= b.z; ++z) {
    for (std::int64_t y = a.y; y <= b.y; ++y) {
      for (std::int64_t x = a.x; x <= b.x; ++x) fn(x, y, z, Vec3{x + 0.5, y + 0.5, z + 0.5});
    }
  }
}

bool boxes_disjoint(const BoundingBox& a, const BoundingBox& b) {
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(a.center[ax] - b.center[ax]) >= 0.5 * (a.diameter + b.diameter)) return true;
  }
  return false;
}

}  // namespace

void PhantomSpec::validate() const {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1) throw ConfigError("phantom dims must be >= 1");
  if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0)) throw ConfigError("phantom spacing must be > 0");
  if (n_vessels < 0 || n_aneurysms < 0) throw ConfigError("phantom counts must be >= 0");
  check_range(vessel_radius_range, "vessel_radius_range", false);
  check_range(aneurysm_diameter_range, "aneurysm_diameter_range", false);
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
}

std::string size_class(double diameter_mm) {
  if (diameter_mm <= 3.0) return "<=3mm";
  if (diameter_mm <= 5.0) return "3-5mm";
  if (diameter_mm < 10.0) return "5-10mm";
  return ">=10mm";
}

Phantom generate_phantom(const PhantomSpec& spec, const std::string& volume_id) {
  spec.validate();
  Rng rng(spec.seed);
  const Vec3 dims = spec.dims.to_vec();

  Phantom ph{Volume(spec.dims, spec.spacing, static_cast<float>(std::round(spec.background_hu)), volume_id), {}};
  ph.volume.set_cranial_axis(spec.cranial_axis);

  std::vector<Vessel> vessels;
  for (int i = 0; i < spec.n_vessels; ++i) {
    const double r = uniform(rng, spec.vessel_radius_range.lo, spec.vessel_radius_range.hi);
    vessels.push_back(grow_vessel(rng, dims, r));
  }
  const auto vessel_hu = static_cast<float>(std::round(spec.vessel_hu));
  for (const auto& vs : vessels) {
    for (std::size_t s = 0; s + 1 < vs.path.size(); ++s) {
      const Vec3 &a = vs.path[s], &b = vs.path[s + 1];
      const Vec3 lo{std::min(a.x, b.x) - vs.radius, std::min(a.y, b.y) - vs.radius, std::min(a.z, b.z) - vs.radius};
      const Vec3 hi{std::max(a.x, b.x) + vs.radius, std::max(a.y, b.y) + vs.radius, std::max(a.z, b.z) + vs.radius};
      for_voxels_in(ph.volume, lo, hi, [&](auto x, auto y, auto z, const Vec3& c) {
        if (segment_distance(c, a, b) <= vs.radius) ph.volume.at(x, y, z) = vessel_hu;
      });
    }
  }

  std::vector<const Vessel*> usable;
  for (const auto& vs : vessels) {
    if (vs.path.size() >= 2) usable.push_back(&vs);
  }

  for (int n = 0; n < spec.n_aneurysms; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries && !placed; ++attempt) {
      const double d = uniform(rng, spec.aneurysm_diameter_range.lo, spec.aneurysm_diameter_range.hi);
      const double r = 0.5 * d;
      Vec3 c;
      if (!usable.empty()) {
        // Bulge off the side of a vessel so the sphere touches the lumen.
        const Vessel& vs = *usable[uniform_index(rng, usable.size())];
        const std::size_t k = uniform_index(rng, vs.path.size() - 1);
        const Vec3 tangent = vs.path[k + 1] - vs.path[k];
        Vec3 perp = random_unit(rng);
        const double tn2 = tangent.x * tangent.x + tangent.y * tangent.y + tangent.z * tangent.z;
        const double dot = perp.x * tangent.x + perp.y * tangent.y + perp.z * tangent.z;
        perp = perp - tangent * (dot / std::max(tn2, 1e-12));
        const double pn = norm(perp);
        if (pn < 1e-6) continue;
        c = vs.path[k] + perp * ((vs.radius + 0.5 * r) / pn);
      } else {
        c = {uniform(rng, 0, dims.x), uniform(rng, 0, dims.y), uniform(rng, 0, dims.z)};
      }
      const BoundingBox box{c, d};
      bool ok = true;
      for (int ax = 0; ax < 3 && ok; ++ax) ok = box.lo(ax) >= 0.0 && box.hi(ax) <= dims[ax];
      for (const auto& other : ph.lesions) {
        if (!ok) break;
        ok = boxes_disjoint(box, other.box);
      }
      if (!ok) continue;
      Lesion lesion{box, {}};
      lesion.labels["size_class"] = size_class(d * spec.spacing.x);
      lesion.labels["location"] = kLocations[uniform_index(rng, kLocations.size())];
      ph.lesions.push_back(std::move(lesion));
      placed = true;
    }
    if (!placed) {
      throw ConfigError("could not place " + std::to_string(spec.n_aneurysms) +
                        " non-overlapping aneurysms in " + volume_id);
    }
  }

  const auto aneurysm_hu = static_cast<float>(std::round(spec.aneurysm_hu));
  for (const auto& l : ph.lesions) {
    const double r = 0.5 * l.box.diameter;
    const Vec3 rv{r, r, r};
    for_voxels_in(ph.volume, l.box.center - rv, l.box.center + rv, [&](auto x, auto y, auto z, const Vec3& c) {
      if (norm(c - l.box.center) <= r) ph.volume.at(x, y, z) = aneurysm_hu;
    });
    // The voxel holding the centre always carries the lesion intensity.
    ph.volume.at(static_cast<std::int64_t>(l.box.center.x), static_cast<std::int64_t>(l.box.center.y),
                 static_cast<std::int64_t>(l.box.center.z)) = aneurysm_hu;
  }

  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (float& x : ph.volume.values()) {
      x = static_cast<float>(std::clamp(std::round(x + noise(rng)), -32768.0, 32767.0));
    }
  }
  return ph;
}

void OracleDetectorSpec::validate() const {
  if (!(hit_prob >= 0.0 && hit_prob <= 1.0)) throw ConfigError("hit_prob must lie in [0, 1]");
  if (!(center_jitter_sigma >= 0.0) || !(diameter_jitter_ratio >= 0.0) || !(fp_per_volume >= 0.0)) {
    throw ConfigError("oracle jitter and fp_per_volume must be >= 0");
  }
  check_prob_range(fp_prob_range, "fp_prob_range");
  check_prob_range(tp_prob_range, "tp_prob_range");
  check_range(fp_diameter_range, "fp_diameter_range", false);
}

std::vector<CandidateDetection> oracle_detect(const std::vector<BoundingBox>& truth, const Int3& dims,
                                              const OracleDetectorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<CandidateDetection> out;
  for (const auto& t : truth) {
    if (!(uniform01(rng) < spec.hit_prob)) continue;
    CandidateDetection c;
    c.box = t;
    if (spec.center_jitter_sigma > 0.0) {
      for (int a = 0; a < 3; ++a) c.box.center[a] += normal(rng, spec.center_jitter_sigma);
    }
    if (spec.diameter_jitter_ratio > 0.0) {
      c.box.diameter = std::max(1.0, t.diameter * (1.0 + normal(rng, spec.diameter_jitter_ratio)));
    }
    for (int a = 0; a < 3; ++a) {
      c.box.center[a] = std::clamp(c.box.center[a], 0.0, std::nextafter(static_cast<double>(dims[a]), 0.0));
    }
    c.probability = uniform(rng, spec.tp_prob_range.lo, spec.tp_prob_range.hi);
    out.push_back(c);
  }

  if (spec.fp_per_volume > 0.0) {
    std::poisson_distribution<int> count_dist(spec.fp_per_volume);
    const int n_fp = count_dist(rng);
    const Vec3 d = dims.to_vec();
    for (int i = 0; i < n_fp; ++i) {
      for (int attempt = 0; attempt < kMaxPlacementTries; ++attempt) {
        CandidateDetection c;
        c.box.center = {uniform(rng, 0, d.x), uniform(rng, 0, d.y), uniform(rng, 0, d.z)};
        c.box.diameter = uniform(rng, spec.fp_diameter_range.lo, spec.fp_diameter_range.hi);
        c.probability = uniform(rng, spec.fp_prob_range.lo, spec.fp_prob_range.hi);
        const bool clear = std::all_of(truth.begin(), truth.end(), [&](const BoundingBox& t) {
          return boxes_disjoint(c.box, t);
        });
        if (clear) {
          out.push_back(c);
          break;
        }
      }
    }
  }
  return out;
}

FprScores reference_classifier(const FprPatchSet& patches, double bright_threshold) {
  FprScores scores{};
  for (std::size_t s = 0; s < kFprScales; ++s) {
    const Volume& p = patches.patches[s];
    const Vec3 half = p.dims().to_vec() * 0.5;
    std::int64_t in_n = 0, in_bright = 0, out_n = 0, out_bright = 0;
    for (std::int64_t z = 0; z < p.dims().z; ++z) {
      for (std::int64_t y = 0; y < p.dims().y; ++y) {
        for (std::int64_t x = 0; x < p.dims().x; ++x) {
          const double ux = (x + 0.5 - half.x) / half.x;
          const double uy = (y + 0.5 - half.y) / half.y;
          const double uz = (z + 0.5 - half.z) / half.z;
          const bool bright = p.at(x, y, z) > bright_threshold;
          if (ux * ux + uy * uy + uz * uz < 0.25) {
            ++in_n;
            in_bright += bright;
          } else {
            ++out_n;
            out_bright += bright;
          }
        }
      }
    }
    const double f_in = in_n ? static_cast<double>(in_bright) / static_cast<double>(in_n) : 0.0;
    const double f_out = out_n ? static_cast<double>(out_bright) / static_cast<double>(out_n) : 0.0;
    scores[s] = std::clamp(0.5 * (1.0 + f_in - f_out), 0.0, 1.0);
  }
  return scores;
}

FprScores TruthClassifier::classify(const FprPatchSet& patches) const {
  const Vec3& c = patches.candidate.box.center;
  const bool hit = std::any_of(lesions_.begin(), lesions_.end(),
                               [&](const BoundingBox& l) { return l.contains(c); });
  const double p = hit ? 1.0 : 0.0;
  return {p, p, p};
}

}  // namespace aneudet
