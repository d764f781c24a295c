#include "aneudet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "aneudet/errors.hpp"
#include "aneudet/random.hpp"

namespace aneudet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_geometry(const Int3& dims, const Vec3& spacing) {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1) throw DataError("volume dims must all be >= 1");
  if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0)) {
    throw DataError("volume spacing must all be > 0");
  }
}

std::string axis_name(CranialAxis axis) {
  switch (axis) {
    case CranialAxis::PlusZ: return "+z";
    case CranialAxis::MinusZ: return "-z";
    default: return "unknown";
  }
}

CranialAxis parse_axis(const std::string& s) {
  if (s == "+z") return CranialAxis::PlusZ;
  if (s == "-z") return CranialAxis::MinusZ;
  return CranialAxis::Unknown;
}

fs::path raw_path(const fs::path& stem) { return fs::path(stem.string() + ".vol.raw"); }
fs::path header_path(const fs::path& stem) { return fs::path(stem.string() + ".vol.json"); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Volume::Volume(Int3 dims, Vec3 spacing, float fill, std::string volume_id)
    : dims_(dims), spacing_(spacing), id_(std::move(volume_id)) {
  check_geometry(dims, spacing);
  values_.assign(static_cast<std::size_t>(dims.product()), fill);
}

Volume::Volume(Int3 dims, Vec3 spacing, std::vector<float> values, std::string volume_id)
    : dims_(dims), spacing_(spacing), values_(std::move(values)), id_(std::move(volume_id)) {
  check_geometry(dims, spacing);
  if (static_cast<std::int64_t>(values_.size()) != dims.product()) {
    throw DataError("value count does not match dims");
  }
}

fs::path volume_stem(const fs::path& path) {
  const std::string s = path.string();
  for (const char* suffix : {".vol.raw", ".vol.json"}) {
    if (ends_with(s, suffix)) return fs::path(s.substr(0, s.size() - std::strlen(suffix)));
  }
  return path;
}

Volume read_volume(const fs::path& path) {
  const fs::path stem = volume_stem(path);
  const fs::path hdr = header_path(stem);
  const fs::path raw = raw_path(stem);

  std::ifstream hin(hdr);
  if (!hin) throw DataError("missing volume header: " + hdr.string());
  json h;
  try {
    hin >> h;
  } catch (const json::exception& e) {
    throw DataError("malformed volume header " + hdr.string() + ": " + e.what());
  }

  Int3 dims;
  Vec3 spacing;
  std::string id;
  CranialAxis axis = CranialAxis::Unknown;
  try {
    const auto& d = h.at("dims");
    const auto& sp = h.at("spacing_mm");
    if (d.size() != 3 || sp.size() != 3) throw DataError("dims/spacing_mm must have 3 entries");
    dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
    spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    id = h.value("volume_id", stem.filename().string());
    if (h.contains("cranial_axis")) axis = parse_axis(h["cranial_axis"].get<std::string>());
  } catch (const json::exception& e) {
    throw DataError("invalid volume header " + hdr.string() + ": " + e.what());
  }
  check_geometry(dims, spacing);

  std::ifstream rin(raw, std::ios::binary | std::ios::ate);
  if (!rin) throw DataError("missing volume data: " + raw.string());
  const auto bytes = static_cast<std::int64_t>(rin.tellg());
  const std::int64_t expected = dims.product() * 2;
  if (bytes != expected) {
    throw DataError("size mismatch in " + raw.string() + ": header implies " +
                    std::to_string(expected) + " bytes, file holds " + std::to_string(bytes));
  }
  rin.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(bytes));
  rin.read(reinterpret_cast<char*>(buf.data()), bytes);

  std::vector<float> values(static_cast<std::size_t>(dims.product()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
    values[i] = static_cast<float>(static_cast<std::int16_t>(u));
  }
  Volume v(dims, spacing, std::move(values), id);
  v.set_cranial_axis(axis);
  return v;
}

void write_volume(const Volume& v, const fs::path& path) {
  const fs::path stem = volume_stem(path);
  std::vector<unsigned char> buf(static_cast<std::size_t>(v.size()) * 2);
  const auto& vals = v.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const float x = vals[i];
    if (!(x >= -32768.0f && x <= 32767.0f) || std::nearbyint(x) != x) {
      throw DataError("volume value " + std::to_string(x) + " is not representable as int16 HU");
    }
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(x));
    buf[2 * i] = static_cast<unsigned char>(u & 0xff);
    buf[2 * i + 1] = static_cast<unsigned char>(u >> 8);
  }

  std::ofstream rout(raw_path(stem), std::ios::binary | std::ios::trunc);
  if (!rout) throw DataError("cannot write " + raw_path(stem).string());
  rout.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));

  json h;
  h["dims"] = {v.dims().x, v.dims().y, v.dims().z};
  h["spacing_mm"] = {v.spacing().x, v.spacing().y, v.spacing().z};
  if (v.cranial_axis() != CranialAxis::Unknown) h["cranial_axis"] = axis_name(v.cranial_axis());
  h["volume_id"] = v.id();
  std::ofstream hout(header_path(stem), std::ios::trunc);
  if (!hout) throw DataError("cannot write " + header_path(stem).string());
  hout << h.dump(2) << '\n';
  if (!rout || !hout) throw DataError("write failed for " + stem.string());
}

Volume normalize_hu(const Volume& v, HuWindow window) {
  if (!(window.hi > window.lo)) throw ConfigError("HU window must have hi > lo");
  Volume out = v;
  const double mid = 0.5 * (window.hi + window.lo);
  const double half = 0.5 * (window.hi - window.lo);
  for (float& x : out.values()) {
    const double c = std::clamp(static_cast<double>(x), window.lo, window.hi);
    x = static_cast<float>((c - mid) / half);
  }
  return out;
}

SliceRange cranial_window(const Volume& v, double max_extent_mm) {
  if (v.cranial_axis() == CranialAxis::Unknown) {
    throw DataError("volume " + v.id() + " does not declare its cranial axis");
  }
  if (!(max_extent_mm > 0.0)) throw ConfigError("max_extent_mm must be > 0");
  const std::int64_t nz = v.dims().z;
  const double ratio = max_extent_mm / v.spacing().z;
  // Slack keeps exact quotients such as 200 / 0.8 from flooring to 249.
  const auto keep = static_cast<std::int64_t>(std::floor(ratio + 1e-9));
  if (keep >= nz) return {0, nz};
  const std::int64_t count = std::max<std::int64_t>(keep, 1);
  if (v.cranial_axis() == CranialAxis::PlusZ) return {nz - count, count};
  return {0, count};
}

Volume truncate_cranial(const Volume& v, double max_extent_mm) {
  const SliceRange r = cranial_window(v, max_extent_mm);
  if (r.first == 0 && r.count == v.dims().z) return v;
  const Int3 d{v.dims().x, v.dims().y, r.count};
  const std::int64_t plane = d.x * d.y;
  std::vector<float> values(v.values().begin() + r.first * plane,
                            v.values().begin() + (r.first + r.count) * plane);
  Volume out(d, v.spacing(), std::move(values), v.id());
  out.set_cranial_axis(v.cranial_axis());
  return out;
}

std::vector<std::int64_t> tile_origins(std::int64_t extent, std::int64_t patch, std::int64_t overlap) {
  if (patch <= overlap || overlap < 0) throw ConfigError("tiling requires patch_size > overlap >= 0");
  if (extent <= patch) return {0};
  const std::int64_t stride = patch - overlap;
  std::vector<std::int64_t> origins;
  for (std::int64_t o = 0;; o += stride) {
    if (o + patch >= extent) {
      origins.push_back(extent - patch);
      break;
    }
    origins.push_back(o);
  }
  return origins;
}

std::vector<PatchSpec> tile_volume(const Volume& v, std::int64_t patch_size, std::int64_t overlap,
                                   float pad_value) {
  const auto ox = tile_origins(v.dims().x, patch_size, overlap);
  const auto oy = tile_origins(v.dims().y, patch_size, overlap);
  const auto oz = tile_origins(v.dims().z, patch_size, overlap);
  std::vector<PatchSpec> specs;
  specs.reserve(ox.size() * oy.size() * oz.size());
  for (auto z : oz) {
    for (auto y : oy) {
      for (auto x : ox) {
        specs.push_back({{x, y, z}, {patch_size, patch_size, patch_size}, pad_value});
      }
    }
  }
  return specs;
}

Volume extract_patch(const Volume& v, const PatchSpec& spec) {
  if (spec.size.x < 1 || spec.size.y < 1 || spec.size.z < 1) {
    throw ConfigError("patch size must all be >= 1");
  }
  Volume out(spec.size, v.spacing(), spec.pad_value, v.id());
  out.set_cranial_axis(v.cranial_axis());
  const Int3& d = v.dims();
  const Int3& o = spec.origin;
  // Copy the in-bounds slab row by row.
  const std::int64_t x0 = std::max<std::int64_t>(0, -o.x);
  const std::int64_t x1 = std::min<std::int64_t>(spec.size.x, d.x - o.x);
  if (x1 <= x0) return out;
  for (std::int64_t z = 0; z < spec.size.z; ++z) {
    const std::int64_t sz = z + o.z;
    if (sz < 0 || sz >= d.z) continue;
    for (std::int64_t y = 0; y < spec.size.y; ++y) {
      const std::int64_t sy = y + o.y;
      if (sy < 0 || sy >= d.y) continue;
      const float* src = &v.values()[v.index(x0 + o.x, sy, sz)];
      std::copy(src, src + (x1 - x0), &out.values()[out.index(x0, y, z)]);
    }
  }
  return out;
}

namespace {

double sample_trilinear(const Volume& v, double sx, double sy, double sz, float pad) {
  const double fx = std::floor(sx), fy = std::floor(sy), fz = std::floor(sz);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double wx[2] = {1.0 - (sx - fx), sx - fx};
  const double wy[2] = {1.0 - (sy - fy), sy - fy};
  const double wz[2] = {1.0 - (sz - fz), sz - fz};
  double acc = 0.0;
  for (int c = 0; c < 2; ++c) {
    if (wz[c] == 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      if (wy[b] == 0.0) continue;
      for (int a = 0; a < 2; ++a) {
        if (wx[a] == 0.0) continue;
        const std::int64_t x = ix + a, y = iy + b, z = iz + c;
        const double val = v.in_bounds(x, y, z) ? v.at(x, y, z) : pad;
        acc += wx[a] * wy[b] * wz[c] * val;
      }
    }
  }
  return acc;
}

}  // namespace

Augmented augment(const Volume& patch, const std::vector<BoundingBox>& boxes,
                  const AugmentParams& params, float pad_value) {
  if (!(params.zoom > 0.0)) throw ConfigError("augment zoom must be > 0");
  if (!(params.noise_sigma >= 0.0)) throw ConfigError("augment noise_sigma must be >= 0");

  const Vec3 dims = patch.dims().to_vec();
  const Vec3 center = dims * 0.5;

  // Forward map on continuous coordinates: zoom about the centre, shift, flip.
  auto forward = [&](Vec3 p) {
    Vec3 q = (p - center) * params.zoom + center + params.shift;
    for (int a = 0; a < 3; ++a) {
      if (params.flip[a]) q[a] = dims[a] - q[a];
    }
    return q;
  };
  auto inverse = [&](Vec3 q) {
    for (int a = 0; a < 3; ++a) {
      if (params.flip[a]) q[a] = dims[a] - q[a];
    }
    return (q - center - params.shift) * (1.0 / params.zoom) + center;
  };

  Augmented out{Volume(patch.dims(), patch.spacing(), 0.0f, patch.id()), {}};
  out.patch.set_cranial_axis(patch.cranial_axis());
  const Int3& d = patch.dims();
  const bool geometric = params.zoom != 1.0 || params.shift != Vec3{} || params.flip[0] ||
                         params.flip[1] || params.flip[2];
  if (geometric) {
    for (std::int64_t z = 0; z < d.z; ++z) {
      for (std::int64_t y = 0; y < d.y; ++y) {
        for (std::int64_t x = 0; x < d.x; ++x) {
          const Vec3 q{x + 0.5, y + 0.5, z + 0.5};
          const Vec3 p = inverse(q);
          out.patch.at(x, y, z) = static_cast<float>(
              sample_trilinear(patch, p.x - 0.5, p.y - 0.5, p.z - 0.5, pad_value));
        }
      }
    }
  } else {
    out.patch.values() = patch.values();
  }

  auto& vals = out.patch.values();
  if (params.contrast_scale != 1.0) {
    double mean = 0.0;
    for (float x : vals) mean += x;
    mean /= static_cast<double>(vals.size());
    for (float& x : vals) x = static_cast<float>((x - mean) * params.contrast_scale + mean);
  }
  if (params.noise_sigma > 0.0) {
    Rng rng(params.seed);
    std::normal_distribution<double> noise(0.0, params.noise_sigma);
    for (float& x : vals) x = static_cast<float>(x + noise(rng));
  }

  out.boxes.reserve(boxes.size());
  for (const auto& b : boxes) {
    out.boxes.push_back({forward(b.center), b.diameter * params.zoom});
  }
  return out;
}

AugmentParams draw_augment_params(const AugmentRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  AugmentParams p;
  for (int a = 0; a < 3; ++a) p.shift[a] = uniform(rng, -ranges.max_shift, ranges.max_shift);
  p.zoom = uniform(rng, ranges.zoom_min, ranges.zoom_max);
  for (int a = 0; a < 3; ++a) p.flip[a] = ranges.allow_flip && (rng() & 1U);
  p.contrast_scale = uniform(rng, ranges.contrast_min, ranges.contrast_max);
  p.noise_sigma = uniform(rng, 0.0, ranges.noise_sigma_max);
  p.seed = rng();
  return p;
}

std::vector<TrainingPatch> sample_training_patches(const Volume& v,
                                                   const std::vector<BoundingBox>& lesions,
                                                   std::size_t n, double positive_fraction,
                                                   std::uint64_t seed, std::int64_t patch_size) {
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
    throw ConfigError("positive_fraction must lie in [0, 1]");
  }
  if (positive_fraction > 0.0 && lesions.empty()) {
    throw ConfigError("lesion-centred sampling requested for a volume without lesions");
  }
  if (patch_size < 1) throw ConfigError("patch_size must be >= 1");

  Rng rng(seed);
  const Int3 size{patch_size, patch_size, patch_size};
  const double lo = 0.25 * static_cast<double>(patch_size);
  const double hi = std::max(lo, 0.75 * static_cast<double>(patch_size) - 1.0);

  std::vector<TrainingPatch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrainingPatch tp;
    tp.spec.size = size;
    if (uniform01(rng) < positive_fraction) {
      const std::size_t li = uniform_index(rng, lesions.size());
      const Vec3& c = lesions[li].center;
      for (int a = 0; a < 3; ++a) {
        tp.spec.origin[a] = static_cast<std::int64_t>(std::floor(c[a] - uniform(rng, lo, hi)));
      }
      tp.lesion = li;
    } else {
      for (int a = 0; a < 3; ++a) {
        const std::int64_t room = v.dims()[a] - patch_size;
        tp.spec.origin[a] =
            room > 0 ? static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(room) + 1)) : 0;
      }
    }
    out.push_back(tp);
  }
  return out;
}

}  // namespace aneudet
