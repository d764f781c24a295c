#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aneudet/eval.hpp"
#include "aneudet/fpr.hpp"
#include "aneudet/loss.hpp"
#include "aneudet/postproc.hpp"
#include "aneudet/synth.hpp"
#include "aneudet/volume.hpp"

namespace aneudet {

struct PreprocessConfig {
  double hu_min = -1000.0;
  double hu_max = 1000.0;
  double max_extent_mm = 200.0;
  double pad_value_hu = -1000.0;
};

struct TilingConfig {
  std::int64_t patch_size = 96;
  std::int64_t overlap = 16;
};

struct AnchorConfig {
  std::int64_t grid_size = 24;
  std::vector<double> sizes{5.0, 10.0, 20.0};
  double positive_iou = 0.5;
  double negative_iou = 0.02;
};

struct LossConfig {
  double lambda_reg = 0.5;
  std::int64_t hard_negative_k = 2;
  double eps = 1e-7;
};

struct NmsConfig {
  double iou_threshold = 0.25;
  double prob_threshold = 0.25;
};

struct FprConfig {
  std::vector<std::array<std::int64_t, 3>> patch_sizes{{20, 20, 10}, {32, 32, 16}, {48, 48, 32}};
  double sensitivity_floor = 0.05;
};

struct EvalConfig {
  std::vector<double> fppv_grid = kDefaultFppvGrid;
  std::vector<double> operating_fppvs{0.25, 1.0};
  std::int64_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
  std::vector<std::string> strata_keys{"size_class", "location", "site", "sah"};
};

struct SynthConfig {
  std::int64_t n_volumes = 10;
  double negative_fraction = 0.3;
  std::array<std::int64_t, 3> dims{128, 128, 96};
  std::array<double, 3> spacing_mm{0.5, 0.5, 0.5};
  std::string cranial_axis = "+z";
  std::int64_t n_vessels = 4;
  std::array<double, 2> vessel_radius_range{1.5, 3.0};
  std::int64_t n_aneurysms = 2;
  // 2.5 to 20 mm at the default 0.5 mm spacing.
  std::array<double, 2> aneurysm_diameter_range{5.0, 40.0};
  double vessel_hu = 300.0;
  double aneurysm_hu = 320.0;
  double background_hu = 40.0;
  double noise_sigma = 10.0;
};

struct DetectorConfig {
  std::string kind = "oracle";
  bool sensitivity_mode = false;
  double hit_prob = 0.95;
  double center_jitter_sigma = 1.0;
  double diameter_jitter_ratio = 0.1;
  double fp_per_volume = 4.0;
  std::array<double, 2> fp_prob_range{0.3, 1.0};
  std::array<double, 2> tp_prob_range{0.3, 1.0};
  std::array<double, 2> fp_diameter_range{4.0, 12.0};
};

struct ReduceConfig {
  std::string classifier = "reference";  // "reference" or "oracle"
  double bright_threshold = 0.15;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::int64_t jobs = 1;
  PreprocessConfig preprocess;
  TilingConfig tiling;
  AnchorConfig anchors;
  LossConfig loss;
  NmsConfig nms;
  FprConfig fpr;
  EvalConfig eval;
  SynthConfig synth;
  DetectorConfig detector;
  ReduceConfig reduce;

  // Throws ConfigError on out-of-range values.
  void validate() const;

  HuWindow hu_window() const { return {preprocess.hu_min, preprocess.hu_max}; }
  AnchorGridParams anchor_grid_params() const;
  NmsParams nms_params() const { return {nms.iou_threshold, nms.prob_threshold}; }
  LossParams loss_params() const;
  FprPatchSizes fpr_patch_sizes() const;
  PhantomSpec phantom_spec(std::uint64_t volume_seed, bool negative) const;
  OracleDetectorSpec oracle_spec(std::uint64_t volume_seed) const;
  BootstrapParams bootstrap_params() const;
};

nlohmann::json to_json(const RunConfig& cfg);

// Missing keys take their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace aneudet
