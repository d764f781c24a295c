#include "aneudet/config.hpp"

#include <fstream>

#include "aneudet/errors.hpp"

namespace aneudet {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PreprocessConfig, hu_min, hu_max, max_extent_mm, pad_value_hu)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TilingConfig, patch_size, overlap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AnchorConfig, grid_size, sizes, positive_iou, negative_iou)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossConfig, lambda_reg, hard_negative_k, eps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NmsConfig, iou_threshold, prob_threshold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FprConfig, patch_sizes, sensitivity_floor)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, fppv_grid, operating_fppvs, bootstrap_resamples,
                                                ci_level, strata_keys)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthConfig, n_volumes, negative_fraction, dims, spacing_mm,
                                                cranial_axis, n_vessels, vessel_radius_range, n_aneurysms,
                                                aneurysm_diameter_range, vessel_hu, aneurysm_hu, background_hu,
                                                noise_sigma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DetectorConfig, kind, sensitivity_mode, hit_prob,
                                                center_jitter_sigma, diameter_jitter_ratio, fp_per_volume,
                                                fp_prob_range, tp_prob_range, fp_diameter_range)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReduceConfig, classifier, bright_threshold)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, seed, jobs, preprocess, tiling, anchors, loss, nms, fpr,
                                                eval, synth, detector, reduce)

namespace {

void reject_unknown_keys(const json& given, const json& reference, const std::string& where) {
  if (!given.is_object() || !reference.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const auto it = reference.find(key);
    if (it == reference.end()) throw ConfigError("unknown config key '" + where + key + "'");
    reject_unknown_keys(value, *it, where + key + ".");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  require(jobs >= 1, "jobs must be >= 1");
  require(preprocess.hu_max > preprocess.hu_min, "preprocess.hu_max must exceed hu_min");
  require(preprocess.max_extent_mm > 0, "preprocess.max_extent_mm must be > 0");
  require(tiling.patch_size > tiling.overlap && tiling.overlap >= 0, "tiling needs patch_size > overlap >= 0");
  require(anchors.grid_size >= 1 && tiling.patch_size % anchors.grid_size == 0,
          "tiling.patch_size must be a multiple of anchors.grid_size");
  require(!anchors.sizes.empty(), "anchors.sizes must not be empty");
  require(anchors.positive_iou > anchors.negative_iou, "anchors.positive_iou must exceed negative_iou");
  loss_params().validate();
  require(nms.iou_threshold >= 0 && nms.iou_threshold <= 1, "nms.iou_threshold must lie in [0, 1]");
  require(nms.prob_threshold >= 0 && nms.prob_threshold <= 1, "nms.prob_threshold must lie in [0, 1]");
  require(fpr.patch_sizes.size() == kFprScales, "fpr.patch_sizes must list exactly 3 sizes");
  for (const auto& s : fpr.patch_sizes) require(s[0] >= 1 && s[1] >= 1 && s[2] >= 1, "fpr patch sizes must be >= 1");
  require(fpr.sensitivity_floor >= 0 && fpr.sensitivity_floor <= 1, "fpr.sensitivity_floor must lie in [0, 1]");
  require(!eval.fppv_grid.empty(), "eval.fppv_grid must not be empty");
  for (double f : eval.fppv_grid) require(f >= 0, "eval.fppv_grid entries must be >= 0");
  for (double f : eval.operating_fppvs) require(f >= 0, "eval.operating_fppvs entries must be >= 0");
  require(eval.bootstrap_resamples >= 1, "eval.bootstrap_resamples must be >= 1");
  require(eval.ci_level > 0 && eval.ci_level < 1, "eval.ci_level must lie in (0, 1)");
  require(synth.n_volumes >= 0, "synth.n_volumes must be >= 0");
  require(synth.negative_fraction >= 0 && synth.negative_fraction <= 1, "synth.negative_fraction must lie in [0, 1]");
  require(synth.cranial_axis == "+z" || synth.cranial_axis == "-z", "synth.cranial_axis must be +z or -z");
  phantom_spec(0, false).validate();
  require(detector.kind == "oracle", "detector.kind must be 'oracle' (the only built-in detector)");
  oracle_spec(0).validate();
  require(reduce.classifier == "reference" || reduce.classifier == "oracle",
          "reduce.classifier must be 'reference' or 'oracle'");
}

AnchorGridParams RunConfig::anchor_grid_params() const {
  return {tiling.patch_size, anchors.grid_size, anchors.sizes};
}

LossParams RunConfig::loss_params() const {
  require(loss.hard_negative_k >= 1, "loss.hard_negative_k must be >= 1");
  return {loss.lambda_reg, loss.eps, static_cast<std::size_t>(loss.hard_negative_k)};
}

FprPatchSizes RunConfig::fpr_patch_sizes() const {
  require(fpr.patch_sizes.size() == kFprScales, "fpr.patch_sizes must list exactly 3 sizes");
  FprPatchSizes out;
  for (std::size_t s = 0; s < kFprScales; ++s) {
    out[s] = {fpr.patch_sizes[s][0], fpr.patch_sizes[s][1], fpr.patch_sizes[s][2]};
  }
  return out;
}

PhantomSpec RunConfig::phantom_spec(std::uint64_t volume_seed, bool negative) const {
  PhantomSpec p;
  p.dims = {synth.dims[0], synth.dims[1], synth.dims[2]};
  p.spacing = {synth.spacing_mm[0], synth.spacing_mm[1], synth.spacing_mm[2]};
  p.cranial_axis = synth.cranial_axis == "-z" ? CranialAxis::MinusZ : CranialAxis::PlusZ;
  p.n_vessels = static_cast<int>(synth.n_vessels);
  p.vessel_radius_range = {synth.vessel_radius_range[0], synth.vessel_radius_range[1]};
  p.n_aneurysms = negative ? 0 : static_cast<int>(synth.n_aneurysms);
  p.aneurysm_diameter_range = {synth.aneurysm_diameter_range[0], synth.aneurysm_diameter_range[1]};
  p.vessel_hu = synth.vessel_hu;
  p.aneurysm_hu = synth.aneurysm_hu;
  p.background_hu = synth.background_hu;
  p.noise_sigma = synth.noise_sigma;
  p.seed = volume_seed;
  return p;
}

OracleDetectorSpec RunConfig::oracle_spec(std::uint64_t volume_seed) const {
  OracleDetectorSpec s;
  s.hit_prob = detector.hit_prob;
  s.center_jitter_sigma = detector.center_jitter_sigma;
  s.diameter_jitter_ratio = detector.diameter_jitter_ratio;
  s.fp_per_volume = detector.fp_per_volume;
  s.fp_prob_range = {detector.fp_prob_range[0], detector.fp_prob_range[1]};
  s.tp_prob_range = {detector.tp_prob_range[0], detector.tp_prob_range[1]};
  s.fp_diameter_range = {detector.fp_diameter_range[0], detector.fp_diameter_range[1]};
  s.seed = volume_seed;
  return s;
}

BootstrapParams RunConfig::bootstrap_params() const {
  BootstrapParams b;
  b.n_resamples = static_cast<std::size_t>(eval.bootstrap_resamples);
  b.level = eval.ci_level;
  b.seed = seed;
  b.jobs = static_cast<unsigned>(jobs);
  return b;
}

json to_json(const RunConfig& cfg) {
  json j = cfg;
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(j, to_json(RunConfig{}), "");
  RunConfig cfg;
  try {
    cfg = j.get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace aneudet
