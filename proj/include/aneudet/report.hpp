#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aneudet/eval.hpp"

namespace aneudet {

struct EstimateWithCi {
  double value = 0.0;
  std::optional<ConfidenceInterval> ci;  // absent when no resample defines it
};

struct OperatingPointReport {
  std::string name;                  // "0.25_fppv", "best_f1", ...
  std::optional<double> target_fppv; // absent for best_f1
  ConfusionMetrics metrics;          // threshold may be +inf (nothing called positive)
  std::optional<ConfidenceInterval> accuracy_ci, sensitivity_ci, specificity_ci;
};

struct StratumReport {
  std::size_t n_lesions = 0;
  std::vector<EstimateWithCi> sensitivity;  // aligned with operating_fppvs
};

struct VolumeScoreEntry {
  std::string volume_id;
  double score = 0.0;
  bool has_lesion = false;
};

struct EvaluationReport {
  FrocCurve froc;
  std::vector<double> fppv_grid;
  std::vector<EstimateWithCi> sensitivity_at;  // aligned with fppv_grid
  EstimateWithCi avg_sensitivity;
  std::optional<RocResult> roc;                // absent with a single class
  std::optional<ConfidenceInterval> auc_ci;
  std::vector<double> operating_fppvs;
  std::vector<OperatingPointReport> operating_points;
  std::map<std::string, std::map<std::string, StratumReport>> strata;
  std::vector<VolumeScoreEntry> volumes;
  nlohmann::json provenance = nlohmann::json::object();
};

struct EvalOptions {
  std::vector<double> fppv_grid = kDefaultFppvGrid;
  std::vector<double> operating_fppvs{0.25, 1.0};
  std::vector<std::string> strata_keys;
  BootstrapParams bootstrap;
};

EvaluationReport evaluate(std::span<const VolumeCase> cases, const EvalOptions& options);

nlohmann::json report_to_json(const EvaluationReport& r);

std::string froc_csv(const FrocCurve& curve);
std::string roc_csv(const RocResult& roc);

// Patient-level comparison of two reports over the same volumes. Throws
// ConsistencyError when the volume sets or operating points differ.
nlohmann::json compare_reports(const nlohmann::json& a, const nlohmann::json& b);

// Both FROC curves in one table: model,threshold,fppv,sensitivity.
std::string paired_froc_csv(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace aneudet
