#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aneudet/lesion.hpp"
#include "aneudet/postproc.hpp"

namespace aneudet {

// --- lesion matching ---------------------------------------------------------

struct CandidateMatch {
  bool true_positive = false;
  std::vector<std::size_t> containing;  // every lesion holding the centre
  std::optional<std::size_t> claimed;   // first lesion this candidate found
};

struct LesionMatch {
  bool found = false;
  std::optional<std::size_t> claimed_by;
  // Highest probability among candidates centred inside; -inf when missed.
  double best_probability = -std::numeric_limits<double>::infinity();
};

struct MatchResult {
  std::vector<CandidateMatch> candidates;  // aligned with the input order
  std::vector<LesionMatch> lesions;

  std::size_t false_positives() const;
  std::size_t lesions_found() const;
};

MatchResult match_lesions(const std::vector<CandidateDetection>& cands,
                          const std::vector<BoundingBox>& lesions);

// --- per-volume evaluation data ------------------------------------------------

struct VolumeCase {
  std::string volume_id;
  std::vector<Lesion> lesions;
  std::vector<CandidateDetection> candidates;
};

// Everything FROC and ROC need from one volume, so resampling is cheap.
struct VolumeSummary {
  std::vector<double> fp_probs;      // false-positive probabilities
  std::vector<double> lesion_best;   // per lesion, -inf when never found
  std::vector<double> all_probs;     // every candidate probability
  std::vector<Labels> lesion_labels;
  double score = 0.0;                // volume-level score
  bool has_lesion = false;
};

VolumeSummary summarize(const VolumeCase& c);
std::vector<VolumeSummary> summarize(std::span<const VolumeCase> cases);

// --- FROC ----------------------------------------------------------------------

struct FrocPoint {
  double threshold = 0.0;  // candidates with probability >= threshold count
  double fppv = 0.0;
  double sensitivity = 0.0;

  friend bool operator==(const FrocPoint&, const FrocPoint&) = default;
};

struct FrocCurve {
  std::vector<FrocPoint> points;  // descending threshold
  std::size_t n_volumes = 0;
  std::size_t n_lesions = 0;
};

inline const std::vector<double> kDefaultFppvGrid{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

// `indices` selects (with repetition) which summaries form the dataset; empty
// means all of them in order.
FrocCurve froc(std::span<const VolumeSummary> volumes, std::span<const std::size_t> indices = {});
FrocCurve froc(std::span<const VolumeCase> cases);

double sensitivity_at_fppv(const FrocCurve& curve, double fppv);
double avg_sensitivity(const FrocCurve& curve, std::span<const double> fppvs = kDefaultFppvGrid);

// Most permissive threshold whose FPPV stays within the target; +inf when no
// curve point qualifies.
double threshold_for_operating_point(const FrocCurve& curve, double target_fppv);

// --- patient level -----------------------------------------------------------

double volume_score(const std::vector<CandidateDetection>& cands);

struct ScoredVolume {
  double score = 0.0;
  bool positive = false;
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocResult roc_auc(std::span<const ScoredVolume> scores);

enum class ThresholdRule { Above, AtOrAbove };

struct ConfusionMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double threshold = 0.0;
  ThresholdRule rule = ThresholdRule::Above;
};

bool predicted_positive(double score, double threshold, ThresholdRule rule);

// Volume positive iff score > threshold (Above) or score >= threshold.
ConfusionMetrics confusion_at_threshold(std::span<const ScoredVolume> scores, double threshold,
                                        ThresholdRule rule = ThresholdRule::Above);

// Sweeps every distinct score as an inclusive threshold; ties go to the
// higher threshold.
ConfusionMetrics best_f1_threshold(std::span<const ScoredVolume> scores);

// --- statistics ----------------------------------------------------------------

struct BootstrapParams {
  std::size_t n_resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  int max_retries = 100;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Statistic over a resample given as item indices; nullopt when undefined.
using ResampleStatistic = std::function<std::optional<double>(std::span<const std::size_t>)>;

// Percentile bootstrap over n_items resampled with replacement. Resample r
// draws from derive_seed(seed, r) (and further attempts on retry), so the
// result does not depend on `jobs`.
ConfidenceInterval bootstrap_ci(std::size_t n_items, const ResampleStatistic& stat,
                                const BootstrapParams& params = {});

// Indices of resample r, attempt `attempt`; exposed for reproducibility.
std::vector<std::size_t> bootstrap_indices(std::size_t n_items, std::uint64_t seed,
                                           std::uint64_t resample, std::uint64_t attempt);

// Two-sided Fisher exact test on [[a, b], [c, d]].
double fisher_exact(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

// --- stratification --------------------------------------------------------------

struct StratumResult {
  std::size_t n_lesions = 0;
  std::vector<double> sensitivity;  // aligned with the operating FPPVs
};

using StratifiedReport = std::map<std::string, std::map<std::string, StratumResult>>;

// Per-stratum lesion sensitivity at thresholds fixed from the global FROC.
StratifiedReport stratified_report(std::span<const VolumeSummary> volumes,
                                   std::span<const std::string> keys,
                                   std::span<const double> operating_fppvs,
                                   std::span<const std::size_t> indices = {});

}  // namespace aneudet
