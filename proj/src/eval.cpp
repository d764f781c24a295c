#include "aneudet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aneudet/errors.hpp"
#include "aneudet/parallel.hpp"
#include "aneudet/random.hpp"

namespace aneudet {

// --- matching ----------------------------------------------------------------

std::size_t MatchResult::false_positives() const {
  return static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(),
                                                [](const CandidateMatch& c) { return !c.true_positive; }));
}

std::size_t MatchResult::lesions_found() const {
  return static_cast<std::size_t>(
      std::count_if(lesions.begin(), lesions.end(), [](const LesionMatch& l) { return l.found; }));
}

MatchResult match_lesions(const std::vector<CandidateDetection>& cands,
                          const std::vector<BoundingBox>& lesions) {
  MatchResult r;
  r.candidates.resize(cands.size());
  r.lesions.resize(lesions.size());

  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(cands[a], cands[b]); });

  for (std::size_t ci : order) {
    CandidateMatch& cm = r.candidates[ci];
    for (std::size_t li = 0; li < lesions.size(); ++li) {
      if (!lesions[li].contains(cands[ci].box.center)) continue;
      cm.containing.push_back(li);
      LesionMatch& lm = r.lesions[li];
      if (!lm.found) {
        lm.found = true;
        lm.claimed_by = ci;
        lm.best_probability = cands[ci].probability;
        if (!cm.claimed) cm.claimed = li;
      }
    }
    cm.true_positive = !cm.containing.empty();
  }
  return r;
}

VolumeSummary summarize(const VolumeCase& c) {
  std::vector<BoundingBox> boxes;
  boxes.reserve(c.lesions.size());
  for (const auto& l : c.lesions) boxes.push_back(l.box);
  const MatchResult m = match_lesions(c.candidates, boxes);

  VolumeSummary s;
  for (std::size_t i = 0; i < c.candidates.size(); ++i) {
    s.all_probs.push_back(c.candidates[i].probability);
    if (!m.candidates[i].true_positive) s.fp_probs.push_back(c.candidates[i].probability);
  }
  for (std::size_t i = 0; i < c.lesions.size(); ++i) {
    s.lesion_best.push_back(m.lesions[i].best_probability);
    s.lesion_labels.push_back(c.lesions[i].labels);
  }
  s.score = volume_score(c.candidates);
  s.has_lesion = !c.lesions.empty();
  return s;
}

std::vector<VolumeSummary> summarize(std::span<const VolumeCase> cases) {
  std::vector<VolumeSummary> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back(summarize(c));
  return out;
}

// --- FROC --------------------------------------------------------------------

namespace {

template <class Fn>
void for_each_selected(std::span<const VolumeSummary> volumes, std::span<const std::size_t> indices,
                       Fn&& fn) {
  if (indices.empty()) {
    for (const auto& v : volumes) fn(v);
  } else {
    for (std::size_t i : indices) fn(volumes[i]);
  }
}

}  // namespace

FrocCurve froc(std::span<const VolumeSummary> volumes, std::span<const std::size_t> indices) {
  FrocCurve curve;
  std::vector<double> thresholds, fps, lesions;
  for_each_selected(volumes, indices, [&](const VolumeSummary& v) {
    ++curve.n_volumes;
    thresholds.insert(thresholds.end(), v.all_probs.begin(), v.all_probs.end());
    fps.insert(fps.end(), v.fp_probs.begin(), v.fp_probs.end());
    lesions.insert(lesions.end(), v.lesion_best.begin(), v.lesion_best.end());
  });
  curve.n_lesions = lesions.size();
  if (curve.n_lesions == 0) throw ConsistencyError("FROC needs at least one lesion");

  auto desc = std::greater<double>();
  std::sort(thresholds.begin(), thresholds.end(), desc);
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::sort(fps.begin(), fps.end(), desc);
  std::sort(lesions.begin(), lesions.end(), desc);

  std::size_t fp_i = 0, les_i = 0;
  const auto nv = static_cast<double>(curve.n_volumes);
  const auto nl = static_cast<double>(curve.n_lesions);
  for (double t : thresholds) {
    while (fp_i < fps.size() && fps[fp_i] >= t) ++fp_i;
    while (les_i < lesions.size() && lesions[les_i] >= t) ++les_i;
    curve.points.push_back({t, static_cast<double>(fp_i) / nv, static_cast<double>(les_i) / nl});
  }
  return curve;
}

FrocCurve froc(std::span<const VolumeCase> cases) {
  const auto s = summarize(cases);
  return froc(std::span<const VolumeSummary>(s));
}

double sensitivity_at_fppv(const FrocCurve& curve, double fppv) {
  if (!(fppv >= 0.0)) throw ConfigError("fppv must be >= 0");
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fppv <= fppv) best = std::max(best, p.sensitivity);
  }
  return best;
}

double avg_sensitivity(const FrocCurve& curve, std::span<const double> fppvs) {
  if (fppvs.empty()) throw ConfigError("FPPV grid is empty");
  double sum = 0.0;
  for (double f : fppvs) sum += sensitivity_at_fppv(curve, f);
  return sum / static_cast<double>(fppvs.size());
}

double threshold_for_operating_point(const FrocCurve& curve, double target_fppv) {
  if (!(target_fppv >= 0.0)) throw ConfigError("target fppv must be >= 0");
  double t = std::numeric_limits<double>::infinity();
  for (const auto& p : curve.points) {
    if (p.fppv <= target_fppv) t = std::min(t, p.threshold);
  }
  return t;
}

// --- patient level ---------------------------------------------------------------

double volume_score(const std::vector<CandidateDetection>& cands) {
  double s = 0.0;
  for (const auto& c : cands) s = std::max(s, c.probability);
  return s;
}

RocResult roc_auc(std::span<const ScoredVolume> scores) {
  std::size_t n_pos = 0;
  for (const auto& s : scores) n_pos += s.positive;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ConsistencyError("ROC needs positive and negative volumes");

  std::vector<ScoredVolume> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredVolume& a, const ScoredVolume& b) { return a.score < b.score; });

  // Mann-Whitney U with mid-ranks for ties.
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].positive) pos_rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  RocResult r;
  r.auc = (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);

  r.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = sorted.size(); i > 0;) {
    const double t = sorted[i - 1].score;
    while (i > 0 && sorted[i - 1].score == t) {
      (sorted[i - 1].positive ? tp : fp) += 1;
      --i;
    }
    r.points.push_back({t, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  return r;
}

bool predicted_positive(double score, double threshold, ThresholdRule rule) {
  return rule == ThresholdRule::Above ? score > threshold : score >= threshold;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMetrics confusion_at_threshold(std::span<const ScoredVolume> scores, double threshold,
                                        ThresholdRule rule) {
  ConfusionMetrics m;
  m.threshold = threshold;
  m.rule = rule;
  for (const auto& s : scores) {
    const bool pred = predicted_positive(s.score, threshold, rule);
    if (s.positive) {
      (pred ? m.tp : m.fn) += 1;
    } else {
      (pred ? m.fp : m.tn) += 1;
    }
  }
  m.accuracy = ratio(m.tp + m.tn, scores.size());
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
  return m;
}

ConfusionMetrics best_f1_threshold(std::span<const ScoredVolume> scores) {
  if (std::none_of(scores.begin(), scores.end(), [](const ScoredVolume& s) { return s.positive; })) {
    throw ConsistencyError("best-F1 threshold needs at least one positive volume");
  }
  std::vector<double> thresholds;
  for (const auto& s : scores) thresholds.push_back(s.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  ConfusionMetrics best;
  bool have = false;
  for (double t : thresholds) {
    const ConfusionMetrics m = confusion_at_threshold(scores, t, ThresholdRule::AtOrAbove);
    if (!have || m.f1 > best.f1) {
      best = m;
      have = true;
    }
  }
  return best;
}

// --- bootstrap ---------------------------------------------------------------------

std::vector<std::size_t> bootstrap_indices(std::size_t n_items, std::uint64_t seed,
                                           std::uint64_t resample, std::uint64_t attempt) {
  Rng rng(derive_seed(derive_seed(seed, resample), attempt));
  std::vector<std::size_t> idx(n_items);
  for (auto& i : idx) i = static_cast<std::size_t>(uniform_index(rng, n_items));
  return idx;
}

ConfidenceInterval bootstrap_ci(std::size_t n_items, const ResampleStatistic& stat,
                                const BootstrapParams& params) {
  if (n_items == 0) throw ConfigError("bootstrap needs a nonempty dataset");
  if (params.n_resamples == 0) throw ConfigError("bootstrap needs at least one resample");
  if (!(params.level > 0.0 && params.level < 1.0)) throw ConfigError("CI level must lie in (0, 1)");

  std::vector<double> values(params.n_resamples);
  parallel_for(params.n_resamples, params.jobs, [&](std::size_t r) {
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
      const auto idx = bootstrap_indices(n_items, params.seed, r, static_cast<std::uint64_t>(attempt));
      if (auto v = stat(idx)) {
        values[r] = *v;
        return;
      }
    }
    throw ConsistencyError("bootstrap statistic undefined after repeated redraws");
  });

  std::sort(values.begin(), values.end());
  const double alpha = 0.5 * (1.0 - params.level);
  const auto n = static_cast<double>(values.size());
  auto pick = [&](double q) {
    // Nearest-rank percentile: always one of the resampled values.
    const double rank = std::ceil(q * n - 1e-9);
    const auto i = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
    return values[i];
  };
  return {pick(alpha), pick(1.0 - alpha)};
}

// --- Fisher exact test ----------------------------------------------------------------

namespace {

double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double fisher_exact(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const std::uint64_t n = a + b + c + d;
  if (n == 0) throw ConfigError("Fisher exact test needs a nonzero table");
  const std::uint64_t row1 = a + b, row2 = c + d, col1 = a + c;
  const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
  const std::uint64_t hi = std::min(row1, col1);
  if (lo == hi) return 1.0;

  const double log_denom = log_choose(n, col1);
  auto log_p = [&](std::uint64_t x) {
    return log_choose(row1, x) + log_choose(row2, col1 - x) - log_denom;
  };
  const double observed = log_p(a);
  // Relative tolerance so tables tied with the observed one are included
  // despite rounding in the log-factorials.
  const double cutoff = observed + std::log1p(1e-7);
  // Normalizing by the summed mass makes the all-tables case exactly 1.
  double included = 0.0, excluded = 0.0;
  for (std::uint64_t x = lo; x <= hi; ++x) {
    const double lp = log_p(x);
    (lp <= cutoff ? included : excluded) += std::exp(lp);
  }
  return std::min(1.0, included / (included + excluded));
}

// --- stratification -------------------------------------------------------------------

StratifiedReport stratified_report(std::span<const VolumeSummary> volumes,
                                   std::span<const std::string> keys,
                                   std::span<const double> operating_fppvs,
                                   std::span<const std::size_t> indices) {
  const FrocCurve global = froc(volumes, indices);
  std::vector<double> thresholds;
  for (double f : operating_fppvs) thresholds.push_back(threshold_for_operating_point(global, f));

  struct Tally {
    std::size_t n = 0;
    std::vector<std::size_t> hits;
  };
  std::map<std::string, std::map<std::string, Tally>> tallies;
  for (const auto& key : keys) tallies[key];

  for_each_selected(volumes, indices, [&](const VolumeSummary& v) {
    for (std::size_t li = 0; li < v.lesion_best.size(); ++li) {
      for (const auto& key : keys) {
        const auto it = v.lesion_labels[li].find(key);
        if (it == v.lesion_labels[li].end()) throw DataError("lesion lacks stratification label '" + key + "'");
        Tally& t = tallies[key][it->second];
        if (t.hits.empty()) t.hits.assign(thresholds.size(), 0);
        ++t.n;
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
          if (v.lesion_best[li] >= thresholds[k]) ++t.hits[k];
        }
      }
    }
  });

  StratifiedReport report;
  for (const auto& [key, by_value] : tallies) {
    auto& out = report[key];
    for (const auto& [value, t] : by_value) {
      StratumResult sr;
      sr.n_lesions = t.n;
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        sr.sensitivity.push_back(static_cast<double>(t.hits[k]) / static_cast<double>(t.n));
      }
      out[value] = std::move(sr);
    }
  }
  return report;
}

}  // namespace aneudet
