#include "aneudet/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "aneudet/errors.hpp"

namespace aneudet {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<ConfidenceInterval> try_ci(std::size_t n, const ResampleStatistic& stat, const BootstrapParams& p) {
  try {
    return bootstrap_ci(n, stat, p);
  } catch (const ConsistencyError&) {
    return std::nullopt;
  }
}

std::size_t lesion_count(std::span<const VolumeSummary> vols, std::span<const std::size_t> idx) {
  std::size_t n = 0;
  for (std::size_t i : idx) n += vols[i].lesion_best.size();
  return n;
}

std::vector<ScoredVolume> scored(std::span<const VolumeSummary> vols, std::span<const std::size_t> idx) {
  std::vector<ScoredVolume> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back({vols[i].score, vols[i].has_lesion});
  return out;
}

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const char* rule_name(ThresholdRule r) { return r == ThresholdRule::Above ? "above" : "at_or_above"; }

ThresholdRule parse_rule(const std::string& s) {
  if (s == "above") return ThresholdRule::Above;
  if (s == "at_or_above") return ThresholdRule::AtOrAbove;
  throw DataError("unknown threshold rule '" + s + "'");
}

json threshold_json(double t) { return std::isfinite(t) ? json(t) : json(nullptr); }

json ci_json(const std::optional<ConfidenceInterval>& ci) {
  if (!ci) return nullptr;
  return json::array({ci->lo, ci->hi});
}

json estimate_json(const EstimateWithCi& e) { return {{"value", e.value}, {"ci", ci_json(e.ci)}}; }

OperatingPointReport operating_point(std::span<const VolumeSummary> vols, std::string name,
                                     std::optional<double> target, double threshold, ThresholdRule rule,
                                     const BootstrapParams& boot) {
  const auto all = identity(vols.size());
  OperatingPointReport op;
  op.name = std::move(name);
  op.target_fppv = target;
  op.metrics = confusion_at_threshold(scored(vols, all), threshold, rule);

  auto metric_ci = [&](auto pick) {
    return try_ci(vols.size(), [&, pick](std::span<const std::size_t> idx) -> std::optional<double> {
      return pick(confusion_at_threshold(scored(vols, idx), threshold, rule));
    }, boot);
  };
  op.accuracy_ci = metric_ci([](const ConfusionMetrics& m) -> std::optional<double> { return m.accuracy; });
  op.sensitivity_ci = metric_ci([](const ConfusionMetrics& m) -> std::optional<double> {
    if (m.tp + m.fn == 0) return std::nullopt;
    return m.sensitivity;
  });
  op.specificity_ci = metric_ci([](const ConfusionMetrics& m) -> std::optional<double> {
    if (m.tn + m.fp == 0) return std::nullopt;
    return m.specificity;
  });
  return op;
}

}  // namespace

EvaluationReport evaluate(std::span<const VolumeCase> cases, const EvalOptions& options) {
  if (cases.empty()) throw DataError("evaluation needs at least one volume");
  const std::vector<VolumeSummary> vols = summarize(cases);
  const BootstrapParams& boot = options.bootstrap;

  EvaluationReport r;
  r.froc = froc(vols);
  r.fppv_grid = options.fppv_grid;
  r.operating_fppvs = options.operating_fppvs;

  auto froc_stat = [&vols](auto fn) -> ResampleStatistic {
    return [&vols, fn](std::span<const std::size_t> idx) -> std::optional<double> {
      if (lesion_count(vols, idx) == 0) return std::nullopt;
      return fn(froc(vols, idx));
    };
  };
  for (double f : options.fppv_grid) {
    r.sensitivity_at.push_back(
        {sensitivity_at_fppv(r.froc, f),
         try_ci(vols.size(), froc_stat([f](const FrocCurve& c) { return sensitivity_at_fppv(c, f); }), boot)});
  }
  const std::vector<double> grid = options.fppv_grid;
  r.avg_sensitivity = {
      avg_sensitivity(r.froc, grid),
      try_ci(vols.size(), froc_stat([grid](const FrocCurve& c) { return avg_sensitivity(c, grid); }), boot)};

  const auto all_scores = scored(vols, identity(vols.size()));
  const bool two_classes =
      std::any_of(all_scores.begin(), all_scores.end(), [](const ScoredVolume& s) { return s.positive; }) &&
      std::any_of(all_scores.begin(), all_scores.end(), [](const ScoredVolume& s) { return !s.positive; });
  if (two_classes) {
    r.roc = roc_auc(all_scores);
    r.auc_ci = try_ci(vols.size(), [&vols](std::span<const std::size_t> idx) -> std::optional<double> {
      const auto s = scored(vols, idx);
      const bool pos = std::any_of(s.begin(), s.end(), [](const ScoredVolume& v) { return v.positive; });
      const bool neg = std::any_of(s.begin(), s.end(), [](const ScoredVolume& v) { return !v.positive; });
      if (!pos || !neg) return std::nullopt;
      return roc_auc(s).auc;
    }, boot);
  }

  for (double f : options.operating_fppvs) {
    r.operating_points.push_back(operating_point(vols, "fppv_" + format_number(f), f,
                                                 threshold_for_operating_point(r.froc, f),
                                                 ThresholdRule::AtOrAbove, boot));
  }
  if (std::any_of(all_scores.begin(), all_scores.end(), [](const ScoredVolume& s) { return s.positive; })) {
    const ConfusionMetrics best = best_f1_threshold(all_scores);
    r.operating_points.push_back(operating_point(vols, "best_f1", std::nullopt, best.threshold, best.rule, boot));
  }

  const StratifiedReport strata = stratified_report(vols, options.strata_keys, options.operating_fppvs);
  for (const auto& [key, by_value] : strata) {
    for (const auto& [value, sr] : by_value) {
      StratumReport out;
      out.n_lesions = sr.n_lesions;
      for (std::size_t k = 0; k < sr.sensitivity.size(); ++k) {
        const std::vector<std::string> keys{key};
        const std::vector<double> fppvs{options.operating_fppvs[k]};
        auto stat = [&vols, keys, fppvs, value](std::span<const std::size_t> idx) -> std::optional<double> {
          if (lesion_count(vols, idx) == 0) return std::nullopt;
          const StratifiedReport rep = stratified_report(vols, keys, fppvs, idx);
          const auto& m = rep.at(keys[0]);
          const auto it = m.find(value);
          if (it == m.end()) return std::nullopt;
          return it->second.sensitivity[0];
        };
        out.sensitivity.push_back({sr.sensitivity[k], try_ci(vols.size(), stat, boot)});
      }
      r.strata[key][value] = std::move(out);
    }
  }

  for (std::size_t i = 0; i < cases.size(); ++i) {
    r.volumes.push_back({cases[i].volume_id, vols[i].score, vols[i].has_lesion});
  }
  r.provenance = {{"bootstrap_resamples", boot.n_resamples},
                  {"ci_level", boot.level},
                  {"seed", boot.seed},
                  {"threshold_rule_froc", "at_or_above"}};
  return r;
}

json report_to_json(const EvaluationReport& r) {
  json j;
  json points = json::array();
  for (const auto& p : r.froc.points) {
    points.push_back({{"threshold", p.threshold}, {"fppv", p.fppv}, {"sensitivity", p.sensitivity}});
  }
  j["froc"] = {{"points", points}, {"n_volumes", r.froc.n_volumes}, {"n_lesions", r.froc.n_lesions}};

  json sens = json::array();
  for (std::size_t i = 0; i < r.fppv_grid.size(); ++i) {
    json e = estimate_json(r.sensitivity_at[i]);
    e["fppv"] = r.fppv_grid[i];
    sens.push_back(e);
  }
  j["sensitivity_at_fppv"] = sens;
  j["avg_sensitivity"] = estimate_json(r.avg_sensitivity);

  if (r.roc) {
    json roc_points = json::array();
    for (const auto& p : r.roc->points) {
      roc_points.push_back({{"threshold", threshold_json(p.threshold)}, {"fpr", p.fpr}, {"tpr", p.tpr}});
    }
    j["roc"] = {{"points", roc_points}};
    j["auc"] = {{"value", r.roc->auc}, {"ci", ci_json(r.auc_ci)}};
  } else {
    j["roc"] = nullptr;
    j["auc"] = nullptr;
  }

  json ops = json::array();
  for (const auto& op : r.operating_points) {
    const auto& m = op.metrics;
    ops.push_back({{"name", op.name},
                   {"target_fppv", op.target_fppv ? json(*op.target_fppv) : json(nullptr)},
                   {"threshold", threshold_json(m.threshold)},
                   {"rule", rule_name(m.rule)},
                   {"accuracy", {{"value", m.accuracy}, {"ci", ci_json(op.accuracy_ci)}}},
                   {"sensitivity", {{"value", m.sensitivity}, {"ci", ci_json(op.sensitivity_ci)}}},
                   {"specificity", {{"value", m.specificity}, {"ci", ci_json(op.specificity_ci)}}},
                   {"f1", m.f1},
                   {"tp", m.tp},
                   {"fp", m.fp},
                   {"tn", m.tn},
                   {"fn", m.fn}});
  }
  j["operating_points"] = ops;

  json strata = json::object();
  for (const auto& [key, by_value] : r.strata) {
    json k = json::object();
    for (const auto& [value, sr] : by_value) {
      json s = json::array();
      for (std::size_t i = 0; i < sr.sensitivity.size(); ++i) {
        json e = estimate_json(sr.sensitivity[i]);
        e["fppv"] = r.operating_fppvs[i];
        s.push_back(e);
      }
      k[value] = {{"n_lesions", sr.n_lesions}, {"sensitivity", s}};
    }
    strata[key] = k;
  }
  j["strata"] = strata;

  json vols = json::array();
  for (const auto& v : r.volumes) {
    vols.push_back({{"volume_id", v.volume_id}, {"score", v.score}, {"has_lesion", v.has_lesion}});
  }
  j["volumes"] = vols;
  j["provenance"] = r.provenance;
  return j;
}

namespace {

// Shortest round-trip representation so CSV values match the JSON report.
std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return json(v).dump();
}

}  // namespace

std::string froc_csv(const FrocCurve& curve) {
  std::string out = "threshold,fppv,sensitivity\n";
  for (const auto& p : curve.points) {
    out += csv_number(p.threshold) + "," + csv_number(p.fppv) + "," + csv_number(p.sensitivity) + "\n";
  }
  return out;
}

std::string roc_csv(const RocResult& roc) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    out += csv_number(p.threshold) + "," + csv_number(p.fpr) + "," + csv_number(p.tpr) + "\n";
  }
  return out;
}

namespace {

struct ParsedOperatingPoint {
  double threshold = kInf;
  ThresholdRule rule = ThresholdRule::AtOrAbove;
};

struct ParsedReport {
  std::map<std::string, ScoredVolume> volumes;
  std::map<std::string, ParsedOperatingPoint> operating_points;
  std::vector<std::string> op_order;
};

ParsedReport parse_report(const json& r) {
  ParsedReport out;
  try {
    for (const auto& v : r.at("volumes")) {
      const auto id = v.at("volume_id").get<std::string>();
      if (!out.volumes.emplace(id, ScoredVolume{v.at("score").get<double>(), v.at("has_lesion").get<bool>()}).second) {
        throw DataError("report lists volume '" + id + "' twice");
      }
    }
    for (const auto& op : r.at("operating_points")) {
      ParsedOperatingPoint p;
      const auto& t = op.at("threshold");
      p.threshold = t.is_null() ? kInf : t.get<double>();
      p.rule = parse_rule(op.at("rule").get<std::string>());
      const auto name = op.at("name").get<std::string>();
      out.operating_points[name] = p;
      out.op_order.push_back(name);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
  return s;
}

json p_value(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  if (a + b + c + d == 0) return nullptr;
  return fisher_exact(a, b, c, d);
}

}  // namespace

json compare_reports(const json& a, const json& b) {
  const ParsedReport ra = parse_report(a);
  const ParsedReport rb = parse_report(b);

  std::vector<std::string> only;
  for (const auto& [id, _] : ra.volumes) {
    if (!rb.volumes.contains(id)) only.push_back(id);
  }
  for (const auto& [id, _] : rb.volumes) {
    if (!ra.volumes.contains(id)) only.push_back(id);
  }
  if (!only.empty()) throw ConsistencyError("reports cover different volumes: " + join_ids(only));
  for (const auto& [id, va] : ra.volumes) {
    if (va.positive != rb.volumes.at(id).positive) {
      throw ConsistencyError("reports disagree on the ground truth of volume '" + id + "'");
    }
  }
  if (std::set<std::string>(ra.op_order.begin(), ra.op_order.end()) !=
      std::set<std::string>(rb.op_order.begin(), rb.op_order.end())) {
    throw ConsistencyError("reports list different operating points");
  }

  json ops = json::array();
  for (const auto& name : ra.op_order) {
    const auto& pa = ra.operating_points.at(name);
    const auto& pb = rb.operating_points.at(name);
    // Correct/incorrect counts over all volumes, positives and negatives.
    std::uint64_t all[2][2] = {}, pos[2][2] = {}, neg[2][2] = {};
    for (const auto& [id, va] : ra.volumes) {
      const ScoredVolume& vb = rb.volumes.at(id);
      const bool ok_a = predicted_positive(va.score, pa.threshold, pa.rule) == va.positive;
      const bool ok_b = predicted_positive(vb.score, pb.threshold, pb.rule) == vb.positive;
      auto& cls = va.positive ? pos : neg;
      ++all[0][ok_a ? 0 : 1];
      ++all[1][ok_b ? 0 : 1];
      ++cls[0][ok_a ? 0 : 1];
      ++cls[1][ok_b ? 0 : 1];
    }
    auto table = [](const std::uint64_t t[2][2]) { return json::array({{t[0][0], t[0][1]}, {t[1][0], t[1][1]}}); };
    ops.push_back({{"name", name},
                   {"threshold_a", threshold_json(pa.threshold)},
                   {"threshold_b", threshold_json(pb.threshold)},
                   {"tables", {{"accuracy", table(all)}, {"sensitivity", table(pos)}, {"specificity", table(neg)}}},
                   {"p_values",
                    {{"accuracy", p_value(all[0][0], all[0][1], all[1][0], all[1][1])},
                     {"sensitivity", p_value(pos[0][0], pos[0][1], pos[1][0], pos[1][1])},
                     {"specificity", p_value(neg[0][0], neg[0][1], neg[1][0], neg[1][1])}}}});
  }

  json out;
  out["n_volumes"] = ra.volumes.size();
  out["operating_points"] = ops;
  out["avg_sensitivity"] = {{"a", a.at("avg_sensitivity").at("value")}, {"b", b.at("avg_sensitivity").at("value")}};
  return out;
}

std::string paired_froc_csv(const json& a, const json& b) {
  std::string out = "model,threshold,fppv,sensitivity\n";
  auto emit = [&out](const char* model, const json& r) {
    for (const auto& p : r.at("froc").at("points")) {
      out += std::string(model) + "," + csv_number(p.at("threshold").get<double>()) + "," +
             csv_number(p.at("fppv").get<double>()) + "," + csv_number(p.at("sensitivity").get<double>()) + "\n";
    }
  };
  emit("a", a);
  emit("b", b);
  return out;
}

}  // namespace aneudet
