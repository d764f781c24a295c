#include <doctest.h>

#include <cmath>

#include "aneudet/errors.hpp"
#include "aneudet/report.hpp"
#include "../oracles.hpp"

using namespace aneudet;
using nlohmann::json;

namespace {

CandidateDetection cand(Vec3 c, double p) { return {{c, 4}, p, Stage::Detector, {}, {}}; }

std::vector<VolumeCase> dataset() {
  Labels l{{"size_class", "big"}};
  return {{"v1", {{{{10, 10, 10}, 6}, l}}, {cand({10, 10, 10}, 0.9), cand({50, 50, 50}, 0.6)}},
          {"v2", {{{{20, 20, 20}, 6}, {{"size_class", "small"}}}}, {cand({21, 20, 20}, 0.4)}},
          {"v3", {}, {cand({5, 5, 5}, 0.3)}},
          {"v4", {}, {}}};
}

EvalOptions options() {
  EvalOptions o;
  o.strata_keys = {"size_class"};
  o.bootstrap.n_resamples = 200;
  o.bootstrap.seed = 4;
  return o;
}

json volumes_json(const std::vector<std::tuple<std::string, double, bool>>& v, double threshold) {
  json vols = json::array();
  for (const auto& [id, s, pos] : v) vols.push_back({{"volume_id", id}, {"score", s}, {"has_lesion", pos}});
  return {{"volumes", vols},
          {"operating_points", json::array({{{"name", "op"}, {"threshold", threshold}, {"rule", "at_or_above"}}})},
          {"avg_sensitivity", {{"value", 0.5}}},
          {"froc", {{"points", json::array()}}}};
}

}  // namespace

TEST_CASE("evaluate builds every report field") {
  const auto cases = dataset();
  const EvaluationReport r = evaluate(cases, options());
  CHECK(r.froc.n_volumes == 4);
  CHECK(r.froc.n_lesions == 2);
  CHECK(r.sensitivity_at.size() == 7);
  CHECK(r.avg_sensitivity.value == avg_sensitivity(r.froc));
  REQUIRE(r.avg_sensitivity.ci);
  CHECK(r.avg_sensitivity.ci->lo <= r.avg_sensitivity.ci->hi);
  REQUIRE(r.roc);
  CHECK(r.roc->auc == doctest::Approx(oracle::auc({0.9, 0.4}, {0.3, 0.0})));
  REQUIRE(r.operating_points.size() == 3);
  CHECK(r.operating_points[0].name == "fppv_0.25");
  // One false positive at 0.6 over four volumes is exactly 0.25 FPPV.
  CHECK(r.operating_points[0].metrics.threshold == 0.4);
  CHECK(r.operating_points[0].metrics.rule == ThresholdRule::AtOrAbove);
  CHECK(r.operating_points[0].metrics.tp == 2);
  CHECK(r.operating_points[0].metrics.fp == 0);
  CHECK(r.operating_points[2].name == "best_f1");
  CHECK(r.strata.at("size_class").at("big").n_lesions + r.strata.at("size_class").at("small").n_lesions == 2);

  const json j = report_to_json(r);
  for (const char* key : {"froc", "sensitivity_at_fppv", "avg_sensitivity", "roc", "auc", "operating_points", "strata", "volumes",
                          "provenance"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["volumes"][1] == json{{"volume_id", "v2"}, {"score", 0.4}, {"has_lesion", true}});
  CHECK(report_to_json(evaluate(cases, options())) == j);
}

TEST_CASE("single-class datasets report no AUC") {
  std::vector<VolumeCase> cases{{"a", {{{{1, 1, 1}, 4}, {}}}, {cand({1, 1, 1}, 0.8)}}};
  EvalOptions o;
  o.bootstrap.n_resamples = 20;
  const EvaluationReport r = evaluate(cases, o);
  CHECK(!r.roc);
  CHECK(report_to_json(r)["auc"].is_null());
  CHECK(r.avg_sensitivity.value == 1.0);
}

TEST_CASE("curve CSVs") {
  FrocCurve c;
  c.points = {{0.9, 0.0, 0.5}, {0.4, 0.5, 1.0}};
  CHECK(froc_csv(c) == "threshold,fppv,sensitivity\n0.9,0.0,0.5\n0.4,0.5,1.0\n");
  RocResult roc;
  roc.points = {{std::numeric_limits<double>::infinity(), 0, 0}, {0.5, 0.25, 1}};
  CHECK(roc_csv(roc) == "threshold,fpr,tpr\ninf,0.0,0.0\n0.5,0.25,1.0\n");
}

TEST_CASE("compare_reports") {
  const json a = report_to_json(evaluate(dataset(), options()));
  SUBCASE("identical reports") {
    const json c = compare_reports(a, a);
    for (const auto& op : c["operating_points"]) {
      for (const char* k : {"accuracy", "sensitivity", "specificity"}) CHECK(op["p_values"][k] == 1.0);
    }
  }
  SUBCASE("disjoint volume sets") {
    json b = a;
    b["volumes"][0]["volume_id"] = "other";
    CHECK_THROWS_AS(compare_reports(a, b), ConsistencyError);
  }
  SUBCASE("eight-volume toy matches the enumeration oracle") {
    // Model A correct on 7 of 8, model B on 3 of 8 at threshold 0.5.
    const json ra = volumes_json({{"1", 0.9, true}, {"2", 0.8, true}, {"3", 0.7, true}, {"4", 0.6, true},
                                  {"5", 0.1, false}, {"6", 0.2, false}, {"7", 0.3, false}, {"8", 0.55, false}}, 0.5);
    const json rb = volumes_json({{"1", 0.9, true}, {"2", 0.1, true}, {"3", 0.2, true}, {"4", 0.3, true},
                                  {"5", 0.6, false}, {"6", 0.7, false}, {"7", 0.3, false}, {"8", 0.55, false}}, 0.5);
    const json c = compare_reports(ra, rb);
    const json& op = c["operating_points"][0];
    CHECK(op["tables"]["accuracy"] == json::parse("[[7,1],[2,6]]"));
    CHECK(op["p_values"]["accuracy"].get<double>() == doctest::Approx(oracle::fisher(7, 1, 2, 6)).epsilon(1e-12));
    CHECK(op["p_values"]["sensitivity"].get<double>() == doctest::Approx(oracle::fisher(4, 0, 1, 3)).epsilon(1e-12));
    CHECK(op["p_values"]["specificity"].get<double>() == doctest::Approx(oracle::fisher(3, 1, 1, 3)).epsilon(1e-12));
    CHECK(paired_froc_csv(ra, rb) == "model,threshold,fppv,sensitivity\n");
  }
}
