#include "aneudet/cli.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "aneudet/config.hpp"
#include "aneudet/errors.hpp"
#include "aneudet/parallel.hpp"
#include "aneudet/pipeline.hpp"
#include "aneudet/random.hpp"
#include "aneudet/records.hpp"
#include "aneudet/report.hpp"
#include "aneudet/synth.hpp"

namespace aneudet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDetectStream = 1;
constexpr std::uint64_t kLabelStream = 2;

const std::vector<std::string> kSites{"site_a", "site_b", "site_c"};

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string join(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
  return s;
}

// Volume ids of every candidate file in `dir`, taken from the file names.
std::set<std::string> candidate_file_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("candidate directory " + dir.string() + " does not exist");
  const std::string suffix = ".candidates.jsonl";
  std::set<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) ids.insert(name.substr(0, name.size() - suffix.size()));
  }
  return ids;
}

std::vector<CandidateDetection> load_volume_candidates(const fs::path& dir, const std::string& id) {
  const CandidateFile f = read_candidates(candidate_path(dir, id));
  if (!f.volume_id.empty() && f.volume_id != id) {
    throw ConsistencyError("candidate file for '" + id + "' holds records of '" + f.volume_id + "'");
  }
  return f.candidates;
}

std::vector<BoundingBox> boxes_of(const std::vector<Lesion>& lesions) {
  std::vector<BoundingBox> out;
  for (const auto& l : lesions) out.push_back(l.box);
  return out;
}

struct Dataset {
  DatasetManifest manifest;
  std::map<std::string, std::vector<Lesion>> lesions;
};

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset d;
  d.manifest = read_manifest(manifest_path);
  d.lesions = group_by_volume(read_annotations(d.manifest.annotations_path()));
  std::set<std::string> known;
  for (const auto& e : d.manifest.volumes) known.insert(e.volume_id);
  std::vector<std::string> unknown;
  for (const auto& [id, _] : d.lesions) {
    if (!known.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) throw ConsistencyError("annotations name volumes missing from the manifest: " + join(unknown));
  return d;
}

Volume load_volume(const Dataset& d, const ManifestEntry& e) {
  try {
    Volume v = read_volume(d.manifest.volume_path(e));
    if (v.id() != e.volume_id) throw DataError("file holds volume '" + v.id() + "'");
    return v;
  } catch (const DataError& ex) {
    throw DataError("volume '" + e.volume_id + "': " + ex.what());
  }
}

// --- subcommands -------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir, std::ostream& out) {
  ensure_output_dir(out_dir / "volumes");
  const auto n = static_cast<std::size_t>(cfg.synth.n_volumes);
  const auto n_negative = static_cast<std::size_t>(std::llround(cfg.synth.negative_fraction * static_cast<double>(n)));

  // Negative volumes are a seeded random subset of fixed size.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng pick(derive_seed(cfg.seed, n));
  std::shuffle(order.begin(), order.end(), pick);
  std::vector<bool> negative(n, false);
  for (std::size_t i = 0; i < n_negative; ++i) negative[order[i]] = true;

  DatasetManifest manifest;
  manifest.seed = cfg.seed;
  std::vector<std::vector<AnnotationRecord>> per_volume(n);
  parallel_for(n, static_cast<unsigned>(cfg.jobs), [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "vol%04zu", i);
    const std::string id = buf;
    const std::uint64_t seed = cfg.seed + i;
    Phantom ph = generate_phantom(cfg.phantom_spec(seed, negative[i]), id);
    Rng label_rng(derive_seed(seed, kLabelStream));
    const std::string site = kSites[uniform_index(label_rng, kSites.size())];
    const std::string sah = uniform01(label_rng) < 0.3 ? "yes" : "no";
    for (auto& l : ph.lesions) {
      l.labels["site"] = site;
      l.labels["sah"] = sah;
      per_volume[i].push_back({id, l});
    }
    write_volume(ph.volume, out_dir / "volumes" / id);
  });
  std::vector<AnnotationRecord> annotations;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "vol%04zu", i);
    manifest.volumes.push_back({buf, "volumes/" + std::string(buf)});
    annotations.insert(annotations.end(), per_volume[i].begin(), per_volume[i].end());
  }
  write_annotations(out_dir / manifest.annotations, annotations);
  write_manifest(out_dir / "manifest.json", manifest);
  out << "synth: " << n << " volumes (" << n_negative << " negative), " << annotations.size() << " aneurysms\n";
}

void cmd_detect(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out) {
  const Dataset d = load_dataset(manifest_path);
  ensure_output_dir(out_dir);
  const AnchorGridParams grid = cfg.anchor_grid_params();
  const std::vector<Anchor> anchors = anchor_grid(grid);
  DetectParams params;
  params.window = cfg.hu_window();
  params.max_extent_mm = cfg.preprocess.max_extent_mm;
  params.patch_size = cfg.tiling.patch_size;
  params.overlap = cfg.tiling.overlap;
  params.pad_value_hu = static_cast<float>(cfg.preprocess.pad_value_hu);
  params.nms = cfg.nms_params();
  params.sensitivity_mode = cfg.detector.sensitivity_mode;
  params.sensitivity_floor = cfg.fpr.sensitivity_floor;

  const auto& vols = d.manifest.volumes;
  std::vector<std::size_t> counts(vols.size());
  parallel_for(vols.size(), static_cast<unsigned>(cfg.jobs), [&](std::size_t i) {
    const Volume v = load_volume(d, vols[i]);
    const auto it = d.lesions.find(vols[i].volume_id);
    const std::vector<BoundingBox> truth = it == d.lesions.end() ? std::vector<BoundingBox>{} : boxes_of(it->second);
    auto oracle = oracle_detect(truth, v.dims(), cfg.oracle_spec(derive_seed(cfg.seed + i, kDetectStream)));
    // The tile detector sees the truncated volume.
    const double z0 = static_cast<double>(cranial_window(v, params.max_extent_mm).first);
    for (auto& c : oracle) c.box.center.z -= z0;
    const OracleTileDetector detector(anchors, grid, std::move(oracle));
    const auto cands = detect_volume(v, detector, anchors, params);
    counts[i] = cands.size();
    write_candidates(candidate_path(out_dir, vols[i].volume_id), vols[i].volume_id, cands);
  });
  std::size_t total = 0;
  for (auto c : counts) total += c;
  out << "detect: " << vols.size() << " volumes, " << total << " candidates\n";
}

void cmd_reduce(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& cand_dir,
                const fs::path& out_dir, const std::optional<fs::path>& export_dir, std::ostream& out) {
  const Dataset d = load_dataset(manifest_path);
  std::set<std::string> known;
  for (const auto& e : d.manifest.volumes) known.insert(e.volume_id);
  std::vector<std::string> unknown;
  for (const auto& id : candidate_file_ids(cand_dir)) {
    if (!known.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) throw DataError("candidates reference unknown volumes: " + join(unknown));
  ensure_output_dir(out_dir);
  if (export_dir) ensure_output_dir(*export_dir);

  ReduceParams params;
  params.window = cfg.hu_window();
  params.patch_sizes = cfg.fpr_patch_sizes();
  params.sensitivity_floor = cfg.fpr.sensitivity_floor;
  params.nms = cfg.nms_params();

  const auto& vols = d.manifest.volumes;
  std::vector<std::size_t> counts(vols.size());
  std::vector<std::vector<FprTrainingRecord>> exported(vols.size());
  parallel_for(vols.size(), static_cast<unsigned>(cfg.jobs), [&](std::size_t i) {
    const std::string& id = vols[i].volume_id;
    const fs::path path = candidate_path(cand_dir, id);
    std::vector<CandidateDetection> cands;
    if (fs::exists(path)) cands = load_volume_candidates(cand_dir, id);
    const auto it = d.lesions.find(id);
    const std::vector<BoundingBox> truth = it == d.lesions.end() ? std::vector<BoundingBox>{} : boxes_of(it->second);

    std::vector<CandidateDetection> reduced;
    if (!cands.empty()) {
      const Volume v = load_volume(d, vols[i]);
      std::unique_ptr<PatchClassifier> classifier;
      if (cfg.reduce.classifier == "oracle") {
        classifier = std::make_unique<TruthClassifier>(truth);
      } else {
        classifier = std::make_unique<ReferenceClassifier>(cfg.reduce.bright_threshold);
      }
      reduced = reduce_volume(v, cands, *classifier, params);
      if (export_dir) {
        const auto selected = select_candidates(cands, true, params.sensitivity_floor, params.nms);
        exported[i] = export_fpr_training(v, selected, truth, params.patch_sizes, *export_dir / "patches");
      }
    }
    counts[i] = reduced.size();
    write_candidates(candidate_path(out_dir, id), id, reduced);
  });
  if (export_dir) {
    std::vector<json> rows;
    for (const auto& per : exported) {
      for (const auto& r : per) rows.push_back(fpr_record_to_json(r));
    }
    write_jsonl(*export_dir / "fpr_manifest.jsonl", rows);
  }
  std::size_t total = 0;
  for (auto c : counts) total += c;
  out << "reduce: " << vols.size() << " volumes, " << total << " candidates\n";
}

void cmd_eval(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& cand_dir,
              const fs::path& out_dir, std::ostream& out) {
  const Dataset d = load_dataset(manifest_path);
  std::set<std::string> expected;
  for (const auto& e : d.manifest.volumes) expected.insert(e.volume_id);
  const std::set<std::string> present = candidate_file_ids(cand_dir);
  std::vector<std::string> offenders;
  for (const auto& id : expected) {
    if (!present.contains(id)) offenders.push_back(id + " (no candidates)");
  }
  for (const auto& id : present) {
    if (!expected.contains(id)) offenders.push_back(id + " (not annotated)");
  }
  if (!offenders.empty()) throw ConsistencyError("volume ids differ between candidates and annotations: " + join(offenders));

  std::vector<VolumeCase> cases;
  for (const auto& e : d.manifest.volumes) {
    VolumeCase c;
    c.volume_id = e.volume_id;
    if (const auto it = d.lesions.find(e.volume_id); it != d.lesions.end()) c.lesions = it->second;
    c.candidates = load_volume_candidates(cand_dir, e.volume_id);
    cases.push_back(std::move(c));
  }

  EvalOptions opts;
  opts.fppv_grid = cfg.eval.fppv_grid;
  opts.operating_fppvs = cfg.eval.operating_fppvs;
  opts.strata_keys = cfg.eval.strata_keys;
  opts.bootstrap = cfg.bootstrap_params();
  EvaluationReport report = evaluate(cases, opts);
  report.provenance["manifest"] = manifest_path.string();
  report.provenance["candidates"] = cand_dir.string();
  report.provenance["dataset_seed"] = d.manifest.seed;
  json cfg_json = to_json(cfg);
  cfg_json.erase("jobs");
  report.provenance["config"] = cfg_json;

  ensure_output_dir(out_dir);
  write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(out_dir / "froc.csv", froc_csv(report.froc));
  if (report.roc) write_text(out_dir / "roc.csv", roc_csv(*report.roc));
  out << "eval: avg_sensitivity " << report.avg_sensitivity.value;
  if (report.roc) out << ", auc " << report.roc->auc;
  out << "\n";
}

void cmd_compare(const fs::path& a, const fs::path& b, const fs::path& out_dir, std::ostream& out) {
  const json ra = read_json_file(a);
  const json rb = read_json_file(b);
  json cmp = compare_reports(ra, rb);
  cmp["report_a"] = a.string();
  cmp["report_b"] = b.string();
  ensure_output_dir(out_dir);
  write_text(out_dir / "comparison.json", cmp.dump(2) + "\n");
  write_text(out_dir / "froc_paired.csv", paired_froc_csv(ra, rb));
  for (const auto& op : cmp["operating_points"]) {
    out << "compare " << op["name"].get<std::string>() << ": p(accuracy) = " << op["p_values"]["accuracy"].dump()
        << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage aneurysm detection pipeline on CT volumes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> jobs;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--jobs", jobs, "worker threads");

  std::string synth_out;
  std::optional<std::int64_t> synth_n;
  auto* synth = app.add_subcommand("synth", "generate a synthetic phantom dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n", synth_n, "number of volumes");

  std::string dataset, cand_dir, out_dir;
  bool perfect = false;
  auto* detect = app.add_subcommand("detect", "stage-1 candidate detection");
  detect->add_option("--dataset", dataset, "dataset manifest.json")->required();
  detect->add_option("--out", out_dir, "candidate output directory")->required();
  detect->add_flag("--perfect", perfect, "oracle finds every lesion with p = 1 and nothing else");

  std::optional<std::string> export_dir;
  std::optional<std::string> classifier;
  auto* reduce = app.add_subcommand("reduce", "false-positive reduction");
  reduce->add_option("--dataset", dataset, "dataset manifest.json")->required();
  reduce->add_option("--candidates", cand_dir, "stage-1 candidate directory")->required();
  reduce->add_option("--out", out_dir, "output directory")->required();
  reduce->add_option("--classifier", classifier, "reference or oracle");
  reduce->add_option("--export-patches", export_dir, "write labelled FPR training patches here");

  auto* eval = app.add_subcommand("eval", "lesion- and patient-level evaluation");
  eval->add_option("--dataset", dataset, "dataset manifest.json")->required();
  eval->add_option("--candidates", cand_dir, "candidate directory")->required();
  eval->add_option("--out", out_dir, "report directory")->required();

  std::string report_a, report_b;
  auto* compare = app.add_subcommand("compare", "compare two evaluation reports");
  compare->add_option("--a", report_a, "first report.json")->required();
  compare->add_option("--b", report_b, "second report.json")->required();
  compare->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (synth_n) cfg.synth.n_volumes = *synth_n;
    if (classifier) cfg.reduce.classifier = *classifier;
    if (perfect) {
      cfg.detector.hit_prob = 1.0;
      cfg.detector.center_jitter_sigma = 0.0;
      cfg.detector.diameter_jitter_ratio = 0.0;
      cfg.detector.fp_per_volume = 0.0;
      cfg.detector.tp_prob_range = {1.0, 1.0};
    }
    cfg.validate();

    if (*synth) cmd_synth(cfg, synth_out, out);
    if (*detect) cmd_detect(cfg, dataset, out_dir, out);
    if (*reduce) cmd_reduce(cfg, dataset, cand_dir, out_dir, export_dir, out);
    if (*eval) cmd_eval(cfg, dataset, cand_dir, out_dir, out);
    if (*compare) cmd_compare(report_a, report_b, out_dir, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace aneudet
