#include "aneudet/records.hpp"

#include <fstream>

#include "aneudet/errors.hpp"

namespace aneudet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw DataError(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid ") + what + " record: " + e.what());
  }
}

}  // namespace

json annotation_to_json(const AnnotationRecord& r) {
  json j;
  j["volume_id"] = r.volume_id;
  j["center_vox"] = vec_json(r.lesion.box.center);
  j["diameter_vox"] = r.lesion.box.diameter;
  j["labels"] = r.lesion.labels;
  return j;
}

AnnotationRecord annotation_from_json(const json& j) {
  return guarded("annotation", [&] {
    AnnotationRecord r;
    r.volume_id = j.at("volume_id").get<std::string>();
    r.lesion.box.center = vec_from(j.at("center_vox"), "center_vox");
    r.lesion.box.diameter = j.at("diameter_vox").get<double>();
    if (!(r.lesion.box.diameter > 0)) throw DataError("diameter_vox must be > 0");
    if (j.contains("labels")) r.lesion.labels = j["labels"].get<Labels>();
    return r;
  });
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_annotations(const fs::path& path, const std::vector<AnnotationRecord>& records) {
  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(annotation_to_json(r));
  write_jsonl(path, rows);
}

std::vector<AnnotationRecord> read_annotations(const fs::path& path) {
  std::vector<AnnotationRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(annotation_from_json(row));
  return out;
}

std::map<std::string, std::vector<Lesion>> group_by_volume(const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::vector<Lesion>> out;
  for (const auto& r : records) out[r.volume_id].push_back(r.lesion);
  return out;
}

json candidate_to_json(const std::string& volume_id, const CandidateDetection& c) {
  json j;
  j["volume_id"] = volume_id;
  j["center_vox"] = vec_json(c.box.center);
  j["diameter_vox"] = c.box.diameter;
  j["prob"] = c.probability;
  j["stage"] = c.stage == Stage::Reduced ? "reduced" : "detector";
  return j;
}

CandidateDetection candidate_from_json(const json& j, std::string* volume_id) {
  return guarded("candidate", [&] {
    CandidateDetection c;
    if (volume_id) *volume_id = j.at("volume_id").get<std::string>();
    c.box.center = vec_from(j.at("center_vox"), "center_vox");
    c.box.diameter = j.at("diameter_vox").get<double>();
    c.probability = j.at("prob").get<double>();
    const std::string stage = j.value("stage", "detector");
    if (stage != "detector" && stage != "reduced") throw DataError("unknown candidate stage '" + stage + "'");
    c.stage = stage == "reduced" ? Stage::Reduced : Stage::Detector;
    if (!(c.probability >= 0 && c.probability <= 1)) throw DataError("candidate prob outside [0, 1]");
    if (!(c.box.diameter > 0)) throw DataError("candidate diameter_vox must be > 0");
    return c;
  });
}

void write_candidates(const fs::path& path, const std::string& volume_id,
                      const std::vector<CandidateDetection>& cands) {
  std::vector<json> rows;
  for (const auto& c : cands) rows.push_back(candidate_to_json(volume_id, c));
  write_jsonl(path, rows);
}

CandidateFile read_candidates(const fs::path& path) {
  CandidateFile f;
  for (const auto& row : read_jsonl(path)) {
    std::string id;
    f.candidates.push_back(candidate_from_json(row, &id));
    if (f.volume_id.empty()) {
      f.volume_id = id;
    } else if (id != f.volume_id) {
      throw ConsistencyError(path.string() + " mixes volumes '" + f.volume_id + "' and '" + id + "'");
    }
  }
  return f;
}

fs::path candidate_path(const fs::path& dir, const std::string& volume_id) {
  return dir / (volume_id + ".candidates.jsonl");
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  json j;
  j["annotations"] = m.annotations;
  j["seed"] = m.seed;
  j["volumes"] = json::array();
  for (const auto& e : m.volumes) j["volumes"].push_back({{"volume_id", e.volume_id}, {"volume", e.volume}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset manifest " + path.string());
  return guarded("manifest", [&] {
    json j;
    in >> j;
    DatasetManifest m;
    m.annotations = j.value("annotations", std::string("annotations.jsonl"));
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.at("volumes")) {
      m.volumes.push_back({e.at("volume_id").get<std::string>(), e.at("volume").get<std::string>()});
    }
    m.root = path.parent_path();
    return m;
  });
}

json fpr_record_to_json(const FprTrainingRecord& r) {
  json j;
  j["volume_id"] = r.volume_id;
  j["center_vox"] = vec_json(r.center);
  j["label"] = to_string(r.label);
  j["scale"] = r.scale;
  j["patch_file"] = r.patch_file;
  return j;
}

}  // namespace aneudet
