#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aneudet/fpr.hpp"
#include "aneudet/lesion.hpp"
#include "aneudet/postproc.hpp"

namespace aneudet {

// JSON Lines record formats shared by the CLI stages.

struct AnnotationRecord {
  std::string volume_id;
  Lesion lesion;
};

nlohmann::json annotation_to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// Lesions grouped by volume id, in file order.
std::map<std::string, std::vector<Lesion>> group_by_volume(const std::vector<AnnotationRecord>& records);

nlohmann::json candidate_to_json(const std::string& volume_id, const CandidateDetection& c);
CandidateDetection candidate_from_json(const nlohmann::json& j, std::string* volume_id = nullptr);

void write_candidates(const std::filesystem::path& path, const std::string& volume_id,
                      const std::vector<CandidateDetection>& cands);

struct CandidateFile {
  std::string volume_id;  // empty when the file holds no records
  std::vector<CandidateDetection> candidates;
};

// Throws ConsistencyError when records name more than one volume.
CandidateFile read_candidates(const std::filesystem::path& path);

std::filesystem::path candidate_path(const std::filesystem::path& dir, const std::string& volume_id);

struct ManifestEntry {
  std::string volume_id;
  std::string volume;  // stem relative to the manifest directory
};

struct DatasetManifest {
  std::vector<ManifestEntry> volumes;
  std::string annotations = "annotations.jsonl";
  std::uint64_t seed = 0;
  std::filesystem::path root;  // directory holding the manifest, not serialized

  std::filesystem::path volume_path(const ManifestEntry& e) const { return root / e.volume; }
  std::filesystem::path annotations_path() const { return root / annotations; }
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct FprTrainingRecord {
  std::string volume_id;
  Vec3 center;
  FprLabel label = FprLabel::Negative;
  int scale = 0;
  std::string patch_file;
};

nlohmann::json fpr_record_to_json(const FprTrainingRecord& r);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace aneudet
