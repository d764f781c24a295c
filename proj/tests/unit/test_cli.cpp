#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aneudet/cli.hpp"
#include "aneudet/records.hpp"
#include "../test_util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "aneudet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = aneudet::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

// Small volumes and few resamples keep the CLI tests quick.
fs::path small_config(const testutil::TempDir& dir) {
  const json cfg = {{"synth", {{"dims", {64, 64, 48}}, {"aneurysm_diameter_range", {5, 14}}, {"n_volumes", 4}}},
                    {"eval", {{"bootstrap_resamples", 50}}}};
  std::ofstream(dir / "cfg.json") << cfg.dump();
  return dir / "cfg.json";
}

}  // namespace

TEST_CASE("synth") {
  testutil::TempDir dir("cli_synth");
  const std::string cfg = small_config(dir).string();
  REQUIRE(run({"--config", cfg, "--seed", "3", "synth", "--out", (dir / "a").string(), "--n", "3"}).code == 0);
  const json m = json::parse(slurp(dir / "a/manifest.json"));
  CHECK(m["volumes"].size() == 3);

  REQUIRE(run({"--config", cfg, "--seed", "3", "--jobs", "3", "synth", "--out", (dir / "b").string(), "--n", "3"}).code == 0);
  CHECK(tree(dir / "a") == tree(dir / "b"));

  REQUIRE(run({"--config", cfg, "synth", "--out", (dir / "empty").string(), "--n", "0"}).code == 0);
  CHECK(json::parse(slurp(dir / "empty/manifest.json"))["volumes"].empty());

  CHECK(run({"synth", "--out", "/proc/aneudet_cannot_write"}).code == 2);
  std::ofstream(dir / "bad.json") << R"({"synth": {"n_aneurysms": -1}})";
  CHECK(run({"--config", (dir / "bad.json").string(), "synth", "--out", (dir / "c").string()}).code == 2);
  CHECK(run({"--config", (dir / "nope.json").string(), "synth", "--out", (dir / "c").string()}).code == 2);
  CHECK(run({"bogus"}).code == 2);
}

TEST_CASE("detect, reduce, eval and compare") {
  testutil::TempDir dir("cli_pipe");
  const std::string cfg = small_config(dir).string();
  const std::string ds = (dir / "ds").string(), manifest = (dir / "ds/manifest.json").string();
  REQUIRE(run({"--config", cfg, "--seed", "11", "synth", "--out", ds}).code == 0);

  SUBCASE("perfect oracle reproduces the annotations") {
    REQUIRE(run({"--config", cfg, "detect", "--dataset", manifest, "--out", (dir / "perfect").string(), "--perfect"}).code == 0);
    const auto ann = aneudet::group_by_volume(aneudet::read_annotations(dir / "ds/annotations.jsonl"));
    const auto m = aneudet::read_manifest(manifest);
    for (const auto& e : m.volumes) {
      const auto cands = aneudet::read_candidates(aneudet::candidate_path(dir / "perfect", e.volume_id)).candidates;
      const auto it = ann.find(e.volume_id);
      const std::size_t n = it == ann.end() ? 0 : it->second.size();
      REQUIRE(cands.size() == n);
      for (const auto& c : cands) {
        CHECK(c.probability == 1.0);
        CHECK(std::any_of(it->second.begin(), it->second.end(), [&](const aneudet::Lesion& l) {
          return std::abs(l.box.center.x - c.box.center.x) < 1e-9 && std::abs(l.box.diameter - c.box.diameter) < 1e-9;
        }));
      }
    }
    REQUIRE(run({"--config", cfg, "eval", "--dataset", manifest, "--candidates", (dir / "perfect").string(), "--out",
                 (dir / "rp").string()}).code == 0);
    CHECK(json::parse(slurp(dir / "rp/report.json"))["avg_sensitivity"]["value"] == 1.0);
  }

  SUBCASE("full run is deterministic and independent of jobs") {
    const std::string c1 = (dir / "c1").string(), c2 = (dir / "c2").string();
    REQUIRE(run({"--config", cfg, "detect", "--dataset", manifest, "--out", c1}).code == 0);
    REQUIRE(run({"--config", cfg, "--jobs", "4", "detect", "--dataset", manifest, "--out", c2}).code == 0);
    CHECK(tree(c1) == tree(c2));

    REQUIRE(run({"--config", cfg, "reduce", "--dataset", manifest, "--candidates", c1, "--out", (dir / "r1").string(),
                 "--classifier", "oracle", "--export-patches", (dir / "fpr").string()}).code == 0);
    CHECK(fs::exists(dir / "fpr/fpr_manifest.jsonl"));
    REQUIRE(run({"--config", cfg, "eval", "--dataset", manifest, "--candidates", c1, "--out", (dir / "e1").string()}).code == 0);
    REQUIRE(run({"--config", cfg, "--jobs", "3", "eval", "--dataset", manifest, "--candidates", c1, "--out",
                 (dir / "e1b").string()}).code == 0);
    CHECK(tree(dir / "e1") == tree(dir / "e1b"));
    CHECK(slurp(dir / "e1/froc.csv").rfind("threshold,fppv,sensitivity\n", 0) == 0);
    REQUIRE(run({"--config", cfg, "eval", "--dataset", manifest, "--candidates", (dir / "r1").string(), "--out",
                 (dir / "e2").string()}).code == 0);

    REQUIRE(run({"compare", "--a", (dir / "e1/report.json").string(), "--b", (dir / "e1/report.json").string(), "--out",
                 (dir / "cmp").string()}).code == 0);
    for (const auto& op : json::parse(slurp(dir / "cmp/comparison.json"))["operating_points"]) {
      CHECK(op["p_values"]["accuracy"] == 1.0);
    }
    REQUIRE(run({"compare", "--a", (dir / "e1/report.json").string(), "--b", (dir / "e2/report.json").string(), "--out",
                 (dir / "cmp2").string()}).code == 0);
    CHECK(slurp(dir / "cmp2/froc_paired.csv").rfind("model,threshold,fppv,sensitivity\n", 0) == 0);
  }

  SUBCASE("error exits") {
    const std::string c1 = (dir / "c1").string();
    REQUIRE(run({"--config", cfg, "detect", "--dataset", manifest, "--out", c1}).code == 0);

    // Corrupt and missing volumes.
    fs::copy(dir / "ds", dir / "bad", fs::copy_options::recursive);
    fs::resize_file(dir / "bad/volumes/vol0001.vol.raw", 10);
    const Run corrupt = run({"--config", cfg, "detect", "--dataset", (dir / "bad/manifest.json").string(), "--out", (dir / "x").string()});
    CHECK(corrupt.code == 3);
    CHECK(corrupt.err.find("vol0001") != std::string::npos);
    fs::remove(dir / "bad/volumes/vol0001.vol.raw");
    CHECK(run({"--config", cfg, "detect", "--dataset", (dir / "bad/manifest.json").string(), "--out", (dir / "x").string()}).code == 3);
    CHECK(run({"detect", "--dataset", (dir / "missing.json").string(), "--out", (dir / "x").string()}).code == 3);

    // Reduce: unknown volume ids and empty inputs.
    fs::copy(c1, dir / "c_extra", fs::copy_options::recursive);
    std::ofstream(dir / "c_extra/ghost.candidates.jsonl") << "";
    CHECK(run({"--config", cfg, "reduce", "--dataset", manifest, "--candidates", (dir / "c_extra").string(), "--out",
               (dir / "y").string()}).code == 3);
    fs::create_directories(dir / "c_empty");
    const Run empty = run({"--config", cfg, "reduce", "--dataset", manifest, "--candidates", (dir / "c_empty").string(), "--out",
                           (dir / "z").string()});
    CHECK(empty.code == 0);
    for (const auto& [name, content] : tree(dir / "z")) CHECK(content.empty());

    // Eval: id mismatch.
    const Run mismatch = run({"--config", cfg, "eval", "--dataset", manifest, "--candidates", (dir / "c_extra").string(), "--out",
                              (dir / "w").string()});
    CHECK(mismatch.code == 4);
    CHECK(mismatch.err.find("ghost") != std::string::npos);

    // Compare: different volume sets.
    REQUIRE(run({"--config", cfg, "eval", "--dataset", manifest, "--candidates", c1, "--out", (dir / "e").string()}).code == 0);
    json other = json::parse(slurp(dir / "e/report.json"));
    other["volumes"].erase(0);
    std::ofstream(dir / "other.json") << other.dump();
    CHECK(run({"compare", "--a", (dir / "e/report.json").string(), "--b", (dir / "other.json").string(), "--out",
               (dir / "v").string()}).code == 4);
  }
}

TEST_CASE("reduce keeps probability one under an all-ones classifier") {
  testutil::TempDir dir("cli_ones");
  const std::string cfg = small_config(dir).string();
  const std::string manifest = (dir / "ds/manifest.json").string();
  REQUIRE(run({"--config", cfg, "synth", "--out", (dir / "ds").string()}).code == 0);
  REQUIRE(run({"--config", cfg, "detect", "--dataset", manifest, "--out", (dir / "p").string(), "--perfect"}).code == 0);
  REQUIRE(run({"--config", cfg, "reduce", "--dataset", manifest, "--candidates", (dir / "p").string(), "--out",
               (dir / "r").string(), "--classifier", "oracle"}).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "r")) {
    for (const auto& c : aneudet::read_candidates(e.path()).candidates) CHECK(c.probability == 1.0);
  }
}
