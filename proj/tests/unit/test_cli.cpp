#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "humorfuse/app.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "humorfuse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = humorfuse::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const fs::path dir = fs::path(HUMORFUSE_SCRATCH) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json error_of(const Outcome& o) { return json::parse(o.err).at("error"); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ingest writes an archive and stats, and reports malformed lines") {
  const fs::path dir = fresh("ingest");
  write(dir / "d.json", R"({"dataset_id":"tiny","kind":"personalized","language":"en"})");
  write(dir / "t.jsonl", "{\"text_id\":\"a\",\"content\":\"abc\"}\n{\"text_id\":\"b\",\"content\":\"de\"}\n");
  write(dir / "a.jsonl", "{\"text_id\":\"a\",\"user_id\":\"u\",\"label\":1}\n{\"text_id\":\"b\",\"user_id\":\"v\",\"label\":0}\n");
  const Outcome ok = run({"--out", (dir / "out").string(), "ingest", "--texts", (dir / "t.jsonl").string(),
                          "--annotations", (dir / "a.jsonl").string(), "--descriptor", (dir / "d.json").string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  CHECK(ok.out.rfind("dataset_id,", 0) == 0);
  CHECK(ok.out.find("\ntiny,") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "tiny" / "descriptor.json"));
  CHECK(slurp(dir / "out" / "tiny" / "stats.csv") == ok.out);

  const Outcome stats = run({"stats", (dir / "out" / "tiny").string()});
  CHECK(stats.code == 0);
  CHECK(stats.out == ok.out);

  write(dir / "bad.jsonl", "{\"text_id\":\"a\",\"user_id\":\"u\",\"label\":1}\n{\"text_id\":\"b\",\"user_id\":\n");
  const Outcome bad = run({"--out", (dir / "out2").string(), "ingest", "--texts", (dir / "t.jsonl").string(),
                           "--annotations", (dir / "bad.jsonl").string(), "--descriptor", (dir / "d.json").string()});
  CHECK(bad.code == 2);
  CHECK(bad.out.empty());
  const json e = error_of(bad);
  CHECK(e.at("category") == "parse");
  CHECK(e.at("line") == 2);

  write(dir / "dangling.jsonl", "{\"text_id\":\"zzz\",\"user_id\":\"u\",\"label\":1}\n");
  const Outcome dangling = run({"ingest", "--texts", (dir / "t.jsonl").string(), "--annotations",
                                (dir / "dangling.jsonl").string(), "--descriptor", (dir / "d.json").string()});
  CHECK(dangling.code == 2);
  CHECK(error_of(dangling).at("category") == "reference");

  const Outcome missing = run({"ingest", "--texts", "nowhere.jsonl"});
  CHECK(missing.code == 2);
  CHECK(error_of(missing).at("category") == "usage");
}

TEST_CASE("synth, split, fuse, experiment, compare and report") {
  const fs::path dir = fresh("pipeline");
  const Outcome synth = run({"--seed", "4", "--out", (dir / "data").string(), "synth", "--users", "10", "--texts",
                             "120", "--annotations-per-text", "3", "--split-count", "2"});
  REQUIRE_MESSAGE(synth.code == 0, synth.err);
  CHECK(fs::exists(dir / "data" / "synth_0" / "texts.jsonl"));
  CHECK(fs::exists(dir / "data" / "ground_truth.jsonl"));

  const json manifest = {
      {"run_id", "base"},
      {"datasets", {{{"archive", "data/synth_0"}}, {{"archive", "data/synth_1"}}}},
      {"fusion", {{"scenario", "personalized_multi"}, {"datasets", {"synth_0", "synth_1"}}, {"target", "synth_0"}}},
      {"model", {{"architecture", "onehot"}, {"hidden_dim", 8}, {"max_epochs", 3}, {"patience", 1}}},
      {"folds", {{"k", 4}, {"seed", 2}}},
      {"provider", "hash:16"},
      {"output_dir", "runs"}};
  write(dir / "m.json", manifest.dump(2));
  const std::string m = (dir / "m.json").string();

  const Outcome split = run({"--manifest", m, "split"});
  REQUIRE_MESSAGE(split.code == 0, split.err);
  CHECK(fs::exists(dir / "runs" / "folds" / "synth_0.jsonl"));
  CHECK(json::parse(split.out).size() == 2);

  const Outcome fuse = run({"--manifest", m, "fuse", "--iteration", "1"});
  REQUIRE_MESSAGE(fuse.code == 0, fuse.err);
  CHECK(json::parse(fuse.out).at("users") == 10 * 2);

  const Outcome base = run({"--manifest", m, "experiment", "--iterations", "0,1,2"});
  REQUIRE_MESSAGE(base.code == 0, base.err);
  const fs::path base_json = dir / "runs" / "base.json";
  const json report = json::parse(slurp(base_json));
  CHECK(report.at("folds").size() == 3);
  CHECK(report.at("manifest_hash").get<std::string>().size() == 16);
  CHECK(report.at("metadata").contains("created_at"));
  CHECK(fs::exists(dir / "runs" / "base.csv"));
  CHECK(fs::exists(dir / "runs" / "manifests" / "base.json"));

  const Outcome self = run({"--manifest", m, "experiment", "--iterations", "0,1,2", "--run-id", "again", "--compare",
                            base_json.string(), "--comparisons", "3"});
  REQUIRE_MESSAGE(self.code == 0, self.err);
  const json again = json::parse(slurp(dir / "runs" / "again.json"));
  CHECK(again.at("gain") == 0.0);
  CHECK(again.at("significance").at("p_adjusted") == doctest::Approx(1.0));
  CHECK(again.at("significance").at("m") == 3);
  CHECK(again.at("baseline_run") == "base");

  const Outcome single = run({"--manifest", m, "experiment", "--iterations", "1", "--run-id", "txt", "--scenario",
                              "personalized_single", "--architecture", "txt_baseline"});
  // personalized_single with two member datasets is an invalid plan.
  CHECK(single.code == 2);
  CHECK(error_of(single).at("category") == "validation");

  const Outcome wrong = run({"--manifest", m, "experiment", "--scenario", "everything"});
  CHECK(wrong.code == 2);
  const std::string message = error_of(wrong).at("message");
  CHECK(message.find("personalized_multi") != std::string::npos);
  CHECK(message.find("majority_single") != std::string::npos);

  const Outcome chart = run({"--out", (dir / "chart").string(), "report", base_json.string(),
                             (dir / "runs" / "again.json").string()});
  // Same architecture and scenario twice on one target.
  CHECK(chart.code == 2);
  CHECK(error_of(chart).at("category") == "duplicate");

  const Outcome other = run({"--manifest", m, "experiment", "--iterations", "0,1,2", "--run-id", "medium",
                             "--architecture", "sheep_medium"});
  REQUIRE_MESSAGE(other.code == 0, other.err);
  const Outcome ok = run({"--out", (dir / "chart").string(), "report", base_json.string(),
                          (dir / "runs" / "medium.json").string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  const std::string svg = slurp(dir / "chart" / "report.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(slurp(dir / "chart" / "report.csv") == ok.out);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  const Outcome unknown = run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(error_of(unknown).at("category") == "usage");
  CHECK(error_of(run({"experiment"})).at("message") == "--manifest is required");
}

}  // TEST_SUITE
