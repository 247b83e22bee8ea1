#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "humorfuse/corpus.hpp"
#include "humorfuse/fusion.hpp"
#include "humorfuse/models.hpp"
#include "json.hpp"

namespace humorfuse {

// Where one dataset of a run comes from: either an ingested archive directory
// (descriptor.json, texts.jsonl, annotations.jsonl) or a descriptor plus the
// two JSONL files.
struct DatasetSource {
  std::optional<std::string> archive;
  DatasetDescriptor descriptor;
  std::string texts_path;
  std::string annotations_path;
  bool min_disagreement = false;  // keep only texts whose annotators disagree
};

struct RunManifest {
  std::string run_id = "run";
  std::vector<DatasetSource> datasets;
  FusionPlan plan;
  ModelConfig model;
  bool input_dim_explicit = false;  // otherwise derived from the provider
  std::size_t k = 10;
  std::uint64_t seed = 0;  // workspace seed for fold plans
  std::string provider = "hash";
  std::string output_dir = "out";
  std::filesystem::path base_dir;  // relative paths resolve against this
};

RunManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
RunManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const RunManifest& manifest);

// Hex FNV-1a of the canonical JSON form (keys sorted, base_dir excluded).
std::string manifest_hash(const RunManifest& manifest);

std::filesystem::path resolve(const RunManifest& manifest, const std::string& path);

// Loads every dataset of the manifest, applying per-dataset filters.
CorpusMap load_corpora(const RunManifest& manifest);

// Archive layout shared by `ingest` and manifests.
void write_archive(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_archive(const std::filesystem::path& dir);

}  // namespace humorfuse
