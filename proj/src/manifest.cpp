#include "humorfuse/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "humorfuse/error.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

DatasetSource source_from_json(const json& j) {
  DatasetSource s;
  if (j.contains("archive")) {
    s.archive = j.at("archive").get<std::string>();
  } else {
    s.descriptor = descriptor_from_json(j.at("descriptor"));
    s.texts_path = j.at("texts").get<std::string>();
    s.annotations_path = j.at("annotations").get<std::string>();
  }
  s.min_disagreement = j.value("min_disagreement", false);
  return s;
}

json source_to_json(const DatasetSource& s) {
  json j;
  if (s.archive) {
    j["archive"] = *s.archive;
  } else {
    j["descriptor"] = to_json(s.descriptor);
    j["texts"] = s.texts_path;
    j["annotations"] = s.annotations_path;
  }
  j["min_disagreement"] = s.min_disagreement;
  return j;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCategory::Io, "cannot open '" + p.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCategory::Io, "cannot write '" + p.string() + "'");
  return out;
}

}  // namespace

RunManifest manifest_from_json(const json& j, fs::path base_dir) {
  RunManifest m;
  m.base_dir = std::move(base_dir);
  try {
    m.run_id = j.value("run_id", m.run_id);
    for (const auto& d : j.at("datasets")) m.datasets.push_back(source_from_json(d));
    m.plan = fusion_plan_from_json(j.at("fusion"));
    if (j.contains("model")) {
      m.model = model_config_from_json(j["model"]);
      m.input_dim_explicit = j["model"].contains("input_dim");
    }
    if (j.contains("folds")) {
      m.k = j["folds"].value("k", m.k);
      m.seed = j["folds"].value("seed", m.seed);
    }
    m.provider = j.value("provider", m.provider);
    m.output_dir = j.value("output_dir", m.output_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("manifest: ") + e.what());
  }
  if (m.run_id.empty()) throw Error(ErrorCategory::Validation, "manifest: empty run_id");
  if (m.k < 3) throw Error(ErrorCategory::Validation, "manifest: k must be at least 3");
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, "manifest '" + path.string() + "': " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

json to_json(const RunManifest& m) {
  json datasets = json::array();
  for (const auto& d : m.datasets) datasets.push_back(source_to_json(d));
  return json{{"run_id", m.run_id},
              {"datasets", datasets},
              {"fusion", to_json(m.plan)},
              {"model", to_json(m.model)},
              {"folds", {{"k", m.k}, {"seed", m.seed}}},
              {"provider", m.provider},
              {"output_dir", m.output_dir},
              {"protocol",
               {{"prng", SplitMix64::kName},
                {"fold_rotation", "val=(i+k-2)%k,test=(i+k-1)%k"},
                {"majority_tie", 0},
                {"unannotated_texts", "dropped"},
                {"eval_unit", "annotation"},
                {"normality_alpha", 0.05}}}};
}

std::string manifest_hash(const RunManifest& m) {
  // nlohmann's object type is an ordered std::map, so dump() is canonical.
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(m).dump())));
  return buf;
}

fs::path resolve(const RunManifest& m, const std::string& path) {
  fs::path p(path);
  return p.is_absolute() || m.base_dir.empty() ? p : m.base_dir / p;
}

CorpusMap load_corpora(const RunManifest& m) {
  CorpusMap out;
  for (const auto& src : m.datasets) {
    Corpus corpus = [&] {
      if (src.archive) return read_archive(resolve(m, *src.archive));
      auto texts = open_in(resolve(m, src.texts_path));
      auto annotations = open_in(resolve(m, src.annotations_path));
      return load_dataset(src.descriptor, texts, annotations);
    }();
    if (src.min_disagreement) corpus = filter_min_disagreement(corpus);
    const std::string id = corpus.id();
    if (!out.emplace(id, std::move(corpus)).second) {
      throw Error(ErrorCategory::Duplicate, "manifest: dataset '" + id + "' listed twice");
    }
  }
  return out;
}

void write_archive(const Corpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create '" + dir.string() + "': " + ec.message());
  {
    auto out = open_out(dir / "descriptor.json");
    out << to_json(corpus.descriptor()).dump(2) << '\n';
  }
  auto texts = open_out(dir / "texts.jsonl");
  auto annotations = open_out(dir / "annotations.jsonl");
  write_dataset(corpus, texts, annotations);
  if (!texts || !annotations) throw Error(ErrorCategory::Io, "write failed under '" + dir.string() + "'");
}

Corpus read_archive(const fs::path& dir) {
  auto in = open_in(dir / "descriptor.json");
  DatasetDescriptor d;
  try {
    d = descriptor_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, "descriptor in '" + dir.string() + "': " + e.what());
  }
  auto texts = open_in(dir / "texts.jsonl");
  auto annotations = open_in(dir / "annotations.jsonl");
  return load_dataset(d, texts, annotations);
}

}  // namespace humorfuse
