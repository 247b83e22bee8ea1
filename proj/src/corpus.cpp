#include "humorfuse/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "humorfuse/error.hpp"

namespace humorfuse {

using nlohmann::json;

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::Personalized ? "personalized" : "generalized";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "personalized") return DatasetKind::Personalized;
  if (name == "generalized") return DatasetKind::Generalized;
  throw Error(ErrorCategory::Validation,
              "unknown dataset kind '" + std::string(name) +
                  "' (allowed: personalized, generalized)");
}

json to_json(const DatasetDescriptor& d) {
  return json{{"dataset_id", d.dataset_id},
              {"kind", to_string(d.kind)},
              {"language", d.language},
              {"content_profile", d.content_profile},
              {"label_field", d.label_field},
              {"paired", d.paired}};
}

DatasetDescriptor descriptor_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCategory::Parse, "descriptor must be a JSON object");
  DatasetDescriptor d;
  try {
    d.dataset_id = j.at("dataset_id").get<std::string>();
    d.kind = parse_dataset_kind(j.value("kind", std::string("personalized")));
    d.language = j.value("language", std::string());
    d.content_profile = j.value("content_profile", std::string());
    d.label_field = j.value("label_field", std::string());
    d.paired = j.value("paired", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("descriptor: ") + e.what());
  }
  if (d.dataset_id.empty()) throw Error(ErrorCategory::Validation, "descriptor: empty dataset_id");
  return d;
}

std::uint8_t binarize_label(double raw_label) {
  if (!std::isfinite(raw_label)) {
    throw Error(ErrorCategory::Validation, "non-finite raw label");
  }
  return raw_label != 0.0 ? 1 : 0;
}

Corpus Corpus::create(DatasetDescriptor descriptor, std::vector<TextUnit> texts,
                      std::vector<std::string> annotators,
                      std::vector<Annotation> annotations,
                      std::size_t skipped_empty_labels) {
  Corpus c;
  c.descriptor_ = std::move(descriptor);
  c.texts_ = std::move(texts);
  c.annotators_ = std::move(annotators);
  c.annotations_ = std::move(annotations);
  c.skipped_empty_labels_ = skipped_empty_labels;

  const auto& id = c.descriptor_.dataset_id;
  c.text_index_.reserve(c.texts_.size());
  for (std::size_t i = 0; i < c.texts_.size(); ++i) {
    const TextUnit& t = c.texts_[i];
    if (t.content.empty()) {
      throw Error(ErrorCategory::Validation, id + ": text '" + t.text_id + "' has empty content");
    }
    if (t.secondary_content.has_value() != c.descriptor_.paired) {
      throw Error(ErrorCategory::Validation,
                  id + ": text '" + t.text_id +
                      (c.descriptor_.paired ? "' lacks secondary_content in a paired dataset"
                                            : "' has secondary_content in an unpaired dataset"));
    }
    if (!c.text_index_.emplace(t.text_id, i).second) {
      throw Error(ErrorCategory::Duplicate, id + ": duplicate text_id '" + t.text_id + "'");
    }
  }

  if (!c.personalized()) {
    if (c.annotators_.size() != 1 || c.annotators_[0] != kAggregateAnnotator) {
      throw Error(ErrorCategory::Validation,
                  id + ": generalized corpus must have exactly the aggregate annotator");
    }
  } else {
    std::unordered_set<std::string_view> seen;
    for (const auto& a : c.annotators_) {
      if (!seen.insert(a).second) {
        throw Error(ErrorCategory::Duplicate, id + ": duplicate annotator '" + a + "'");
      }
    }
  }

  std::unordered_set<std::uint64_t> pairs;
  pairs.reserve(c.annotations_.size());
  for (const Annotation& a : c.annotations_) {
    if (a.text >= c.texts_.size() || a.annotator >= c.annotators_.size()) {
      throw Error(ErrorCategory::Reference, id + ": annotation index out of range");
    }
    if (a.label != binarize_label(a.raw_label)) {
      throw Error(ErrorCategory::Validation, id + ": binary label disagrees with raw label");
    }
    const std::uint64_t key = (static_cast<std::uint64_t>(a.text) << 32) | a.annotator;
    if (!pairs.insert(key).second) {
      throw Error(ErrorCategory::Duplicate, id + ": duplicate annotation for text '" +
                                                c.texts_[a.text].text_id + "' by '" +
                                                c.annotators_[a.annotator] + "'");
    }
  }
  return c;
}

std::optional<std::size_t> Corpus::find_text(std::string_view text_id) const {
  auto it = text_index_.find(std::string(text_id));
  if (it == text_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<std::size_t>> Corpus::annotations_by_text() const {
  std::vector<std::vector<std::size_t>> groups(texts_.size());
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    groups[annotations_[i].text].push_back(i);
  }
  return groups;
}

Corpus Corpus::restrict_texts(const std::function<bool(std::size_t)>& keep) const {
  std::vector<std::int64_t> text_map(texts_.size(), -1);
  std::vector<TextUnit> texts;
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    if (keep(i)) {
      text_map[i] = static_cast<std::int64_t>(texts.size());
      texts.push_back(texts_[i]);
    }
  }

  std::vector<char> used(annotators_.size(), 0);
  for (const Annotation& a : annotations_) {
    if (text_map[a.text] >= 0) used[a.annotator] = 1;
  }
  std::vector<std::int64_t> annotator_map(annotators_.size(), -1);
  std::vector<std::string> annotators;
  for (std::size_t i = 0; i < annotators_.size(); ++i) {
    // Generalized corpora always keep their single aggregate annotator.
    if (used[i] || !personalized()) {
      annotator_map[i] = static_cast<std::int64_t>(annotators.size());
      annotators.push_back(annotators_[i]);
    }
  }

  std::vector<Annotation> annotations;
  for (const Annotation& a : annotations_) {
    if (text_map[a.text] < 0) continue;
    Annotation b = a;
    b.text = static_cast<std::uint32_t>(text_map[a.text]);
    b.annotator = static_cast<std::uint32_t>(annotator_map[a.annotator]);
    annotations.push_back(b);
  }
  return Corpus::create(descriptor_, std::move(texts), std::move(annotators),
                        std::move(annotations), skipped_empty_labels_);
}

namespace {

json parse_line(const std::string& line, std::size_t line_no, std::string_view source) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) {
      throw Error(ErrorCategory::Parse, std::string(source) + ": expected a JSON object", line_no);
    }
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::Parse, std::string(source) + ": malformed JSON (" + e.what() + ")",
                line_no);
  }
}

std::string required_string(const json& j, const char* key, std::size_t line_no,
                            std::string_view source) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCategory::Parse,
                std::string(source) + ": missing or non-string field '" + key + "'", line_no);
  }
  return it->get<std::string>();
}

// Returns nullopt for an empty judgment (null value).
std::optional<double> read_label(const json& value, std::size_t line_no) {
  if (value.is_null()) return std::nullopt;
  if (!value.is_number()) {
    throw Error(ErrorCategory::Parse, "annotations: label must be a number or null", line_no);
  }
  const double raw = value.get<double>();
  if (!std::isfinite(raw)) {
    throw Error(ErrorCategory::Validation, "annotations: non-finite label", line_no);
  }
  return raw;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

Corpus load_dataset(const DatasetDescriptor& descriptor, std::istream& texts_source,
                    std::istream& annotations_source) {
  std::vector<TextUnit> texts;
  std::unordered_map<std::string, std::size_t> text_index;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(texts_source, line)) {
    ++line_no;
    if (blank(line)) continue;
    const json j = parse_line(line, line_no, "texts");
    TextUnit t;
    t.text_id = required_string(j, "text_id", line_no, "texts");
    t.content = required_string(j, "content", line_no, "texts");
    if (t.content.empty()) {
      throw Error(ErrorCategory::Validation, "texts: empty content", line_no);
    }
    if (auto it = j.find("secondary_content"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw Error(ErrorCategory::Parse, "texts: secondary_content must be a string", line_no);
      }
      t.secondary_content = it->get<std::string>();
    }
    if (t.secondary_content.has_value() != descriptor.paired) {
      throw Error(ErrorCategory::Validation,
                  descriptor.paired ? "texts: paired dataset requires secondary_content"
                                    : "texts: secondary_content in an unpaired dataset",
                  line_no);
    }
    t.language = j.contains("language") ? required_string(j, "language", line_no, "texts")
                                        : descriptor.language;
    if (!text_index.emplace(t.text_id, texts.size()).second) {
      throw Error(ErrorCategory::Duplicate, "texts: duplicate text_id '" + t.text_id + "'",
                  line_no);
    }
    texts.push_back(std::move(t));
  }

  const bool personalized = descriptor.kind == DatasetKind::Personalized;
  std::vector<std::string> annotators;
  std::unordered_map<std::string, std::uint32_t> annotator_index;
  if (!personalized) {
    annotators.emplace_back(kAggregateAnnotator);
    annotator_index.emplace(std::string(kAggregateAnnotator), 0);
  }

  std::vector<Annotation> annotations;
  std::unordered_set<std::uint64_t> pairs;
  std::size_t skipped = 0;
  line_no = 0;
  while (std::getline(annotations_source, line)) {
    ++line_no;
    if (blank(line)) continue;
    const json j = parse_line(line, line_no, "annotations");
    const std::string text_id = required_string(j, "text_id", line_no, "annotations");

    auto text_it = text_index.find(text_id);
    if (text_it == text_index.end()) {
      throw Error(ErrorCategory::Reference,
                  "annotations: unknown text_id '" + text_id + "'", line_no);
    }

    std::uint32_t annotator = 0;
    if (personalized) {
      const std::string user = required_string(j, "user_id", line_no, "annotations");
      if (user == kAggregateAnnotator) {
        throw Error(ErrorCategory::Validation, "annotations: reserved user_id", line_no);
      }
      auto [it, inserted] =
          annotator_index.emplace(user, static_cast<std::uint32_t>(annotators.size()));
      if (inserted) annotators.push_back(user);
      annotator = it->second;
    }

    std::optional<double> raw;
    if (auto labels = j.find("labels"); labels != j.end()) {
      if (!labels->is_object()) {
        throw Error(ErrorCategory::Parse, "annotations: 'labels' must be an object", line_no);
      }
      auto field = labels->find(descriptor.label_field);
      if (descriptor.label_field.empty() || field == labels->end()) {
        throw Error(ErrorCategory::Validation,
                    "annotations: label field '" + descriptor.label_field +
                        "' missing from multi-dimensional record",
                    line_no);
      }
      raw = read_label(*field, line_no);
    } else if (auto label = j.find("label"); label != j.end()) {
      raw = read_label(*label, line_no);
    } else {
      throw Error(ErrorCategory::Parse, "annotations: record has neither 'label' nor 'labels'",
                  line_no);
    }
    if (!raw) {
      ++skipped;
      continue;
    }

    Annotation a;
    a.text = static_cast<std::uint32_t>(text_it->second);
    a.annotator = annotator;
    a.raw_label = *raw;
    a.label = binarize_label(*raw);
    const std::uint64_t key = (static_cast<std::uint64_t>(a.text) << 32) | a.annotator;
    if (!pairs.insert(key).second) {
      throw Error(ErrorCategory::Duplicate,
                  "annotations: duplicate (text, annotator) pair for '" + text_id + "'", line_no);
    }
    annotations.push_back(a);
  }

  return Corpus::create(descriptor, std::move(texts), std::move(annotators),
                        std::move(annotations), skipped);
}

void write_dataset(const Corpus& corpus, std::ostream& texts_out, std::ostream& annotations_out) {
  for (const TextUnit& t : corpus.texts()) {
    json j{{"text_id", t.text_id}, {"content", t.content}, {"language", t.language}};
    if (t.secondary_content) j["secondary_content"] = *t.secondary_content;
    texts_out << j.dump() << '\n';
  }
  for (const Annotation& a : corpus.annotations()) {
    json j{{"text_id", corpus.text_of(a).text_id}, {"label", a.raw_label}};
    if (corpus.personalized()) j["user_id"] = corpus.annotator_of(a);
    annotations_out << j.dump() << '\n';
  }
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.n_texts = corpus.texts().size();
  s.n_annotations = corpus.annotations().size();
  s.n_annotators = corpus.annotators().size();
  for (const Annotation& a : corpus.annotations()) {
    (a.label ? s.class_1 : s.class_0) += 1;
  }
  if (s.n_texts > 0) {
    s.avg_annotations_per_text =
        static_cast<double>(s.n_annotations) / static_cast<double>(s.n_texts);
  }
  if (s.n_annotators > 0) {
    s.avg_annotations_per_annotator =
        static_cast<double>(s.n_annotations) / static_cast<double>(s.n_annotators);
  }
  return s;
}

std::string stats_csv_header() {
  return "dataset_id,content_profile,n_texts,n_annotations,n_annotators,"
         "avg_annotations_per_text,avg_annotations_per_annotator,class_0,class_1,language";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string stats_csv_row(const DatasetDescriptor& d, const CorpusStats& s) {
  char averages[96];
  std::snprintf(averages, sizeof averages, "%.4f,%.4f", s.avg_annotations_per_text,
                s.avg_annotations_per_annotator);
  return csv_field(d.dataset_id) + "," + csv_field(d.content_profile) + "," +
         std::to_string(s.n_texts) + "," + std::to_string(s.n_annotations) + "," +
         std::to_string(s.n_annotators) + "," + averages + "," + std::to_string(s.class_0) +
         "," + std::to_string(s.class_1) + "," + csv_field(d.language);
}

Corpus filter_min_disagreement(const Corpus& corpus) {
  if (!corpus.personalized()) {
    throw Error(ErrorCategory::Validation,
                corpus.id() + ": disagreement filter applies to personalized corpora only");
  }
  std::vector<std::uint8_t> seen(corpus.texts().size(), 0);  // bit0: saw 0, bit1: saw 1
  for (const Annotation& a : corpus.annotations()) {
    seen[a.text] |= a.label ? 2 : 1;
  }
  return corpus.restrict_texts([&](std::size_t i) { return seen[i] == 3; });
}

}  // namespace humorfuse
