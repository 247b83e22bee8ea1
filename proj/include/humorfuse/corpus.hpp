#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace humorfuse {

enum class DatasetKind { Personalized, Generalized };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

// Local id of the synthetic annotator that owns generalized and
// majority-voted labels.
inline constexpr std::string_view kAggregateAnnotator = "__aggregate__";

struct DatasetDescriptor {
  std::string dataset_id;
  DatasetKind kind = DatasetKind::Personalized;
  std::string language;
  std::string content_profile;
  // Humor dimension to read when annotation records carry a "labels" object.
  std::string label_field;
  // Texts carry secondary_content (edited headline) iff set.
  bool paired = false;
};

nlohmann::json to_json(const DatasetDescriptor& descriptor);
DatasetDescriptor descriptor_from_json(const nlohmann::json& j);

struct TextUnit {
  std::string text_id;
  std::string content;
  std::optional<std::string> secondary_content;
  std::string language;
};

// Indices point into the owning corpus' texts() and annotators().
struct Annotation {
  std::uint32_t text = 0;
  std::uint32_t annotator = 0;
  double raw_label = 0.0;
  std::uint8_t label = 0;
};

struct CorpusStats {
  std::size_t n_texts = 0;
  std::size_t n_annotations = 0;
  std::size_t n_annotators = 0;
  double avg_annotations_per_text = 0.0;
  double avg_annotations_per_annotator = 0.0;
  std::size_t class_0 = 0;
  std::size_t class_1 = 0;

  bool operator==(const CorpusStats&) const = default;
};

// Any non-zero raw value maps to class 1. Throws on non-finite input.
std::uint8_t binarize_label(double raw_label);

// Immutable annotated dataset.
class Corpus {
 public:
  // Validates every invariant (unique ids, non-empty content, pairing,
  // binarization, unique (text, annotator) pairs, aggregate annotator).
  static Corpus create(DatasetDescriptor descriptor, std::vector<TextUnit> texts,
                       std::vector<std::string> annotators,
                       std::vector<Annotation> annotations,
                       std::size_t skipped_empty_labels = 0);

  const DatasetDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::string& id() const noexcept { return descriptor_.dataset_id; }
  bool personalized() const noexcept { return descriptor_.kind == DatasetKind::Personalized; }

  std::span<const TextUnit> texts() const noexcept { return texts_; }
  std::span<const std::string> annotators() const noexcept { return annotators_; }
  std::span<const Annotation> annotations() const noexcept { return annotations_; }

  const TextUnit& text_of(const Annotation& a) const { return texts_[a.text]; }
  const std::string& annotator_of(const Annotation& a) const { return annotators_[a.annotator]; }

  std::optional<std::size_t> find_text(std::string_view text_id) const;

  // Records whose label was null/absent-valued and therefore skipped at load.
  std::size_t skipped_empty_labels() const noexcept { return skipped_empty_labels_; }

  // Annotation indices grouped by text index.
  std::vector<std::vector<std::size_t>> annotations_by_text() const;

  // Keeps the texts for which keep(text_index) holds, their annotations, and
  // the annotators that still own at least one annotation.
  Corpus restrict_texts(const std::function<bool(std::size_t)>& keep) const;

 private:
  Corpus() = default;

  DatasetDescriptor descriptor_;
  std::vector<TextUnit> texts_;
  std::vector<std::string> annotators_;
  std::vector<Annotation> annotations_;
  std::unordered_map<std::string, std::size_t> text_index_;
  std::size_t skipped_empty_labels_ = 0;
};

// Parses the texts and annotations JSONL streams. Parse errors carry the
// 1-based line number of the offending stream.
Corpus load_dataset(const DatasetDescriptor& descriptor, std::istream& texts_source,
                    std::istream& annotations_source);

// Writes the same JSONL formats load_dataset reads.
void write_dataset(const Corpus& corpus, std::ostream& texts_out,
                   std::ostream& annotations_out);

CorpusStats corpus_stats(const Corpus& corpus);

// One row per dataset: sizes, annotation densities and class balance.
std::string stats_csv_header();
std::string stats_csv_row(const DatasetDescriptor& descriptor, const CorpusStats& stats);

// Keeps only texts annotated both 0 and 1 by someone.
Corpus filter_min_disagreement(const Corpus& corpus);

}  // namespace humorfuse
