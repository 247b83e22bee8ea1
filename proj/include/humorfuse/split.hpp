#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "humorfuse/corpus.hpp"

namespace humorfuse {

inline constexpr std::size_t kDefaultFolds = 10;

// Text-level fold assignment for one dataset.
class FoldPlan {
 public:
  FoldPlan(std::string dataset_id, std::size_t k, std::uint64_t seed,
           std::vector<std::string> text_ids, std::vector<std::uint32_t> folds);

  const std::string& dataset_id() const noexcept { return dataset_id_; }
  std::size_t k() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Texts in the order they were assigned (input order, not shuffled order).
  std::span<const std::string> text_ids() const noexcept { return text_ids_; }
  std::span<const std::uint32_t> folds() const noexcept { return folds_; }

  std::optional<std::uint32_t> fold_of(const std::string& text_id) const;
  std::vector<std::size_t> fold_sizes() const;

  bool operator==(const FoldPlan& other) const {
    return dataset_id_ == other.dataset_id_ && k_ == other.k_ && seed_ == other.seed_ &&
           text_ids_ == other.text_ids_ && folds_ == other.folds_;
  }

 private:
  std::string dataset_id_;
  std::size_t k_;
  std::uint64_t seed_;
  std::vector<std::string> text_ids_;
  std::vector<std::uint32_t> folds_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct CvIteration {
  std::size_t index = 0;
  std::vector<std::uint32_t> train_folds;
  std::uint32_t val_fold = 0;
  std::uint32_t test_fold = 0;
};

// Seeded Fisher-Yates shuffle followed by round-robin dealing into k folds.
FoldPlan assign_folds(std::string dataset_id, std::span<const std::string> text_ids,
                      std::size_t k, std::uint64_t seed);

// Per-dataset plan whose seed is derived from a workspace seed and the dataset id.
FoldPlan assign_folds(const Corpus& corpus, std::size_t k, std::uint64_t workspace_seed);

// Iteration i: validation fold (i+k-2) mod k, test fold (i+k-1) mod k.
std::vector<CvIteration> cv_iterations(std::size_t k);
CvIteration cv_iteration(std::size_t k, std::size_t index);

struct SplitParts {
  Corpus train;
  Corpus val;
  Corpus test;
};

SplitParts materialize_split(const Corpus& corpus, const FoldPlan& plan, const CvIteration& iter);

// Keeps the texts whose fold is one of the listed folds.
Corpus restrict_to_folds(const Corpus& corpus, const FoldPlan& plan,
                         std::span<const std::uint32_t> folds);

// JSONL: header {"dataset_id","k","seed","prng"} then {"text_id","fold"} rows.
void write_fold_plan(const FoldPlan& plan, std::ostream& out);
// Rejects unknown PRNG names and rows that disagree with the seeded assignment.
FoldPlan read_fold_plan(std::istream& in);

}  // namespace humorfuse
