#include "humorfuse/split.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "humorfuse/error.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

using nlohmann::json;

FoldPlan::FoldPlan(std::string dataset_id, std::size_t k, std::uint64_t seed,
                   std::vector<std::string> text_ids, std::vector<std::uint32_t> folds)
    : dataset_id_(std::move(dataset_id)),
      k_(k),
      seed_(seed),
      text_ids_(std::move(text_ids)),
      folds_(std::move(folds)) {
  if (text_ids_.size() != folds_.size()) {
    throw Error(ErrorCategory::Validation, "fold plan: ids and folds differ in length");
  }
  index_.reserve(text_ids_.size());
  for (std::size_t i = 0; i < text_ids_.size(); ++i) {
    if (folds_[i] >= k_) {
      throw Error(ErrorCategory::Validation, "fold plan: fold index out of range");
    }
    if (!index_.emplace(text_ids_[i], folds_[i]).second) {
      throw Error(ErrorCategory::Duplicate, "fold plan: text '" + text_ids_[i] + "' assigned twice");
    }
  }
}

std::optional<std::uint32_t> FoldPlan::fold_of(const std::string& text_id) const {
  auto it = index_.find(text_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k_, 0);
  for (auto f : folds_) ++sizes[f];
  return sizes;
}

FoldPlan assign_folds(std::string dataset_id, std::span<const std::string> text_ids,
                      std::size_t k, std::uint64_t seed) {
  if (k < 3) {
    throw Error(ErrorCategory::Validation, "k must be at least 3 (train, validation and test)");
  }
  if (text_ids.size() < k) {
    throw Error(ErrorCategory::Validation, dataset_id + ": " + std::to_string(text_ids.size()) +
                                               " texts cannot fill " + std::to_string(k) +
                                               " folds");
  }
  std::vector<std::size_t> order(text_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::uint32_t> folds(text_ids.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    folds[order[pos]] = static_cast<std::uint32_t>(pos % k);
  }
  return FoldPlan(std::move(dataset_id), k, seed,
                  std::vector<std::string>(text_ids.begin(), text_ids.end()), std::move(folds));
}

FoldPlan assign_folds(const Corpus& corpus, std::size_t k, std::uint64_t workspace_seed) {
  std::vector<std::string> ids;
  ids.reserve(corpus.texts().size());
  for (const auto& t : corpus.texts()) ids.push_back(t.text_id);
  return assign_folds(corpus.id(), ids, k, derive_seed(workspace_seed, corpus.id()));
}

CvIteration cv_iteration(std::size_t k, std::size_t index) {
  if (k < 3) throw Error(ErrorCategory::Validation, "k must be at least 3");
  if (index >= k) throw Error(ErrorCategory::Validation, "iteration index out of range");
  CvIteration it;
  it.index = index;
  it.val_fold = static_cast<std::uint32_t>((index + k - 2) % k);
  it.test_fold = static_cast<std::uint32_t>((index + k - 1) % k);
  for (std::size_t f = 0; f < k; ++f) {
    if (f != it.val_fold && f != it.test_fold) it.train_folds.push_back(static_cast<std::uint32_t>(f));
  }
  return it;
}

std::vector<CvIteration> cv_iterations(std::size_t k) {
  std::vector<CvIteration> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(cv_iteration(k, i));
  return out;
}

namespace {

std::vector<std::uint32_t> folds_of_texts(const Corpus& corpus, const FoldPlan& plan) {
  std::vector<std::uint32_t> folds;
  folds.reserve(corpus.texts().size());
  for (const auto& t : corpus.texts()) {
    auto f = plan.fold_of(t.text_id);
    if (!f) {
      throw Error(ErrorCategory::Reference,
                  corpus.id() + ": text '" + t.text_id + "' missing from fold plan");
    }
    folds.push_back(*f);
  }
  return folds;
}

}  // namespace

Corpus restrict_to_folds(const Corpus& corpus, const FoldPlan& plan,
                         std::span<const std::uint32_t> wanted) {
  const auto folds = folds_of_texts(corpus, plan);
  return corpus.restrict_texts([&](std::size_t i) {
    return std::find(wanted.begin(), wanted.end(), folds[i]) != wanted.end();
  });
}

SplitParts materialize_split(const Corpus& corpus, const FoldPlan& plan, const CvIteration& iter) {
  const auto folds = folds_of_texts(corpus, plan);
  std::vector<char> is_train(plan.k(), 0);
  for (auto f : iter.train_folds) is_train.at(f) = 1;
  return SplitParts{
      corpus.restrict_texts([&](std::size_t i) { return is_train[folds[i]] != 0; }),
      corpus.restrict_texts([&](std::size_t i) { return folds[i] == iter.val_fold; }),
      corpus.restrict_texts([&](std::size_t i) { return folds[i] == iter.test_fold; }),
  };
}

void write_fold_plan(const FoldPlan& plan, std::ostream& out) {
  out << json{{"dataset_id", plan.dataset_id()},
              {"k", plan.k()},
              {"seed", plan.seed()},
              {"prng", SplitMix64::kName}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < plan.text_ids().size(); ++i) {
    out << json{{"text_id", plan.text_ids()[i]}, {"fold", plan.folds()[i]}}.dump() << '\n';
  }
}

FoldPlan read_fold_plan(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_object = [&]() -> std::optional<json> {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCategory::Parse, std::string("fold plan: ") + e.what(), line_no);
      }
    }
    return std::nullopt;
  };

  auto header = next_object();
  if (!header) throw Error(ErrorCategory::Parse, "fold plan: empty file");
  std::string dataset_id;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  try {
    dataset_id = header->at("dataset_id").get<std::string>();
    k = header->at("k").get<std::size_t>();
    seed = header->at("seed").get<std::uint64_t>();
    const auto prng = header->at("prng").get<std::string>();
    if (prng != SplitMix64::kName) {
      throw Error(ErrorCategory::Validation, "fold plan: unsupported prng '" + prng + "'", line_no);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("fold plan header: ") + e.what(), line_no);
  }

  std::vector<std::string> ids;
  std::vector<std::uint32_t> folds;
  while (auto row = next_object()) {
    try {
      ids.push_back(row->at("text_id").get<std::string>());
      folds.push_back(row->at("fold").get<std::uint32_t>());
    } catch (const json::exception& e) {
      throw Error(ErrorCategory::Parse, std::string("fold plan row: ") + e.what(), line_no);
    }
  }
  FoldPlan plan(dataset_id, k, seed, ids, folds);
  if (!(assign_folds(dataset_id, ids, k, seed) == plan)) {
    throw Error(ErrorCategory::Validation,
                "fold plan for '" + dataset_id + "' does not match its seeded assignment");
  }
  return plan;
}

}  // namespace humorfuse
