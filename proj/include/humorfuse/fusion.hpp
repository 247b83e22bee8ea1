#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "humorfuse/corpus.hpp"
#include "humorfuse/split.hpp"

namespace humorfuse {

enum class Scenario {
  MajoritySingle,
  MajorityMulti,
  MajorityGeneralizedMulti,
  PersonalizedSingle,
  PersonalizedMulti,
};

inline constexpr Scenario kAllScenarios[] = {
    Scenario::MajoritySingle, Scenario::MajorityMulti, Scenario::MajorityGeneralizedMulti,
    Scenario::PersonalizedSingle, Scenario::PersonalizedMulti};

std::string_view to_string(Scenario scenario);
// Throws a validation error listing the allowed names.
Scenario parse_scenario(std::string_view name);
bool is_majority(Scenario scenario);

struct FusionPlan {
  Scenario scenario = Scenario::PersonalizedSingle;
  std::vector<std::string> datasets;
  std::string target;
};

nlohmann::json to_json(const FusionPlan& plan);
FusionPlan fusion_plan_from_json(const nlohmann::json& j);

using CorpusMap = std::map<std::string, Corpus>;
using FoldPlanMap = std::map<std::string, FoldPlan>;

// Checks the plan's own invariants against the available corpora.
void validate_plan(const FusionPlan& plan, const CorpusMap& corpora);

struct GlobalUserId {
  std::string dataset_id;
  std::string local_id;

  auto operator<=>(const GlobalUserId&) const = default;
};

// Dense 0..U-1 indexing of (dataset, local user) pairs in first-seen order.
class UserRegistry {
 public:
  std::uint32_t add(const GlobalUserId& user);
  std::optional<std::uint32_t> find(const GlobalUserId& user) const;
  std::size_t size() const noexcept { return users_.size(); }
  std::span<const GlobalUserId> users() const noexcept { return users_; }

  bool operator==(const UserRegistry& other) const { return users_ == other.users_; }

 private:
  std::vector<GlobalUserId> users_;
  std::map<GlobalUserId, std::uint32_t> index_;
};

// Personalized annotators only; the aggregate annotator never gets an index.
UserRegistry namespace_users(std::span<const Corpus> corpora);

// One annotation per text carrying the more frequent label (ties -> 0),
// owned by the aggregate annotator. Texts without annotations are dropped.
Corpus majority_vote(const Corpus& corpus);

// A training or evaluation row: a text of one of the parts, its label and the
// annotator's registry index (nullopt for aggregate or unregistered users).
struct LabeledRow {
  std::uint32_t part = 0;
  std::uint32_t text = 0;
  std::optional<std::uint32_t> user;
  std::uint8_t label = 0;
};

struct LabeledSet {
  std::vector<Corpus> parts;
  std::vector<LabeledRow> rows;

  std::size_t size() const noexcept { return rows.size(); }
};

LabeledSet label_rows(std::vector<Corpus> parts, const UserRegistry& registry);

struct TrainingCorpus {
  LabeledSet examples;
  UserRegistry registry;
};

TrainingCorpus build_training_corpus(const FusionPlan& plan, const CorpusMap& corpora,
                                     const CvIteration& iteration, const FoldPlanMap& folds);

}  // namespace humorfuse
