#include "humorfuse/fusion.hpp"

#include <algorithm>

#include "humorfuse/error.hpp"

namespace humorfuse {

using nlohmann::json;

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::MajoritySingle: return "majority_single";
    case Scenario::MajorityMulti: return "majority_multi";
    case Scenario::MajorityGeneralizedMulti: return "majority_generalized_multi";
    case Scenario::PersonalizedSingle: return "personalized_single";
    case Scenario::PersonalizedMulti: return "personalized_multi";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  std::string allowed;
  for (Scenario s : kAllScenarios) {
    if (to_string(s) == name) return s;
    if (!allowed.empty()) allowed += ", ";
    allowed += to_string(s);
  }
  throw Error(ErrorCategory::Validation,
              "unknown scenario '" + std::string(name) + "' (allowed: " + allowed + ")");
}

bool is_majority(Scenario scenario) {
  return scenario == Scenario::MajoritySingle || scenario == Scenario::MajorityMulti ||
         scenario == Scenario::MajorityGeneralizedMulti;
}

json to_json(const FusionPlan& plan) {
  return json{{"scenario", to_string(plan.scenario)},
              {"datasets", plan.datasets},
              {"target", plan.target}};
}

FusionPlan fusion_plan_from_json(const json& j) {
  FusionPlan plan;
  try {
    plan.scenario = parse_scenario(j.at("scenario").get<std::string>());
    plan.datasets = j.at("datasets").get<std::vector<std::string>>();
    plan.target = j.at("target").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("fusion plan: ") + e.what());
  }
  return plan;
}

void validate_plan(const FusionPlan& plan, const CorpusMap& corpora) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCategory::Validation,
                "fusion plan (" + std::string(to_string(plan.scenario)) + "): " + why);
  };
  if (plan.datasets.empty()) fail("no member datasets");
  if (std::find(plan.datasets.begin(), plan.datasets.end(), plan.target) == plan.datasets.end()) {
    fail("target '" + plan.target + "' is not a member");
  }
  for (std::size_t i = 0; i < plan.datasets.size(); ++i) {
    const auto& id = plan.datasets[i];
    if (std::find(plan.datasets.begin(), plan.datasets.begin() + i, id) !=
        plan.datasets.begin() + i) {
      fail("dataset '" + id + "' listed twice");
    }
    auto it = corpora.find(id);
    if (it == corpora.end()) {
      throw Error(ErrorCategory::Reference, "fusion plan: unknown dataset '" + id + "'");
    }
    if (!it->second.personalized() && plan.scenario != Scenario::MajorityGeneralizedMulti) {
      fail("generalized dataset '" + id + "' is only admitted by majority_generalized_multi");
    }
  }
  if (!corpora.at(plan.target).personalized()) fail("target must be a personalized dataset");
  const bool single = plan.scenario == Scenario::MajoritySingle ||
                      plan.scenario == Scenario::PersonalizedSingle;
  if (single && plan.datasets.size() != 1) fail("single-dataset scenario lists several datasets");
}

std::uint32_t UserRegistry::add(const GlobalUserId& user) {
  auto [it, inserted] = index_.emplace(user, static_cast<std::uint32_t>(users_.size()));
  if (inserted) users_.push_back(user);
  return it->second;
}

std::optional<std::uint32_t> UserRegistry::find(const GlobalUserId& user) const {
  auto it = index_.find(user);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UserRegistry namespace_users(std::span<const Corpus> corpora) {
  UserRegistry registry;
  for (const Corpus& c : corpora) {
    if (!c.personalized()) continue;
    for (const auto& local : c.annotators()) registry.add({c.id(), local});
  }
  return registry;
}

Corpus majority_vote(const Corpus& corpus) {
  if (!corpus.personalized()) {
    throw Error(ErrorCategory::Validation, corpus.id() + ": majority vote needs a personalized corpus");
  }
  std::vector<std::size_t> ones(corpus.texts().size(), 0);
  std::vector<std::size_t> totals(corpus.texts().size(), 0);
  for (const Annotation& a : corpus.annotations()) {
    ++totals[a.text];
    ones[a.text] += a.label;
  }

  DatasetDescriptor descriptor = corpus.descriptor();
  descriptor.kind = DatasetKind::Generalized;
  std::vector<TextUnit> texts;
  std::vector<Annotation> votes;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    if (totals[i] == 0) continue;
    const std::uint8_t label = 2 * ones[i] > totals[i] ? 1 : 0;
    votes.push_back(Annotation{static_cast<std::uint32_t>(texts.size()), 0,
                               static_cast<double>(label), label});
    texts.push_back(corpus.texts()[i]);
  }
  return Corpus::create(std::move(descriptor), std::move(texts),
                        {std::string(kAggregateAnnotator)}, std::move(votes));
}

LabeledSet label_rows(std::vector<Corpus> parts, const UserRegistry& registry) {
  LabeledSet set;
  set.parts = std::move(parts);
  for (std::size_t p = 0; p < set.parts.size(); ++p) {
    const Corpus& c = set.parts[p];
    std::vector<std::optional<std::uint32_t>> users(c.annotators().size());
    if (c.personalized()) {
      for (std::size_t u = 0; u < users.size(); ++u) {
        users[u] = registry.find({c.id(), c.annotators()[u]});
      }
    }
    for (const Annotation& a : c.annotations()) {
      set.rows.push_back(
          LabeledRow{static_cast<std::uint32_t>(p), a.text, users[a.annotator], a.label});
    }
  }
  return set;
}

TrainingCorpus build_training_corpus(const FusionPlan& plan, const CorpusMap& corpora,
                                     const CvIteration& iteration, const FoldPlanMap& folds) {
  validate_plan(plan, corpora);

  std::vector<Corpus> parts;
  for (const auto& id : plan.datasets) {
    const Corpus& corpus = corpora.at(id);
    if (!corpus.personalized()) {
      // Generalized members are never evaluated, so they enter whole.
      parts.push_back(corpus);
      continue;
    }
    auto plan_it = folds.find(id);
    if (plan_it == folds.end()) {
      throw Error(ErrorCategory::Reference, "missing fold plan for dataset '" + id + "'");
    }
    Corpus train = restrict_to_folds(corpus, plan_it->second, iteration.train_folds);
    parts.push_back(is_majority(plan.scenario) ? majority_vote(train) : std::move(train));
  }

  TrainingCorpus out;
  out.registry = namespace_users(parts);
  out.examples = label_rows(std::move(parts), out.registry);
  return out;
}

}  // namespace humorfuse
