#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "humorfuse/error.hpp"
#include "humorfuse/fusion.hpp"
#include "humorfuse/split.hpp"
#include "oracles.hpp"

using namespace humorfuse;

namespace {

Corpus one_text(const std::vector<int>& labels) {
  std::string annotations;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    annotations += R"({"text_id":"t","user_id":"u)" + std::to_string(u) + R"(","label":)" +
                   std::to_string(labels[u]) + "}\n";
  }
  DatasetDescriptor d;
  d.dataset_id = "one";
  std::istringstream t(R"({"text_id":"t","content":"c"})" "\n"), a(annotations);
  return load_dataset(d, t, a);
}

// n texts with ids prefix0..; every text annotated by users u0..u(m-1).
Corpus grid(const std::string& id, const std::string& prefix, std::size_t n, std::size_t m,
            DatasetKind kind = DatasetKind::Personalized) {
  std::vector<TextUnit> texts;
  std::vector<Annotation> annotations;
  std::vector<std::string> users;
  if (kind == DatasetKind::Generalized) {
    users.emplace_back(kAggregateAnnotator);
    m = 1;
  } else {
    for (std::size_t u = 0; u < m; ++u) users.push_back("u" + std::to_string(u));
  }
  for (std::size_t t = 0; t < n; ++t) {
    texts.push_back({prefix + std::to_string(t), "content " + std::to_string(t), std::nullopt, "en"});
    for (std::size_t u = 0; u < m; ++u) {
      const std::uint8_t label = (t + u) % 3 == 0 ? 1 : 0;
      annotations.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(u),
                             static_cast<double>(label), label});
    }
  }
  DatasetDescriptor d;
  d.dataset_id = id;
  d.kind = kind;
  return Corpus::create(d, std::move(texts), std::move(users), std::move(annotations));
}

std::set<std::pair<std::string, std::string>> training_texts(const TrainingCorpus& tc) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& r : tc.examples.rows) {
    const Corpus& p = tc.examples.parts[r.part];
    out.insert({p.id(), p.texts()[r.text].text_id});
  }
  return out;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("majority vote examples") {
  CHECK(majority_vote(one_text({1, 1, 0})).annotations()[0].label == 1);
  CHECK(majority_vote(one_text({0, 1})).annotations()[0].label == 0);
  const Corpus voted = majority_vote(one_text({1, 0, 1, 1}));
  CHECK(voted.annotations().size() == 1);
  CHECK(voted.annotators()[0] == kAggregateAnnotator);
  CHECK_FALSE(voted.personalized());
}

TEST_CASE("majority vote matches counting on every vector up to length 9") {
  for (int len = 1; len <= 9; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      std::vector<int> labels;
      std::vector<std::uint8_t> bytes;
      for (int i = 0; i < len; ++i) {
        labels.push_back((bits >> i) & 1);
        bytes.push_back(static_cast<std::uint8_t>((bits >> i) & 1));
      }
      REQUIRE(majority_vote(one_text(labels)).annotations()[0].label == oracle::majority(bytes));
    }
  }
}

TEST_CASE("majority vote keeps one annotation per annotated text") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Corpus c = oracle::random_corpus(rng);
    const Corpus v = majority_vote(c);
    std::size_t annotated = 0;
    for (const auto& g : c.annotations_by_text()) annotated += g.empty() ? 0 : 1;
    CHECK(v.texts().size() == annotated);
    CHECK(v.annotations().size() == annotated);
  }
}

TEST_CASE("namespace_users") {
  const Corpus a = grid("a", "x", 3, 2), b = grid("b", "y", 3, 2);
  const std::vector<Corpus> both{a, b};
  const UserRegistry r = namespace_users(both);
  CHECK(r.size() == 4);
  CHECK(*r.find({"a", "u1"}) != *r.find({"b", "u1"}));

  const std::vector<Corpus> single{grid("s", "x", 2, 3)};
  const UserRegistry s = namespace_users(single);
  std::set<std::uint32_t> idx;
  for (const auto& u : s.users()) idx.insert(*s.find(u));
  CHECK(idx == std::set<std::uint32_t>{0, 1, 2});
  CHECK(namespace_users(both) == r);
}

TEST_CASE("personalized single keeps exactly the train-fold annotations") {
  CorpusMap corpora{{"a", grid("a", "x", 100, 3)}};
  FoldPlanMap folds{{"a", assign_folds(corpora.at("a"), 10, 1)}};
  const FusionPlan plan{Scenario::PersonalizedSingle, {"a"}, "a"};
  const CvIteration it = cv_iteration(10, 0);
  const TrainingCorpus tc = build_training_corpus(plan, corpora, it, folds);
  CHECK(training_texts(tc).size() == 80);
  CHECK(tc.examples.rows.size() == 240);
  for (const auto& [ds, text] : training_texts(tc)) {
    const auto f = *folds.at("a").fold_of(text);
    CHECK(f != it.val_fold);
    CHECK(f != it.test_fold);
  }
  CHECK(tc.registry.size() == 3);
  for (const auto& r : tc.examples.rows) CHECK(r.user.has_value());
}

TEST_CASE("personalized multi is the disjoint union of train folds") {
  CorpusMap corpora{{"a", grid("a", "x", 50, 3)}, {"b", grid("b", "y", 40, 2)}};
  FoldPlanMap folds{{"a", assign_folds(corpora.at("a"), 10, 1)}, {"b", assign_folds(corpora.at("b"), 10, 1)}};
  const CvIteration it = cv_iteration(10, 4);
  const FusionPlan multi{Scenario::PersonalizedMulti, {"a", "b"}, "a"};
  const TrainingCorpus tc = build_training_corpus(multi, corpora, it, folds);
  std::size_t expected = 0;
  for (const char* id : {"a", "b"}) {
    expected += restrict_to_folds(corpora.at(id), folds.at(id), it.train_folds).annotations().size();
  }
  CHECK(tc.examples.rows.size() == expected);
  CHECK(tc.registry.size() == 5);
}

TEST_CASE("majority multi over one dataset equals majority single") {
  CorpusMap corpora{{"a", grid("a", "x", 30, 4)}};
  FoldPlanMap folds{{"a", assign_folds(corpora.at("a"), 5, 2)}};
  const CvIteration it = cv_iteration(5, 1);
  const auto single = build_training_corpus({Scenario::MajoritySingle, {"a"}, "a"}, corpora, it, folds);
  const auto multi = build_training_corpus({Scenario::MajorityMulti, {"a"}, "a"}, corpora, it, folds);
  REQUIRE(single.examples.rows.size() == multi.examples.rows.size());
  for (std::size_t i = 0; i < single.examples.rows.size(); ++i) {
    CHECK(single.examples.rows[i].text == multi.examples.rows[i].text);
    CHECK(single.examples.rows[i].label == multi.examples.rows[i].label);
    CHECK_FALSE(multi.examples.rows[i].user.has_value());
  }
  CHECK(single.registry.size() == 0);
}

TEST_CASE("generalized members enter whole, only in their scenario") {
  CorpusMap corpora{{"a", grid("a", "x", 30, 3)}, {"g", grid("g", "z", 12, 1, DatasetKind::Generalized)}};
  FoldPlanMap folds{{"a", assign_folds(corpora.at("a"), 5, 2)}};
  const CvIteration it = cv_iteration(5, 0);
  const auto tc =
      build_training_corpus({Scenario::MajorityGeneralizedMulti, {"a", "g"}, "a"}, corpora, it, folds);
  std::size_t from_g = 0;
  for (const auto& r : tc.examples.rows) from_g += tc.examples.parts[r.part].id() == "g";
  CHECK(from_g == 12);
  CHECK_THROWS_AS(build_training_corpus({Scenario::MajorityMulti, {"a", "g"}, "a"}, corpora, it, folds), Error);
}

TEST_CASE("plan validation") {
  CorpusMap corpora{{"a", grid("a", "x", 20, 2)}, {"b", grid("b", "y", 20, 2)},
                    {"g", grid("g", "z", 5, 1, DatasetKind::Generalized)}};
  FoldPlanMap folds{{"a", assign_folds(corpora.at("a"), 5, 0)}};
  const CvIteration it = cv_iteration(5, 0);
  auto category = [&](const FusionPlan& p) {
    try {
      build_training_corpus(p, corpora, it, folds);
    } catch (const Error& e) {
      return e.category();
    }
    FAIL("expected an error");
    return ErrorCategory::Parse;
  };
  CHECK(category({Scenario::PersonalizedSingle, {"a", "b"}, "a"}) == ErrorCategory::Validation);
  CHECK(category({Scenario::PersonalizedMulti, {"a"}, "b"}) == ErrorCategory::Validation);
  CHECK(category({Scenario::PersonalizedMulti, {"a", "missing"}, "a"}) == ErrorCategory::Reference);
  CHECK(category({Scenario::PersonalizedMulti, {"a", "b"}, "a"}) == ErrorCategory::Reference);  // no plan for b
  CHECK(category({Scenario::MajorityGeneralizedMulti, {"g"}, "g"}) == ErrorCategory::Validation);
  CHECK_THROWS_AS(parse_scenario("Personalized-multi"), Error);
  for (Scenario s : kAllScenarios) CHECK(parse_scenario(to_string(s)) == s);
}

TEST_CASE("target validation and test texts never reach training") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    CorpusMap corpora;
    corpora.emplace("t", grid("t", "x", 40 + trial, 3));
    corpora.emplace("o", grid("o", "x", 30, 2));  // same text ids, other dataset
    FoldPlanMap folds{{"t", assign_folds(corpora.at("t"), 10, rng())},
                      {"o", assign_folds(corpora.at("o"), 10, rng())}};
    for (Scenario s : {Scenario::MajoritySingle, Scenario::MajorityMulti, Scenario::PersonalizedSingle,
                       Scenario::PersonalizedMulti}) {
      const bool single = s == Scenario::MajoritySingle || s == Scenario::PersonalizedSingle;
      const FusionPlan plan{s, single ? std::vector<std::string>{"t"} : std::vector<std::string>{"t", "o"}, "t"};
      for (const auto& it : cv_iterations(10)) {
        const auto texts = training_texts(build_training_corpus(plan, corpora, it, folds));
        for (const auto& [ds, text] : texts) {
          if (ds != "t") continue;
          const auto f = *folds.at("t").fold_of(text);
          REQUIRE(f != it.val_fold);
          REQUIRE(f != it.test_fold);
        }
      }
    }
  }
}

TEST_CASE("fusion plan JSON") {
  const FusionPlan p{Scenario::MajorityGeneralizedMulti, {"a", "g"}, "a"};
  const FusionPlan back = fusion_plan_from_json(to_json(p));
  CHECK(back.scenario == p.scenario);
  CHECK(back.datasets == p.datasets);
  CHECK(back.target == p.target);
  CHECK_THROWS_AS(fusion_plan_from_json(nlohmann::json{{"scenario", "nope"}, {"datasets", {"a"}}, {"target", "a"}}),
                  Error);
}

}  // TEST_SUITE
