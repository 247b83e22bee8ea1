#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "humorfuse/embed.hpp"
#include "humorfuse/fusion.hpp"
#include "humorfuse/models.hpp"
#include "humorfuse/significance.hpp"
#include "humorfuse/split.hpp"
#include "json.hpp"

namespace humorfuse {

// Model inputs for every text of a set of corpora, computed once and shared
// by all folds.
class FeatureCache {
 public:
  FeatureCache(const CorpusMap& corpora, const std::vector<std::string>& dataset_ids,
               const EmbeddingProvider& provider);

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }

  // Featurizes a labeled set whose parts are (subsets of) the cached corpora.
  ExampleSet examples(const LabeledSet& set) const;

 private:
  Eigen::MatrixXd inputs_;
  std::map<std::pair<std::string, std::string>, Eigen::Index> rows_;
};

struct FoldScore {
  std::size_t iteration = 0;
  double macro_f1 = 0.0;
  std::size_t n_test = 0;
};

struct EvalReport {
  std::string run_id;
  std::string manifest_hash;
  FusionPlan plan;
  ModelConfig config;
  std::string provider;
  std::size_t k = kDefaultFolds;
  std::vector<FoldScore> folds;
  double mean = 0.0;
  double std = 0.0;  // sample (n-1)
  std::optional<std::string> baseline_run;
  std::optional<double> gain;
  std::optional<SignificanceResult> significance;
  nlohmann::json metadata = nlohmann::json::object();  // timestamps; excluded from determinism checks

  std::vector<double> scores() const;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// run_id,scenario,architecture,target,mean,std,gain,test,p_adjusted,manifest_hash
std::string report_csv_header();
std::string report_csv_row(const EvalReport& report);

// Significance of a against b over fold scores, Bonferroni-adjusted with m.
SignificanceResult compare_runs(const EvalReport& a, const EvalReport& b, std::size_t m);

// Sets gain (a.mean - baseline.mean) and significance on run.
void attach_comparison(EvalReport& run, const EvalReport& baseline, std::size_t m);

struct ExperimentOptions {
  std::string run_id = "run";
  std::size_t jobs = 1;
  // Subset of CV iterations to run; empty means the full schedule.
  std::vector<std::size_t> iterations;
};

// Per CV iteration: fuse the training set, train, and score macro F1 on the
// target's test-fold annotations (one prediction per annotation).
EvalReport evaluate_experiment(const FusionPlan& plan, const ModelConfig& config,
                               const CorpusMap& corpora, const FoldPlanMap& folds,
                               const EmbeddingProvider& provider,
                               const ExperimentOptions& options = {});

// Fold plans for every personalized member of the plan.
FoldPlanMap make_fold_plans(const FusionPlan& plan, const CorpusMap& corpora, std::size_t k,
                            std::uint64_t workspace_seed);

}  // namespace humorfuse
