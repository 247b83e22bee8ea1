#include "humorfuse/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "humorfuse/error.hpp"
#include "humorfuse/metrics.hpp"
#include "humorfuse/prng.hpp"

namespace humorfuse {

using nlohmann::json;

FeatureCache::FeatureCache(const CorpusMap& corpora, const std::vector<std::string>& dataset_ids,
                           const EmbeddingProvider& provider) {
  const auto width = static_cast<Eigen::Index>(2 * provider.dim());
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<ModelInput> built;
  for (const auto& id : dataset_ids) {
    auto it = corpora.find(id);
    if (it == corpora.end()) throw Error(ErrorCategory::Reference, "unknown dataset '" + id + "'");
    auto inputs = build_model_inputs(it->second.texts(), provider);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      keys.emplace_back(id, it->second.texts()[t].text_id);
      built.push_back(std::move(inputs[t]));
    }
  }
  inputs_.resize(static_cast<Eigen::Index>(built.size()), width);
  for (std::size_t r = 0; r < built.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const auto values = built[r].concatenated();
    inputs_.row(row) = Eigen::Map<const Eigen::RowVectorXd>(values.data(), width);
    rows_.emplace(std::move(keys[r]), row);
  }
}

ExampleSet FeatureCache::examples(const LabeledSet& set) const {
  ExampleSet out;
  // Only texts that actually occur get a row.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> local;
  std::vector<Eigen::Index> source_rows;
  out.rows.reserve(set.rows.size());
  for (const LabeledRow& r : set.rows) {
    auto [it, inserted] = local.try_emplace({r.part, r.text}, static_cast<std::uint32_t>(source_rows.size()));
    if (inserted) {
      const Corpus& part = set.parts[r.part];
      auto found = rows_.find({part.id(), part.texts()[r.text].text_id});
      if (found == rows_.end()) {
        throw Error(ErrorCategory::Reference, "no features for text '" + part.texts()[r.text].text_id +
                                                  "' of dataset '" + part.id() + "'");
      }
      source_rows.push_back(found->second);
    }
    out.rows.push_back(Example{it->second, r.user, r.label});
  }
  out.inputs.resize(static_cast<Eigen::Index>(source_rows.size()), inputs_.cols());
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs_.row(source_rows[i]);
  }
  return out;
}

std::vector<double> EvalReport::scores() const {
  std::vector<double> out;
  out.reserve(folds.size());
  for (const auto& f : folds) out.push_back(f.macro_f1);
  return out;
}

namespace {

TestKind parse_test_kind(const std::string& name) {
  if (name == to_string(TestKind::StudentT)) return TestKind::StudentT;
  if (name == to_string(TestKind::MannWhitneyU)) return TestKind::MannWhitneyU;
  throw Error(ErrorCategory::Parse, "unknown test '" + name + "'");
}

json significance_json(const SignificanceResult& s) {
  return json{{"test", to_string(s.test)}, {"statistic", s.statistic}, {"p_raw", s.p_raw},
              {"p_adjusted", s.p_adjusted}, {"m", s.m}, {"note", s.note}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

json to_json(const EvalReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"iteration", f.iteration}, {"macro_f1", f.macro_f1}, {"n_test", f.n_test}});
  }
  json j{{"run_id", r.run_id},
         {"manifest_hash", r.manifest_hash},
         {"fusion", to_json(r.plan)},
         {"model", to_json(r.config)},
         {"provider", r.provider},
         {"protocol",
          {{"k", r.k},
           {"fold_rotation", "val=(i+k-2)%k,test=(i+k-1)%k"},
           {"prng", SplitMix64::kName},
           {"majority_tie", 0},
           {"threshold", 0.5}}},
         {"folds", folds},
         {"mean_macro_f1", r.mean},
         {"std_macro_f1", r.std},
         {"metadata", r.metadata}};
  if (r.baseline_run) j["baseline_run"] = *r.baseline_run;
  if (r.gain) j["gain"] = *r.gain;
  if (r.significance) j["significance"] = significance_json(*r.significance);
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.manifest_hash = j.value("manifest_hash", "");
    r.plan = fusion_plan_from_json(j.at("fusion"));
    r.config = model_config_from_json(j.at("model"));
    r.provider = j.value("provider", "");
    if (j.contains("protocol")) r.k = j["protocol"].value("k", r.k);
    for (const auto& f : j.at("folds")) {
      r.folds.push_back(FoldScore{f.at("iteration").get<std::size_t>(), f.at("macro_f1").get<double>(),
                                  f.value("n_test", std::size_t{0})});
    }
    r.mean = j.at("mean_macro_f1").get<double>();
    r.std = j.at("std_macro_f1").get<double>();
    if (j.contains("metadata")) r.metadata = j["metadata"];
    if (j.contains("baseline_run")) r.baseline_run = j["baseline_run"].get<std::string>();
    if (j.contains("gain")) r.gain = j["gain"].get<double>();
    if (j.contains("significance")) {
      const auto& s = j["significance"];
      SignificanceResult sig;
      sig.test = parse_test_kind(s.at("test").get<std::string>());
      sig.statistic = s.at("statistic").get<double>();
      sig.p_raw = s.at("p_raw").get<double>();
      sig.p_adjusted = s.at("p_adjusted").get<double>();
      sig.m = s.at("m").get<std::size_t>();
      sig.note = s.value("note", "");
      r.significance = sig;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, std::string("evaluation report: ") + e.what());
  }
  return r;
}

std::string report_csv_header() {
  return "run_id,scenario,architecture,target,mean,std,gain,test,p_adjusted,manifest_hash";
}

std::string report_csv_row(const EvalReport& r) {
  std::string row = r.run_id;
  row += ',';
  row += to_string(r.plan.scenario);
  row += ',';
  row += to_string(r.config.architecture);
  row += ',' + r.plan.target + ',' + fmt(r.mean) + ',' + fmt(r.std) + ',';
  if (r.gain) row += fmt(*r.gain);
  row += ',';
  if (r.significance) row += to_string(r.significance->test);
  row += ',';
  if (r.significance) row += fmt(r.significance->p_adjusted);
  row += ',' + r.manifest_hash;
  return row;
}

SignificanceResult compare_runs(const EvalReport& a, const EvalReport& b, std::size_t m) {
  const auto sa = a.scores();
  const auto sb = b.scores();
  return compare_samples(sa, sb, m);
}

void attach_comparison(EvalReport& run, const EvalReport& baseline, std::size_t m) {
  run.baseline_run = baseline.run_id;
  run.gain = gain(run.mean, baseline.mean);
  run.significance = compare_runs(run, baseline, m);
}

FoldPlanMap make_fold_plans(const FusionPlan& plan, const CorpusMap& corpora, std::size_t k,
                            std::uint64_t workspace_seed) {
  FoldPlanMap out;
  for (const auto& id : plan.datasets) {
    auto it = corpora.find(id);
    if (it == corpora.end()) throw Error(ErrorCategory::Reference, "unknown dataset '" + id + "'");
    if (it->second.personalized()) out.emplace(id, assign_folds(it->second, k, workspace_seed));
  }
  return out;
}

namespace {

FoldScore run_fold(const FusionPlan& plan, const ModelConfig& config, const CorpusMap& corpora,
                   const FoldPlanMap& folds, const FeatureCache& cache, const CvIteration& iter) {
  const TrainingCorpus training = build_training_corpus(plan, corpora, iter, folds);
  const Corpus& target = corpora.at(plan.target);
  SplitParts parts = materialize_split(target, folds.at(plan.target), iter);

  // Majority-trained models know no users: evaluation rows take the fallback path.
  const UserRegistry none;
  const UserRegistry& lookup = is_majority(plan.scenario) ? none : training.registry;
  const LabeledSet val = label_rows({std::move(parts.val)}, lookup);
  const LabeledSet test = label_rows({std::move(parts.test)}, lookup);
  if (test.rows.empty()) {
    throw Error(ErrorCategory::Degenerate, "empty test fold " + std::to_string(iter.test_fold));
  }

  const ExampleSet train_set = cache.examples(training.examples);
  const ExampleSet val_set = cache.examples(val);
  const ExampleSet test_set = cache.examples(test);

  ModelConfig fold_config = config;
  fold_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(iter.index));
  const TrainedModel model = train(fold_config, train_set, val_set, training.registry);
  const auto predicted = predict(model, test_set);
  const auto truth = test_set.labels();
  return FoldScore{iter.index, macro_f1(truth, predicted), test_set.size()};
}

}  // namespace

EvalReport evaluate_experiment(const FusionPlan& plan, const ModelConfig& config,
                               const CorpusMap& corpora, const FoldPlanMap& folds,
                               const EmbeddingProvider& provider, const ExperimentOptions& options) {
  validate_plan(plan, corpora);
  validate(config);
  if (config.input_dim != 2 * provider.dim()) {
    throw Error(ErrorCategory::Validation,
                "model input_dim " + std::to_string(config.input_dim) + " does not match provider '" +
                    provider.describe() + "' (expected " + std::to_string(2 * provider.dim()) + ")");
  }
  auto target_plan = folds.find(plan.target);
  if (target_plan == folds.end()) {
    throw Error(ErrorCategory::Reference, "no fold plan for target '" + plan.target + "'");
  }
  const std::size_t k = target_plan->second.k();
  for (const auto& [id, fp] : folds) {
    if (fp.k() != k) throw Error(ErrorCategory::Validation, "fold plans disagree on k");
  }

  std::vector<std::size_t> schedule = options.iterations;
  if (schedule.empty()) {
    for (std::size_t i = 0; i < k; ++i) schedule.push_back(i);
  }
  for (std::size_t i : schedule) {
    if (i >= k) throw Error(ErrorCategory::Validation, "iteration " + std::to_string(i) + " out of range");
  }

  const FeatureCache cache(corpora, plan.datasets, provider);

  std::vector<FoldScore> scores(schedule.size());
  std::vector<std::exception_ptr> errors(schedule.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t slot;
      {
        std::lock_guard lock(mu);
        if (next == schedule.size()) return;
        slot = next++;
      }
      try {
        scores[slot] = run_fold(plan, config, corpora, folds, cache, cv_iteration(k, schedule[slot]));
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, schedule.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  for (std::size_t s = 0; s < schedule.size(); ++s) {
    if (!errors[s]) continue;
    try {
      std::rethrow_exception(errors[s]);
    } catch (const Error& e) {
      throw Error(e.category(), "fold " + std::to_string(schedule[s]) + ": " + e.what());
    }
  }

  EvalReport report;
  report.run_id = options.run_id;
  report.plan = plan;
  report.config = config;
  report.provider = provider.describe();
  report.k = k;
  report.folds = std::move(scores);
  const auto values = report.scores();
  report.mean = mean(values);
  report.std = sample_std(values);
  return report;
}

}  // namespace humorfuse
