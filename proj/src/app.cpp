#include "humorfuse/app.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "humorfuse/corpus.hpp"
#include "humorfuse/embed.hpp"
#include "humorfuse/error.hpp"
#include "humorfuse/experiment.hpp"
#include "humorfuse/manifest.hpp"
#include "humorfuse/report.hpp"
#include "humorfuse/split.hpp"
#include "humorfuse/synth.hpp"
#include "json.hpp"

namespace humorfuse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCategory::Io, "cannot open '" + p.string() + "'");
  return in;
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << content)) throw Error(ErrorCategory::Io, "cannot write '" + p.string() + "'");
}

json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, "'" + p.string() + "': " + e.what());
  }
}

RunManifest require_manifest(const Globals& g) {
  if (g.manifest.empty()) throw Error(ErrorCategory::Validation, "--manifest is required");
  RunManifest m = load_manifest(g.manifest);
  if (g.seed) {
    m.seed = *g.seed;
    m.model.seed = *g.seed;
  }
  return m;
}

fs::path output_dir(const Globals& g, const RunManifest* m, const std::string& fallback) {
  if (!g.out.empty()) return g.out;
  if (m) return resolve(*m, m->output_dir);
  return fallback;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- ingest ----

struct IngestArgs {
  std::string texts, annotations, descriptor;
};

void cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out) {
  DatasetDescriptor d;
  try {
    d = descriptor_from_json(read_json(a.descriptor));
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::Parse, "descriptor: " + std::string(e.what()));
  }
  auto texts = open_in(a.texts);
  auto annotations = open_in(a.annotations);
  const Corpus corpus = load_dataset(d, texts, annotations);
  const fs::path dir = output_dir(g, nullptr, ".") / corpus.id();
  write_archive(corpus, dir);
  const std::string csv = stats_csv_header() + "\n" + stats_csv_row(d, corpus_stats(corpus)) + "\n";
  write_file(dir / "stats.csv", csv);
  out << csv;
}

// ---- stats ----

void cmd_stats(const Globals& g, const std::vector<std::string>& archives, std::ostream& out) {
  std::vector<Corpus> corpora;
  std::optional<RunManifest> m;
  if (archives.empty()) {
    m = require_manifest(g);
    for (auto& [_, c] : load_corpora(*m)) corpora.push_back(std::move(c));
  }
  for (const auto& a : archives) corpora.push_back(read_archive(a));
  std::string csv = stats_csv_header() + "\n";
  for (const auto& c : corpora) csv += stats_csv_row(c.descriptor(), corpus_stats(c)) + "\n";
  if (!g.out.empty()) write_file(fs::path(g.out) / "stats.csv", csv);
  out << csv;
}

// ---- split ----

void cmd_split(const Globals& g, const std::vector<std::string>& archives, std::optional<std::size_t> k_flag,
               std::ostream& out) {
  std::vector<Corpus> corpora;
  std::optional<RunManifest> m;
  std::size_t k = kDefaultFolds;
  std::uint64_t seed = g.seed.value_or(0);
  if (archives.empty()) {
    m = require_manifest(g);
    k = m->k;
    seed = m->seed;
    for (auto& [_, c] : load_corpora(*m)) corpora.push_back(std::move(c));
  }
  for (const auto& a : archives) corpora.push_back(read_archive(a));
  if (k_flag) k = *k_flag;

  const fs::path dir = output_dir(g, m ? &*m : nullptr, ".") / "folds";
  json summary = json::array();
  for (const auto& c : corpora) {
    if (!c.personalized()) continue;
    const FoldPlan plan = assign_folds(c, k, seed);
    std::ostringstream buf;
    write_fold_plan(plan, buf);
    write_file(dir / (c.id() + ".jsonl"), buf.str());
    summary.push_back({{"dataset_id", c.id()}, {"k", k}, {"fold_sizes", plan.fold_sizes()}});
  }
  out << summary.dump() << '\n';
}

// ---- fuse ----

void cmd_fuse(const Globals& g, std::size_t iteration, std::ostream& out) {
  const RunManifest m = require_manifest(g);
  const CorpusMap corpora = load_corpora(m);
  const FoldPlanMap folds = make_fold_plans(m.plan, corpora, m.k, m.seed);
  if (iteration >= m.k) throw Error(ErrorCategory::Validation, "--iteration out of range");
  const TrainingCorpus tc = build_training_corpus(m.plan, corpora, cv_iteration(m.k, iteration), folds);

  std::string rows;
  for (const auto& r : tc.examples.rows) {
    const Corpus& part = tc.examples.parts[r.part];
    json j{{"dataset_id", part.id()}, {"text_id", part.texts()[r.text].text_id}, {"label", r.label}};
    if (r.user) {
      const auto& u = tc.registry.users()[*r.user];
      j["user"] = {{"dataset_id", u.dataset_id}, {"user_id", u.local_id}, {"index", *r.user}};
    } else {
      j["user"] = nullptr;
    }
    rows += j.dump() + "\n";
  }
  const fs::path path = output_dir(g, &m, ".") / ("fused_" + std::to_string(iteration) + ".jsonl");
  write_file(path, rows);
  out << json{{"scenario", to_string(m.plan.scenario)},
              {"iteration", iteration},
              {"rows", tc.examples.rows.size()},
              {"users", tc.registry.size()},
              {"path", path.string()}}
             .dump()
      << '\n';
}

// ---- synth ----

struct SynthArgs {
  std::string spec_path;
  std::optional<std::size_t> users, texts, per_text, split_count;
  std::optional<double> subjectivity, noise;
  std::optional<std::string> prefix;
  bool paired = false;
};

void cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  if (!a.spec_path.empty()) spec = synthetic_spec_from_json(read_json(a.spec_path));
  if (a.users) spec.n_users = *a.users;
  if (a.texts) spec.n_texts = *a.texts;
  if (a.per_text) spec.annotations_per_text = *a.per_text;
  if (a.split_count) spec.split_count = *a.split_count;
  if (a.subjectivity) spec.subjectivity = *a.subjectivity;
  if (a.noise) spec.noise = *a.noise;
  if (a.prefix) spec.dataset_prefix = *a.prefix;
  if (a.paired) spec.paired_content = true;
  if (g.seed) spec.seed = *g.seed;

  const SyntheticData data = generate(spec);
  const fs::path dir = output_dir(g, nullptr, "synth");
  json ids = json::array();
  for (const auto& c : data.corpora) {
    write_archive(c, dir / c.id());
    ids.push_back(c.id());
  }
  std::ostringstream truth;
  write_ground_truth(data.truth, truth);
  write_file(dir / "ground_truth.jsonl", truth.str());
  write_file(dir / "synth_spec.json", to_json(spec).dump(2) + "\n");
  out << json{{"datasets", ids}, {"out", dir.string()}}.dump() << '\n';
}

// ---- experiment ----

struct ExperimentArgs {
  std::optional<std::string> scenario, architecture, run_id, compare;
  std::size_t comparisons = 1;
  std::vector<std::size_t> iterations;
};

void cmd_experiment(const Globals& g, const ExperimentArgs& a, std::ostream& out) {
  RunManifest m = require_manifest(g);
  if (a.scenario) m.plan.scenario = parse_scenario(*a.scenario);
  if (a.architecture) m.model.architecture = parse_architecture(*a.architecture);
  if (a.run_id) m.run_id = *a.run_id;

  const auto provider = make_provider(m.provider);
  if (!m.input_dim_explicit) m.model.input_dim = 2 * provider->dim();

  const CorpusMap corpora = load_corpora(m);
  const FoldPlanMap folds = make_fold_plans(m.plan, corpora, m.k, m.seed);

  ExperimentOptions options;
  options.run_id = m.run_id;
  options.jobs = g.jobs;
  options.iterations = a.iterations;
  EvalReport report = evaluate_experiment(m.plan, m.model, corpora, folds, *provider, options);
  report.manifest_hash = manifest_hash(m);
  report.metadata = {{"created_at", utc_now()}};

  if (a.compare) {
    const EvalReport baseline = report_from_json(read_json(*a.compare));
    attach_comparison(report, baseline, a.comparisons);
  }

  const fs::path dir = output_dir(g, &m, ".");
  const fs::path json_path = dir / (m.run_id + ".json");
  write_file(json_path, to_json(report).dump(2) + "\n");
  write_file(dir / (m.run_id + ".csv"), report_csv_header() + "\n" + report_csv_row(report) + "\n");
  write_file(dir / "manifests" / (m.run_id + ".json"), to_json(m).dump(2) + "\n");
  out << json{{"run_id", m.run_id},
              {"mean_macro_f1", report.mean},
              {"std_macro_f1", report.std},
              {"report", json_path.string()}}
             .dump()
      << '\n';
}

// ---- report ----

void cmd_report(const Globals& g, const std::vector<std::string>& paths, bool facet, std::ostream& out) {
  std::vector<EvalReport> reports;
  for (const auto& p : paths) reports.push_back(report_from_json(read_json(p)));
  const ReportArtifacts art = render_report(reports, facet);
  const fs::path dir = output_dir(g, nullptr, ".");
  write_file(dir / "report.csv", art.csv);
  write_file(dir / "report.svg", art.svg);
  out << art.csv;
}

void emit_error(std::ostream& err, std::string_view category, const std::string& message,
                std::optional<std::size_t> line = std::nullopt) {
  json e{{"category", category}, {"message", message}};
  if (line) e["line"] = *line;
  err << json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Humor-recognition data fusion experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--manifest", g.manifest, "Run manifest (JSON)");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Parallel folds")->check(CLI::PositiveNumber);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and write an archive plus stats CSV");
  ingest->add_option("--texts", ingest_args.texts)->required();
  ingest->add_option("--annotations", ingest_args.annotations)->required();
  ingest->add_option("--descriptor", ingest_args.descriptor)->required();

  std::vector<std::string> stats_archives;
  auto* stats = app.add_subcommand("stats", "Dataset statistics CSV");
  stats->add_option("archives", stats_archives, "Archive directories (default: manifest datasets)");

  std::vector<std::string> split_archives;
  std::optional<std::size_t> split_k;
  auto* split = app.add_subcommand("split", "Write seeded k-fold plans");
  split->add_option("archives", split_archives);
  split->add_option("--k", split_k)->check(CLI::Range(3, 1000));

  std::size_t fuse_iteration = 0;
  auto* fuse = app.add_subcommand("fuse", "Write the fused training set of one CV iteration");
  fuse->add_option("--iteration", fuse_iteration);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate synthetic personalized datasets");
  synth->add_option("--spec", synth_args.spec_path, "SyntheticSpec JSON");
  synth->add_option("--users", synth_args.users);
  synth->add_option("--texts", synth_args.texts);
  synth->add_option("--annotations-per-text", synth_args.per_text);
  synth->add_option("--subjectivity", synth_args.subjectivity);
  synth->add_option("--noise", synth_args.noise);
  synth->add_option("--split-count", synth_args.split_count);
  synth->add_option("--prefix", synth_args.prefix);
  synth->add_flag("--paired", synth_args.paired);

  ExperimentArgs exp_args;
  auto* experiment = app.add_subcommand("experiment", "Cross-validated evaluation of a manifest");
  experiment->add_option("--scenario", exp_args.scenario);
  experiment->add_option("--architecture", exp_args.architecture);
  experiment->add_option("--run-id", exp_args.run_id);
  experiment->add_option("--compare", exp_args.compare, "Baseline report JSON");
  experiment->add_option("--comparisons", exp_args.comparisons, "Bonferroni m")->check(CLI::PositiveNumber);
  experiment->add_option("--iterations", exp_args.iterations, "Subset of CV iterations")->delimiter(',');

  std::vector<std::string> report_paths;
  bool facet = false;
  auto* report = app.add_subcommand("report", "CSV table and SVG chart from report JSON files");
  report->add_option("reports", report_paths)->required();
  report->add_flag("--facet", facet, "One panel per target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (ingest->parsed()) cmd_ingest(g, ingest_args, out);
    else if (stats->parsed()) cmd_stats(g, stats_archives, out);
    else if (split->parsed()) cmd_split(g, split_archives, split_k, out);
    else if (fuse->parsed()) cmd_fuse(g, fuse_iteration, out);
    else if (synth->parsed()) cmd_synth(g, synth_args, out);
    else if (experiment->parsed()) cmd_experiment(g, exp_args, out);
    else if (report->parsed()) cmd_report(g, report_paths, facet, out);
  } catch (const Error& e) {
    emit_error(err, to_string(e.category()), e.what(), e.line());
    return 2;
  } catch (const fs::filesystem_error& e) {
    emit_error(err, to_string(ErrorCategory::Io), e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what());
    return 2;
  }
  return 0;
}

}  // namespace humorfuse
