#pragma once

#include <unistd.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "udabench/analysis/analysis.hpp"
#include "udabench/datasets/matrix_io.hpp"
#include "udabench/harness/reverse_trainer.hpp"
#include "udabench/harness/search.hpp"

namespace udabench::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kBadInput = 3, kNumeric = 4 };

inline constexpr const char* kSeedEnv = "UDA_BENCH_SEED";

/// --seed wins, then UDA_BENCH_SEED, then 0.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [p, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || p != end) throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer: " + env);
  return v;
}

/// Results are written into a sibling staging directory and renamed into
/// place on success, so `out` either does not exist or is complete.
class OutputDir {
 public:
  explicit OutputDir(const std::string& out) : final_(out) {
    if (out.empty()) throw ConfigError("--out must not be empty");
    if (fs::exists(final_) && !(fs::is_directory(final_) && fs::is_empty(final_))) {
      throw ConfigError("output directory " + out + " already exists and is not empty");
    }
    const fs::path parent = fs::absolute(final_).parent_path();
    fs::create_directories(parent);
    staging_ = parent / (final_.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;
  ~OutputDir() {
    if (!committed_) logging::warn("incomplete results left in " + staging_.string());
  }

  std::string path(const std::string& name) const { return (staging_ / name).string(); }

  void commit() {
    if (fs::exists(final_)) {
      if (!(fs::is_directory(final_) && fs::is_empty(final_))) {
        throw InputError("output directory " + final_.string() + " appeared while running");
      }
      fs::remove(final_);
    }
    fs::rename(staging_, final_);
    committed_ = true;
  }

  const fs::path& final_path() const { return final_; }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

inline void write_json(const std::string& path, const nlohmann::json& j) { analysis::write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(analysis::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string pct(double v) { return analysis::fmt_num(100.0 * v, 1) + "%"; }

// ---------------------------------------------------------------------------
// Shared trial options: a --config file mirrors TrialConfig; flags override it.

struct TrialFlags {
  std::string config;
  std::optional<std::size_t> epochs, patience, val_interval, batch, dev_epochs;
  std::optional<double> dev_lr, snd_tau;
  std::string validators, selection, feature_layer;
  std::optional<std::size_t> so_epochs, so_patience;
  std::optional<double> so_lr;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON file with TrialConfig fields (flags override it)");
    app.add_option("--epochs", epochs, "epoch budget per trial");
    app.add_option("--patience", patience, "early-stopping patience in checkpoints");
    app.add_option("--val-interval", val_interval, "epochs between checkpoints");
    app.add_option("--batch", batch, "batch size per domain");
    app.add_option("--validators", validators, "comma-separated validators to score");
    app.add_option("--selection", selection, "validator driving early stopping");
    app.add_option("--feature-layer", feature_layer, "FL0, FL6 or FL8");
    app.add_option("--dev-epochs", dev_epochs, "DEV domain-classifier epochs");
    app.add_option("--dev-lr", dev_lr, "DEV domain-classifier learning rate");
    app.add_option("--snd-tau", snd_tau, "SND temperature");
    app.add_option("--source-only-epochs", so_epochs, "source-only warm-start epoch cap");
    app.add_option("--source-only-patience", so_patience, "source-only warm-start patience");
    app.add_option("--source-only-lr", so_lr, "source-only warm-start learning rate");
  }

  harness::TrialConfig apply(harness::TrialConfig c) const {
    if (!config.empty()) c = harness::trial_config_from_json(read_json_file(config), c);
    if (epochs) c.budget.epochs = *epochs;
    if (patience) c.budget.patience = *patience;
    if (val_interval) c.budget.val_interval = *val_interval;
    if (batch) c.budget.batch = *batch;
    if (!validators.empty()) c.validators = split_list(validators);
    if (!selection.empty()) c.selection = selection;
    if (!feature_layer.empty()) c.feature_layer = models::parse_feature_layer(feature_layer);
    if (dev_epochs) c.validator_options.dev_epochs = *dev_epochs;
    if (dev_lr) c.validator_options.dev_lr = *dev_lr;
    if (snd_tau) c.validator_options.snd_tau = *snd_tau;
    return c;
  }

  harness::SourceOnlyOptions source_only(harness::SourceOnlyOptions so = {}) const {
    if (so_epochs) so.epochs = *so_epochs;
    if (so_patience) so.patience = *so_patience;
    if (so_lr) so.lr = *so_lr;
    return so;
  }
};

inline nlohmann::json to_json(const harness::SourceOnlyOptions& so) {
  return {{"epochs", so.epochs}, {"patience", so.patience}, {"lr", so.lr}, {"batch", so.batch}};
}

inline harness::SourceOnlyOptions source_only_from_json(const nlohmann::json& j, harness::SourceOnlyOptions so = {}) {
  so.epochs = j.value("epochs", so.epochs);
  so.patience = j.value("patience", so.patience);
  so.lr = j.value("lr", so.lr);
  so.batch = j.value("batch", so.batch);
  return so;
}

/// Checks everything about a search config that does not depend on sampled
/// values, before any training starts.
inline void prevalidate(harness::TrialConfig c, const std::string& algorithm) {
  auto parsed = algorithms::parse_algorithm(algorithm);
  c.algorithm.algorithm = parsed.algorithm;
  c.algorithm.with_dann = parsed.with_dann;
  if (parsed.with_dann && c.algorithm.dann.empty()) c.algorithm.dann = harness::default_frozen_dann();
  Rng probe(0);
  auto hp = harness::sample_hyperparams(harness::SearchSpace::for_algorithm(parsed.algorithm), probe);
  c.lr_max = hp.at("lr");
  hp.erase("lr");
  c.algorithm.hparams = hp;
  c.validate();
  data::parse_task(c.task);
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
  std::string task, algorithm, out;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool wallclock = false;
  TrialFlags trial;
};

inline nlohmann::json selection_json(const harness::Selection& s, const harness::SearchResult& r) {
  return {{"trial_id", r.records[s.trial].trial_id},
          {"checkpoint", s.checkpoint},
          {"epoch", r.records[s.trial].checkpoints[s.checkpoint].epoch},
          {"score", s.score.value},
          {"src_val_acc", s.src_val_acc},
          {"tgt_train_acc", s.tgt_train_acc},
          {"tgt_val_acc", s.tgt_val_acc}};
}

inline int cmd_search(const SearchArgs& a, std::ostream& out) {
  harness::SearchOptions opt;
  opt.base = a.trial.apply({});
  if (!a.task.empty()) opt.base.task = a.task;
  const std::string algorithm = a.algorithm.empty() ? opt.base.algorithm.name() : a.algorithm;
  if (a.algorithm.empty() && a.trial.config.empty()) throw ConfigError("--algorithm is required");
  opt.n_trials = a.trials;
  opt.master_seed = resolve_seed(a.seed);
  opt.workers = a.workers;
  opt.record_wallclock = a.wallclock;
  opt.source_only = a.trial.source_only();
  if (opt.n_trials == 0) throw ConfigError("--trials must be at least 1");
  prevalidate(opt.base, algorithm);
  const auto parsed = algorithms::parse_algorithm(algorithm);
  opt.base.algorithm.algorithm = parsed.algorithm;
  opt.base.algorithm.with_dann = parsed.with_dann;
  opt.base.algorithm.hparams.clear();
  if (!parsed.with_dann) opt.base.algorithm.dann.clear();
  if (parsed.with_dann && opt.base.algorithm.dann.empty()) opt.base.algorithm.dann = harness::default_frozen_dann();

  OutputDir dir(a.out);
  const std::string records = dir.path("records.jsonl");
  nlohmann::json manifest = {{"command", "search"},
                             {"task", opt.base.task},
                             {"algorithm", algorithm},
                             {"trials", opt.n_trials},
                             {"seed", opt.master_seed},
                             {"workers", opt.workers},
                             {"config", harness::to_json(opt.base)},
                             {"source_only", to_json(opt.source_only)},
                             {"outputs", {"records.jsonl", "best.json"}}};
  write_json(dir.path("manifest.json"), manifest);
  logging::info("search: " + algorithm + " on " + opt.base.task + ", " + std::to_string(opt.n_trials) +
                " trials, seed " + std::to_string(opt.master_seed));
  const auto res = harness::random_search(algorithm, opt.base.task, opt,
                                          [&](const harness::TrialRecord& r) { harness::append_record(records, r); });

  nlohmann::json best = nlohmann::json::object();
  for (const auto& [v, s] : res.best) best[v] = selection_json(s, res);
  write_json(dir.path("best.json"), best);
  dir.commit();

  const auto& ref = res.reference.checkpoints.front();
  out << "source-only: src-val " << pct(ref.src_val_acc) << ", tgt-val " << pct(ref.tgt_val_acc) << "\n";
  for (const auto& v : opt.base.validators) {
    auto it = res.best.find(v);
    if (it == res.best.end()) {
      out << v << ": no valid score\n";
      continue;
    }
    const auto& s = it->second;
    out << v << ": " << res.records[s.trial].trial_id << " checkpoint " << s.checkpoint << ", tgt-val "
        << pct(s.tgt_val_acc) << ", tgt-train " << pct(s.tgt_train_acc) << "\n";
  }
  out << "records: " << (dir.final_path() / "records.jsonl").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::vector<std::string> records;
  std::string out;
  std::string threshold = "none";
};

inline std::vector<harness::TrialRecord> load_all(const std::vector<std::string>& paths) {
  std::vector<harness::TrialRecord> all;
  for (const auto& p : paths) {
    auto r = harness::load_records(p);
    all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return all;
}

/// Non-oracle validators present in the data: known ones first, in their
/// canonical order, then any others alphabetically.
inline std::vector<std::string> validators_in(const std::vector<analysis::Observation>& obs) {
  std::set<std::string> seen;
  for (const auto& o : obs)
    for (const auto& [k, s] : o.scores) seen.insert(k);
  std::vector<std::string> out;
  for (const auto& k : harness::known_validators()) {
    if (k != "oracle" && seen.erase(k)) out.push_back(k);
  }
  seen.erase("oracle");
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

inline std::string short_num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto d = analysis::flatten(load_all(a.records));
  if (d.observations.empty()) throw InputError("no trial checkpoints in the records");
  for (const auto& o : d.observations) {
    if (!d.references.count(o.task)) throw InputError("records lack a source-only reference for task " + o.task);
  }
  const auto so = analysis::source_only_accuracies(d.references);
  const auto vals = validators_in(d.observations);
  if (vals.empty()) throw InputError("records carry no validator scores");

  const double derived = analysis::derive_threshold(d);
  double thr = 0.0;
  if (a.threshold == "derive") {
    thr = derived;
  } else if (a.threshold != "none") {
    try {
      std::size_t used = 0;
      thr = std::stod(a.threshold, &used);
      if (used != a.threshold.size()) throw std::invalid_argument(a.threshold);
    } catch (const std::logic_error&) {
      throw ConfigError("--threshold must be none, derive or a number, got '" + a.threshold + "'");
    }
  }
  std::vector<analysis::GapSetting> settings = {analysis::no_threshold()};
  if (thr > 0.0) settings.push_back(analysis::threshold_setting(thr));

  OutputDir dir(a.out);
  std::vector<std::string> outputs;
  auto put = [&](const std::string& name, const analysis::Table& t, analysis::Format f) {
    analysis::emit(t, f, dir.path(name));
    outputs.push_back(name);
  };

  const auto n = analysis::normalize(d.observations, so, vals);
  for (auto axis : {analysis::Axis::source, analysis::Axis::target}) {
    for (const auto& v : vals) {
      put("correlation_" + analysis::to_string(axis) + "_" + v + ".csv",
          analysis::curve_plot_data(analysis::correlation_vs_threshold(n, v, axis)), analysis::Format::plot_data);
    }
  }
  const auto gap = analysis::render_gap_table(analysis::gap_table(d.observations, so, vals, settings));
  const auto gap_algo =
      analysis::render_gap_tables(analysis::gap_table_per_algorithm(d.observations, so, vals, settings));
  const auto mm = analysis::render_macro_micro(analysis::macro_micro_table(d.observations, d.references));
  for (auto [ext, f] : {std::pair{".csv", analysis::Format::csv}, std::pair{".md", analysis::Format::markdown}}) {
    put(std::string("gap_table") + ext, gap, f);
    put(std::string("gap_table_per_algorithm") + ext, gap_algo, f);
    put(std::string("macro_micro") + ext, mm, f);
  }
  analysis::write_text(dir.path("threshold.txt"), short_num(derived) + "\n");
  outputs.push_back("threshold.txt");

  nlohmann::json norm = {{"dropped_invalid", n.dropped}, {"degenerate", nlohmann::json::array()}};
  for (const auto& [v, t] : n.degenerate) norm["degenerate"].push_back({{"validator", v}, {"task", t}});
  write_json(dir.path("normalization.json"), norm);
  outputs.push_back("normalization.json");

  std::vector<std::string> labels;
  for (const auto& s : settings) labels.push_back(s.label);
  write_json(dir.path("manifest.json"), {{"command", "analyze"},
                                         {"records", a.records},
                                         {"threshold", thr},
                                         {"settings", labels},
                                         {"validators", vals},
                                         {"outputs", outputs}});
  dir.commit();

  out << "derived threshold: " << short_num(derived) << "\n";
  for (const auto& [v, c] : n.dropped) {
    if (c) out << v << ": " << c << " invalid scores excluded\n";
  }
  out << "wrote " << outputs.size() << " files to " << dir.final_path().string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// Locating a forward-best trial for reverse-validate and report

struct Resolved {
  harness::TrialConfig config;
  harness::SourceOnlyOptions source_only;
  harness::TrialRecord record;
};

/// Best trial of (task, algorithm) by `validator`, with its full config
/// rebuilt from the record plus the manifest sitting next to the records file.
inline Resolved resolve_best(const std::string& records_path, std::string task, std::string algorithm,
                             const std::string& validator, const TrialFlags& flags) {
  auto records = harness::load_records(records_path);
  std::vector<harness::TrialRecord> pool;
  std::set<std::string> tasks, algos;
  for (auto& r : records) {
    if (r.status == "reference") continue;
    tasks.insert(r.task);
    algos.insert(r.algorithm);
  }
  auto pick_unique = [](std::string& v, const std::set<std::string>& all, const char* what) {
    if (!v.empty()) return;
    if (all.size() != 1) throw ConfigError(std::string("records hold several ") + what + "s; pass --" + what);
    v = *all.begin();
  };
  if (tasks.empty()) throw InputError("no trials in " + records_path);
  pick_unique(task, tasks, "task");
  pick_unique(algorithm, algos, "algorithm");
  for (auto& r : records) {
    if (r.status != "reference" && r.task == task && r.algorithm == algorithm) pool.push_back(std::move(r));
  }
  if (pool.empty()) throw InputError("no " + algorithm + " trials on " + task + " in " + records_path);
  const auto sel = harness::select_best(pool, validator);
  if (!sel) throw InputError("no valid " + validator + " score among the " + algorithm + " trials");

  Resolved out;
  harness::TrialConfig base;
  const fs::path manifest = fs::path(records_path).parent_path() / "manifest.json";
  if (fs::exists(manifest)) {
    const auto m = read_json_file(manifest.string());
    if (m.contains("config")) base = harness::trial_config_from_json(m["config"]);
    if (m.contains("source_only")) out.source_only = source_only_from_json(m["source_only"]);
  }
  base = flags.apply(base);
  out.source_only = flags.source_only(out.source_only);
  out.record = pool[sel->trial];
  const auto& r = out.record;
  base.task = r.task;
  const auto parsed = algorithms::parse_algorithm(r.algorithm);
  base.algorithm.algorithm = parsed.algorithm;
  base.algorithm.with_dann = parsed.with_dann;
  base.algorithm.hparams = r.hparams;
  base.lr_max = base.algorithm.hparams.at("lr");
  base.algorithm.hparams.erase("lr");
  base.algorithm.dann = r.dann;
  base.feature_layer = models::parse_feature_layer(r.feature_layer);
  base.seed = r.seed;
  out.config = base;
  return out;
}

struct ReverseArgs {
  std::string records, task, algorithm, validator = "IM", out;
  TrialFlags trial;
};

inline int cmd_reverse_validate(const ReverseArgs& a, std::ostream& out) {
  const auto res = resolve_best(a.records, a.task, a.algorithm, a.validator, a.trial);
  const auto task = data::materialize(data::parse_task(res.config.task));
  const auto splits = harness::TrialData::from(task);
  logging::info("reverse validation of " + res.record.trial_id + " (picked by " + a.validator + ")");
  harness::UdaTrainer trainer(res.config, static_cast<std::size_t>(task.num_classes), res.source_only);
  const auto rv = validators::reverse_validation(splits.src_train, splits.tgt_train.x, trainer);
  const std::string dest =
      a.out.empty() ? (fs::path(a.records).parent_path() / "reverse_validation.jsonl").string() : a.out;
  nlohmann::json line = {{"trial_id", res.record.trial_id},
                         {"task", res.config.task},
                         {"algorithm", res.record.algorithm},
                         {"selected_by", a.validator},
                         {"validator", rv.score.validator},
                         {"value", rv.score.valid ? nlohmann::json(rv.score.value) : nlohmann::json(nullptr)},
                         {"valid", rv.score.valid},
                         {"training_runs", trainer.runs()}};
  harness::append_line(dest, line.dump() + "\n");
  out << "reverse validation score for " << res.record.trial_id << ": " << short_num(rv.score.value) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// report: rerun the validator-selected configuration with fresh seeds

struct ReportArgs {
  std::string records, task, algorithm, validator = "IM", out;
  std::size_t repeats = 4;
  std::size_t workers = 1;
  bool same_seed = false;
  TrialFlags trial;
};

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto res = resolve_best(a.records, a.task, a.algorithm, a.validator, a.trial);
  const auto s =
      harness::rerun_best(res.config, a.validator, a.repeats, res.source_only, a.same_seed, a.workers);
  nlohmann::json j = {{"trial_id", res.record.trial_id},
                      {"validator", a.validator},
                      {"config", harness::to_json(res.config)},
                      {"accuracies", s.accuracies},
                      {"mean", s.mean},
                      {"std", s.std_defined ? nlohmann::json(s.std) : nlohmann::json(nullptr)}};
  if (!a.out.empty()) write_json(a.out, j);
  out << res.record.trial_id << " selected by " << a.validator << ": tgt-val " << pct(s.mean);
  if (s.std_defined) out << " ± " << analysis::fmt_num(100.0 * s.std, 1);
  out << " over " << s.accuracies.size() << " runs\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs {
  std::string task, out, format = "binary";
};

inline int cmd_gen_data(const GenArgs& a, std::ostream& out) {
  const auto spec = data::parse_task(a.task);
  if (spec.generator == data::Generator::files) throw ConfigError("gen-data needs a synthetic task id");
  if (a.format != "binary" && a.format != "csv") throw ConfigError("--format must be binary or csv");
  const auto d = data::materialize(spec);
  OutputDir dir(a.out);
  const bool csv = a.format == "csv";
  const std::string mx = csv ? ".csv" : ".udam", lx = csv ? ".csv" : ".udal";
  data::save_matrix(dir.path("source_x" + mx), d.source.x);
  data::save_labels(dir.path("source_y" + lx), d.source.y);
  data::save_matrix(dir.path("target_x" + mx), d.target.x);
  data::save_labels(dir.path("target_y" + lx), d.target.y);
  write_json(dir.path("manifest.json"),
             {{"command", "gen-data"},
              {"task", a.task},
              {"format", a.format},
              {"outputs", {"source_x" + mx, "source_y" + lx, "target_x" + mx, "target_y" + lx}}});
  dir.commit();
  out << "wrote " << a.task << " (" << d.source.size() << " source, " << d.target.size() << " target) to "
      << dir.final_path().string() << "; load it as dir:" << dir.final_path().string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Benchmark of unsupervised domain adaptation algorithms and validators"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  SearchArgs search;
  auto* s = app.add_subcommand("search", "random hyperparameter search of one algorithm on one task");
  s->add_option("--task", search.task, "task id, e.g. moons-45, blobs-3-10, dir:/path");
  s->add_option("--algorithm", search.algorithm, "algorithm id, e.g. DANN, MCC-DANN");
  s->add_option("--trials", search.trials, "number of random-search trials");
  s->add_option("--seed", search.seed, std::string("master seed (default: $") + kSeedEnv + " or 0)");
  s->add_option("--out", search.out, "output directory")->required();
  s->add_option("--workers", search.workers, "parallel trials");
  s->add_flag("--wallclock", search.wallclock, "record per-trial wall-clock time (breaks byte-identical reruns)");
  search.trial.add_to(*s);

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "correlation curves, gap tables and the macro/micro table");
  an->add_option("--records", analyze.records, "records.jsonl file(s)")->required();
  an->add_option("--out", analyze.out, "output directory")->required();
  an->add_option("--threshold", analyze.threshold, "source threshold: none, derive or a number");

  ReverseArgs rev;
  auto* rv = app.add_subcommand("reverse-validate", "reverse validation of the forward-best trial");
  rv->add_option("--records", rev.records, "records.jsonl of a search")->required();
  rv->add_option("--task", rev.task, "task (needed when the records hold several)");
  rv->add_option("--algorithm", rev.algorithm, "algorithm (needed when the records hold several)");
  rv->add_option("--validator", rev.validator, "validator that picks the forward-best trial");
  rv->add_option("--out", rev.out, "JSONL file to append the score to (default: next to the records)");
  rev.trial.add_to(*rv);

  ReportArgs rep;
  auto* rp = app.add_subcommand("report", "rerun the validator-selected configuration with new seeds");
  rp->add_option("--records", rep.records, "records.jsonl of a search")->required();
  rp->add_option("--task", rep.task, "task (needed when the records hold several)");
  rp->add_option("--algorithm", rep.algorithm, "algorithm (needed when the records hold several)");
  rp->add_option("--validator", rep.validator, "validator that picks the configuration and checkpoints");
  rp->add_option("--repeats", rep.repeats, "extra runs beyond the original seed");
  rp->add_option("--workers", rep.workers, "parallel runs");
  rp->add_flag("--same-seed", rep.same_seed, "reuse the original seed for every run");
  rp->add_option("--out", rep.out, "JSON file for the per-run accuracies");
  rep.trial.add_to(*rp);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "write a synthetic task to a directory");
  g->add_option("--task", gen.task, "synthetic task id")->required();
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--format", gen.format, "binary or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << "run with --help for usage of " << (sub == &app ? std::string("uda_bench") : sub->get_name()) << "\n";
    }
    return kUsage;
  }
  logging::set_level(log_level == "debug"  ? logging::Level::debug
                     : log_level == "warn"  ? logging::Level::warn
                     : log_level == "error" ? logging::Level::error
                                            : logging::Level::info);

  try {
    if (s->parsed()) return cmd_search(search, out);
    if (an->parsed()) return cmd_analyze(analyze, out);
    if (rv->parsed()) return cmd_reverse_validate(rev, out);
    if (rp->parsed()) return cmd_report(rep, out);
    if (g->parsed()) return cmd_gen_data(gen, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace udabench::cli
