#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "udabench/harness/search_space.hpp"
#include "udabench/harness/trial.hpp"

namespace udabench::harness {

struct SearchOptions {
  std::size_t n_trials = 100;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  bool record_wallclock = false;
  SourceOnlyOptions source_only;
  TrialConfig base;  // budget, validators, feature layer, widths, frozen DANN values
};

/// DANN weights held fixed when another algorithm is stacked on DANN.
inline std::map<std::string, double> default_frozen_dann() { return {{"lambda_D", 1.0}, {"lambda_grl", 1.0}}; }

/// The checkpoint a validator picks out of a pool of trials.
struct Selection {
  std::string validator;
  std::size_t trial = 0;
  std::size_t checkpoint = 0;
  validators::ValidationScore score;
  double src_val_acc = 0.0;
  double tgt_train_acc = 0.0;
  double tgt_val_acc = 0.0;
};

struct SearchResult {
  TrialRecord reference;              // source-only model on this task
  std::vector<TrialConfig> configs;   // one per trial, same order as records
  std::vector<TrialRecord> records;
  std::map<std::string, Selection> best;
};

/// Highest valid score for `validator` over every checkpoint of every
/// non-failed record (first occurrence wins ties). Empty when nothing is valid.
inline std::optional<Selection> select_best(const std::vector<TrialRecord>& records, const std::string& validator) {
  std::optional<Selection> best;
  for (std::size_t t = 0; t < records.size(); ++t) {
    for (std::size_t c = 0; c < records[t].checkpoints.size(); ++c) {
      const auto& cp = records[t].checkpoints[c];
      auto it = cp.scores.find(validator);
      if (it == cp.scores.end() || !it->second.valid) continue;
      if (!best || validators::ranks_below(best->score, it->second)) {
        best = Selection{validator, t, c, it->second, cp.src_val_acc, cp.tgt_train_acc, cp.tgt_val_acc};
      }
    }
  }
  return best;
}

/// Task data and warm-start model shared by every trial of one search.
struct SearchContext {
  data::TaskData task;
  TrialData splits;
  ModelBundle source_only;
};

inline SearchContext make_context(const std::string& task_id, const TrialConfig& base, const SourceOnlyOptions& so,
                                  std::uint64_t seed) {
  SearchContext ctx;
  ctx.task = data::materialize(data::parse_task(task_id));
  ctx.splits = TrialData::from(ctx.task);
  const auto dims = dims_for(base, ctx.task.input_dim(), static_cast<std::size_t>(ctx.task.num_classes));
  ctx.source_only = train_source_only(ctx.splits.src_train, &ctx.splits.src_val, dims, so, seed);
  return ctx;
}

/// Runs `n` jobs on `workers` threads and hands results to `emit` strictly in
/// index order, so output does not depend on scheduling.
template <class Result>
void ordered_pool(std::size_t n, std::size_t workers, const std::function<Result(std::size_t)>& job,
                  const std::function<void(std::size_t, Result&)>& emit) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::optional<Result>> done(n);
  std::mutex m;
  std::size_t next_emit = 0;
  std::atomic<std::size_t> next_job{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_job.fetch_add(1);
      if (i >= n) return;
      try {
        Result r = job(i);
        std::lock_guard lock(m);
        done[i] = std::move(r);
        while (next_emit < n && done[next_emit]) {
          emit(next_emit, *done[next_emit]);
          ++next_emit;
        }
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
        next_job = n;
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Pure random search: every trial samples its hyperparameters independently
/// from the algorithm's space and starts from the shared source-only model.
inline SearchResult random_search(const std::string& algorithm_id, const std::string& task_id,
                                  const SearchOptions& opt,
                                  const std::function<void(const TrialRecord&)>& on_record = {}) {
  if (opt.n_trials < 1) throw ConfigError("random search needs at least one trial");
  const Rng master(opt.master_seed);
  TrialConfig base = opt.base;
  base.task = task_id;
  const auto parsed = algorithms::parse_algorithm(algorithm_id);
  base.algorithm.algorithm = parsed.algorithm;
  base.algorithm.with_dann = parsed.with_dann;
  if (!parsed.with_dann) base.algorithm.dann.clear();
  if (parsed.with_dann && base.algorithm.dann.empty()) base.algorithm.dann = default_frozen_dann();

  SearchContext ctx = make_context(task_id, base, opt.source_only, master.derive(1).next_u64());
  SearchResult res;
  res.reference = reference_record(ctx.source_only, ctx.splits, base, task_id + "/source-only");
  if (on_record) on_record(res.reference);

  const SearchSpace space = SearchSpace::for_algorithm(parsed.algorithm);
  for (std::size_t i = 0; i < opt.n_trials; ++i) {
    Rng trial_rng = master.derive(1000 + i);
    Rng sample_rng = trial_rng.derive(1);
    TrialConfig c = base;
    auto hp = sample_hyperparams(space, sample_rng);
    c.lr_max = hp.at("lr");
    hp.erase("lr");
    c.algorithm.hparams = hp;
    c.seed = trial_rng.derive(2).next_u64();
    res.configs.push_back(c);
  }
  res.records.resize(opt.n_trials);
  const std::string prefix = task_id + "/" + parsed.name() + "/";
  ordered_pool<TrialRecord>(
      opt.n_trials, opt.workers,
      [&](std::size_t i) {
        logging::info("trial " + std::to_string(i + 1) + "/" + std::to_string(opt.n_trials) + " of " +
                      parsed.name() + " on " + task_id);
        return run_trial(res.configs[i], ctx.splits, ctx.source_only, prefix + std::to_string(i),
                         opt.record_wallclock);
      },
      [&](std::size_t i, TrialRecord& r) {
        if (on_record) on_record(r);
        res.records[i] = std::move(r);
      });

  bool any_ok = false;
  for (const auto& r : res.records) any_ok = any_ok || r.status != "failed";
  if (!any_ok) throw NumericError("random search: all " + std::to_string(opt.n_trials) + " trials failed");
  for (const auto& v : base.validators) {
    if (auto s = select_best(res.records, v)) res.best[v] = *s;
  }
  return res;
}

struct RerunSummary {
  std::vector<double> accuracies;  // target-val macro accuracy of each run
  double mean = 0.0;
  double std = 0.0;                // sample standard deviation
  bool std_defined = false;        // false for a single run
};

inline RerunSummary summarize_runs(std::vector<double> accs) {
  RerunSummary s;
  s.accuracies = std::move(accs);
  if (s.accuracies.empty()) throw InputError("no runs to summarize");
  // Welford: identical inputs give exactly zero spread.
  double m2 = 0.0, k = 0.0;
  for (double a : s.accuracies) {
    k += 1.0;
    const double delta = a - s.mean;
    s.mean += delta / k;
    m2 += delta * (a - s.mean);
  }
  if (s.accuracies.size() > 1) {
    s.std = std::sqrt(m2 / (k - 1.0));
    s.std_defined = true;
  }
  return s;
}

/// Runs the configuration 1 + n_repeats times (the original seed first, then
/// fresh seeds unless `same_seed`) and reports, per run, the target-val
/// accuracy of the checkpoint `validator` selects within that run.
inline RerunSummary rerun_best(const TrialConfig& cfg, const std::string& validator, std::size_t n_repeats,
                               const SourceOnlyOptions& so = {}, bool same_seed = false, std::size_t workers = 1) {
  const auto task = data::materialize(data::parse_task(cfg.task));
  const TrialData splits = TrialData::from(task);
  const auto dims = dims_for(cfg, task.input_dim(), static_cast<std::size_t>(task.num_classes));
  std::vector<double> accs(n_repeats + 1);
  ordered_pool<double>(
      n_repeats + 1, workers,
      [&](std::size_t k) {
        TrialConfig c = cfg;
        if (k > 0 && !same_seed) c.seed = Rng(cfg.seed).derive(k).next_u64();
        const ModelBundle warm = train_source_only(splits.src_train, &splits.src_val, dims, so, Rng(c.seed).derive(7).next_u64());
        const auto rec = run_trial(c, splits, warm, cfg.task + "/rerun/" + std::to_string(k));
        const auto sel = select_best({rec}, validator);
        if (!sel) throw NumericError("rerun " + std::to_string(k) + " produced no valid " + validator + " score");
        return sel->tgt_val_acc;
      },
      [&](std::size_t k, double& a) { accs[k] = a; });
  return summarize_runs(std::move(accs));
}

}  // namespace udabench::harness
