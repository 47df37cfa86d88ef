#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "udabench/harness/records.hpp"

namespace udabench::analysis {

/// One checkpoint of one trial, flattened out of the records file.
struct Observation {
  std::string task;
  std::string algorithm;
  std::string trial_id;
  std::size_t checkpoint = 0;
  std::map<std::string, validators::ValidationScore> scores;
  double src_acc = 0.0;  // macro source-val
  double tgt_train_acc = 0.0;
  double tgt_val_acc = 0.0;
  double tgt_train_acc_micro = 0.0;
  double tgt_val_acc_micro = 0.0;
};

/// Source-only reference checkpoint per task.
using References = std::map<std::string, harness::CheckpointEntry>;

struct Dataset {
  std::vector<Observation> observations;
  References references;
};

/// Splits records into the searched pool and the per-task source-only
/// references. A task listed twice with different reference accuracies is an
/// input error: the normalization would be ambiguous.
inline Dataset flatten(const std::vector<harness::TrialRecord>& records) {
  Dataset d;
  for (const auto& r : records) {
    if (r.status == "reference") {
      if (r.checkpoints.empty()) throw InputError("reference record " + r.trial_id + " has no checkpoint");
      const auto& cp = r.checkpoints.front();
      auto [it, fresh] = d.references.emplace(r.task, cp);
      if (!fresh && it->second.src_val_acc != cp.src_val_acc) {
        throw InputError("conflicting source-only references for task " + r.task);
      }
      continue;
    }
    for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
      const auto& cp = r.checkpoints[c];
      d.observations.push_back(Observation{r.task, r.algorithm, r.trial_id, c, cp.scores, cp.src_val_acc,
                                           cp.tgt_train_acc, cp.tgt_val_acc, cp.tgt_train_acc_micro,
                                           cp.tgt_val_acc_micro});
    }
  }
  return d;
}

inline std::map<std::string, double> source_only_accuracies(const References& refs) {
  std::map<std::string, double> out;
  for (const auto& [task, cp] : refs) out[task] = cp.src_val_acc;
  return out;
}

struct MinMax {
  std::vector<double> values;
  bool degenerate = false;  // constant input: everything mapped to 0
};

inline MinMax minmax_normalize(const std::vector<double>& v) {
  MinMax m;
  if (v.empty()) return m;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo, span = *hi - *lo;
  m.degenerate = !(span > 0.0);
  m.values.reserve(v.size());
  for (double x : v) m.values.push_back(m.degenerate ? 0.0 : (x - a) / span);
  return m;
}

struct NormalizedRecord {
  std::string task;
  std::string algorithm;
  std::string trial_id;
  std::size_t checkpoint = 0;
  std::map<std::string, double> score;  // validators with a valid score only
  double src_acc = 0.0;                 // / source-only source accuracy
  double tgt_acc = 0.0;                 // / best target-train accuracy of the task
};

struct Normalized {
  std::vector<NormalizedRecord> rows;
  std::map<std::string, std::size_t> dropped;                 // invalid scores per validator
  std::set<std::pair<std::string, std::string>> degenerate;  // (validator, task) with constant scores
};

/// Validator scores min-max normalized per (validator, task) over valid
/// scores only; target-train accuracy divided by the task's maximum; source
/// accuracy divided by the task's source-only accuracy.
inline Normalized normalize(const std::vector<Observation>& obs, const std::map<std::string, double>& source_only,
                            const std::vector<std::string>& validator_names) {
  Normalized out;
  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < obs.size(); ++i) by_task[obs[i].task].push_back(i);

  out.rows.resize(obs.size());
  for (const auto& [task, idx] : by_task) {
    auto so = source_only.find(task);
    if (so == source_only.end()) throw ConfigError("no source-only reference accuracy for task " + task);
    if (!(so->second > 0.0)) throw InputError("source-only accuracy of task " + task + " is zero");
    double tmax = 0.0;
    for (std::size_t i : idx) tmax = std::max(tmax, obs[i].tgt_train_acc);
    if (!(tmax > 0.0)) throw InputError("every target accuracy of task " + task + " is zero");
    for (std::size_t i : idx) {
      auto& r = out.rows[i];
      r.task = task;
      r.algorithm = obs[i].algorithm;
      r.trial_id = obs[i].trial_id;
      r.checkpoint = obs[i].checkpoint;
      r.src_acc = obs[i].src_acc / so->second;
      r.tgt_acc = obs[i].tgt_train_acc / tmax;
    }
    for (const auto& v : validator_names) {
      std::vector<std::size_t> keep;
      std::vector<double> raw;
      for (std::size_t i : idx) {
        auto it = obs[i].scores.find(v);
        if (it != obs[i].scores.end() && it->second.valid) {
          keep.push_back(i);
          raw.push_back(it->second.value);
        } else {
          ++out.dropped[v];
        }
      }
      const auto m = minmax_normalize(raw);
      if (m.degenerate) out.degenerate.emplace(v, task);
      for (std::size_t k = 0; k < keep.size(); ++k) out.rows[keep[k]].score[v] = m.values[k];
    }
  }
  return out;
}

}  // namespace udabench::analysis
