#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "udabench/analysis/normalize.hpp"
#include "udabench/analysis/table.hpp"

namespace udabench::analysis {

struct GapSetting {
  std::string label;       // "None", "0.98", ...
  double threshold = 0.0;  // ≤ 0: keep everything
};

inline GapSetting no_threshold() { return {"None", 0.0}; }

inline GapSetting threshold_setting(double t) {
  return t <= 0.0 ? no_threshold() : GapSetting{fmt_num(t, 2), t};
}

/// Mean over tasks of the normalized source accuracy of each task's best
/// target-train checkpoint.
inline double derive_threshold(const Dataset& d) {
  const auto so = source_only_accuracies(d.references);
  std::map<std::string, std::vector<validators::ThresholdPoint>> pts;
  for (const auto& o : d.observations) {
    auto it = so.find(o.task);
    if (it == so.end()) throw ConfigError("no source-only reference accuracy for task " + o.task);
    pts[o.task].push_back({o.src_acc / it->second, o.tgt_train_acc});
  }
  return validators::derive_threshold(pts);
}

struct GapTable {
  std::vector<std::string> tasks;
  std::vector<std::string> validators;
  std::vector<GapSetting> settings;
  // (validator, setting label, task) -> target-train accuracy of the selected checkpoint
  std::map<std::tuple<std::string, std::string, std::string>, std::optional<double>> selected;
  // (validator, task) -> best target-train accuracy among checkpoints that validator can score
  std::map<std::pair<std::string, std::string>, std::optional<double>> oracle;

  std::optional<double> cell(const std::string& v, const std::string& setting, const std::string& task) const {
    auto it = selected.find({v, setting, task});
    return it == selected.end() ? std::nullopt : it->second;
  }
  std::optional<double> oracle_cell(const std::string& v, const std::string& task) const {
    auto it = oracle.find({v, task});
    return it == oracle.end() ? std::nullopt : it->second;
  }
  /// Oracle minus selected accuracy; empty when either side is.
  std::optional<double> gap(const std::string& v, const std::string& setting, const std::string& task) const {
    const auto s = cell(v, setting, task);
    const auto o = oracle_cell(v, task);
    if (!s || !o) return std::nullopt;
    return *o - *s;
  }
};

inline GapTable gap_table(const std::vector<Observation>& obs, const std::map<std::string, double>& source_only,
                          const std::vector<std::string>& validator_names, const std::vector<GapSetting>& settings) {
  GapTable g;
  g.validators = validator_names;
  g.settings = settings;
  std::map<std::string, std::vector<const Observation*>> by_task;
  for (const auto& o : obs) by_task[o.task].push_back(&o);
  for (const auto& [task, rows] : by_task) {
    g.tasks.push_back(task);
    auto so = source_only.find(task);
    for (const auto& v : validator_names) {
      std::optional<double> best_tgt;
      for (const auto* o : rows) {
        auto it = o->scores.find(v);
        if (it == o->scores.end() || !it->second.valid) continue;
        if (!best_tgt || o->tgt_train_acc > *best_tgt) best_tgt = o->tgt_train_acc;
      }
      g.oracle[{v, task}] = best_tgt;
      for (const auto& s : settings) {
        if (s.threshold > 0.0 && so == source_only.end()) {
          throw ConfigError("no source-only reference accuracy for task " + task);
        }
        const Observation* pick = nullptr;
        for (const auto* o : rows) {
          auto it = o->scores.find(v);
          if (it == o->scores.end() || !it->second.valid) continue;
          if (s.threshold > 0.0 && !validators::passes_threshold(o->src_acc, so->second, s.threshold)) continue;
          if (!pick || validators::ranks_below(pick->scores.at(v), it->second)) pick = o;
        }
        g.selected[{v, s.label, task}] = pick ? std::optional<double>(pick->tgt_train_acc) : std::nullopt;
      }
    }
  }
  return g;
}

/// Same table, computed separately inside each algorithm's records.
inline std::map<std::string, GapTable> gap_table_per_algorithm(const std::vector<Observation>& obs,
                                                               const std::map<std::string, double>& source_only,
                                                               const std::vector<std::string>& validator_names,
                                                               const std::vector<GapSetting>& settings) {
  std::map<std::string, std::vector<Observation>> by_algo;
  for (const auto& o : obs) by_algo[o.algorithm].push_back(o);
  std::map<std::string, GapTable> out;
  for (const auto& [a, rows] : by_algo) out.emplace(a, gap_table(rows, source_only, validator_names, settings));
  return out;
}

/// One column per validator; rows per task: each setting, Oracle, then the
/// oracle gap of each setting. Percentages with one decimal; "-" when every
/// checkpoint was discarded.
inline Table render_gap_table(const GapTable& g, const std::string& prefix = "") {
  Table t;
  t.header = {"task / setting"};
  for (const auto& v : g.validators) t.header.push_back(v);
  for (const auto& task : g.tasks) {
    const std::string head = prefix + task + " / ";
    for (const auto& s : g.settings) {
      std::vector<std::string> r{head + s.label};
      for (const auto& v : g.validators) r.push_back(fmt_pct(g.cell(v, s.label, task)));
      t.add_row(std::move(r));
    }
    std::vector<std::string> o{head + "Oracle"};
    for (const auto& v : g.validators) o.push_back(fmt_pct(g.oracle_cell(v, task)));
    t.add_row(std::move(o));
    for (const auto& s : g.settings) {
      std::vector<std::string> r{head + "gap " + s.label};
      for (const auto& v : g.validators) r.push_back(fmt_pct(g.gap(v, s.label, task)));
      t.add_row(std::move(r));
    }
  }
  return t;
}

inline Table render_gap_tables(const std::map<std::string, GapTable>& per_algo) {
  Table out;
  for (const auto& [a, g] : per_algo) {
    Table t = render_gap_table(g, a + " / ");
    if (out.header.empty()) out.header = t.header;
    for (auto& r : t.rows) out.add_row(std::move(r));
  }
  return out;
}

}  // namespace udabench::analysis
