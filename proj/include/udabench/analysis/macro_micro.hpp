#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udabench/analysis/normalize.hpp"
#include "udabench/analysis/table.hpp"

namespace udabench::analysis {

struct MacroMicro {
  // [split][mode]; split 0 = train, 1 = val; mode 0 = micro, 1 = macro
  std::optional<double> acc[2][2];
  std::size_t methods_kept = 0;
  std::size_t methods_dropped = 0;  // did not beat source-only
};

/// Each (task, algorithm) is represented by its oracle-selected checkpoint
/// (best macro target-train accuracy). Methods whose selected macro
/// target-train accuracy does not exceed the source-only model's are dropped;
/// the rest are averaged within a task, then across tasks.
inline MacroMicro macro_micro_table(const std::vector<Observation>& obs, const References& refs) {
  std::map<std::pair<std::string, std::string>, const Observation*> best;
  for (const auto& o : obs) {
    auto& b = best[{o.task, o.algorithm}];
    if (!b || o.tgt_train_acc > b->tgt_train_acc) b = &o;
  }
  MacroMicro m;
  std::map<std::string, std::vector<const Observation*>> kept;
  for (const auto& [key, o] : best) {
    auto ref = refs.find(key.first);
    if (ref == refs.end()) throw ConfigError("no source-only reference for task " + key.first);
    if (o->tgt_train_acc > ref->second.tgt_train_acc) {
      kept[key.first].push_back(o);
      ++m.methods_kept;
    } else {
      ++m.methods_dropped;
    }
  }
  if (kept.empty()) return m;
  auto value = [](const Observation& o, int split, int mode) {
    if (split == 0) return mode == 0 ? o.tgt_train_acc_micro : o.tgt_train_acc;
    return mode == 0 ? o.tgt_val_acc_micro : o.tgt_val_acc;
  };
  for (int s = 0; s < 2; ++s) {
    for (int md = 0; md < 2; ++md) {
      double across = 0.0;
      for (const auto& [task, os] : kept) {
        double within = 0.0;
        for (const auto* o : os) within += value(*o, s, md);
        across += within / static_cast<double>(os.size());
      }
      m.acc[s][md] = across / static_cast<double>(kept.size());
    }
  }
  return m;
}

inline Table render_macro_micro(const MacroMicro& m) {
  Table t;
  t.header = {"split", "micro", "macro"};
  t.add_row({"train", fmt_pct(m.acc[0][0]), fmt_pct(m.acc[0][1])});
  t.add_row({"val", fmt_pct(m.acc[1][0]), fmt_pct(m.acc[1][1])});
  return t;
}

}  // namespace udabench::analysis
