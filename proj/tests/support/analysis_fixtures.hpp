#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udabench/analysis/normalize.hpp"

namespace udabench::testing {

/// Observation with the given raw scores (NaN → invalid); micro accuracies
/// default to the macro ones.
inline analysis::Observation obs(const std::string& task, const std::string& algo,
                                 const std::map<std::string, double>& scores, double src, double tgt) {
  analysis::Observation o;
  o.task = task;
  o.algorithm = algo;
  for (const auto& [k, v] : scores) o.scores[k] = validators::make_score(k, v);
  o.src_acc = src;
  o.tgt_train_acc = o.tgt_train_acc_micro = tgt;
  o.tgt_val_acc = o.tgt_val_acc_micro = tgt;
  return o;
}

/// Rank by counting, then textbook Pearson; nullopt on zero variance.
inline std::optional<double> brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) less += 1;
        if (v[j] == v[i]) equal += 1;
      }
      r[i] = 1 + less + (equal - 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return std::nullopt;
  return num / std::sqrt(dx * dy);
}

/// One task column of a thresholding table (task "MM"), rebuilt as
/// checkpoints. Source-only source accuracy is 50%, so the 0.98
/// setting keeps source accuracies above 49%. Each validator scores its own
/// three checkpoints: the top-scoring one fails the threshold, the runner-up
/// passes it, and the lowest-scoring one holds the best target accuracy.
struct MmColumn {
  std::vector<analysis::Observation> observations;
  std::map<std::string, double> source_only{{"MM", 0.50}};
  std::vector<std::string> validators{"IM", "DEV", "SND", "NegSND"};
  std::map<std::string, std::map<std::string, std::string>> expected;
};

inline MmColumn mm_column_fixture() {
  struct Row {
    const char* v;
    double none, thr, oracle;
  };
  const Row rows[] = {{"IM", 54.1, 54.1, 95.2}, {"DEV", 10.0, 67.0, 95.3}, {"SND", 10.0, 10.0, 93.4},
                      {"NegSND", 40.7, 53.6, 93.4}};
  MmColumn f;
  for (const auto& r : rows) {
    f.observations.push_back(obs("MM", "X", {{r.v, 3.0}}, 0.30, r.none / 100));
    f.observations.push_back(obs("MM", "X", {{r.v, 2.0}}, 0.60, r.thr / 100));
    f.observations.push_back(obs("MM", "X", {{r.v, 1.0}}, 0.60, r.oracle / 100));
    auto pct = [](double x) {
      char b[16];
      std::snprintf(b, sizeof b, "%.1f", x);
      return std::string(b);
    };
    f.expected[r.v] = {{"None", pct(r.none)}, {"0.98", pct(r.thr)}, {"Oracle", pct(r.oracle)}};
  }
  return f;
}

}  // namespace udabench::testing
