#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udabench/analysis/normalize.hpp"
#include "udabench/analysis/spearman.hpp"
#include "udabench/analysis/table.hpp"

namespace udabench::analysis {

enum class Axis { source, target };

inline Axis parse_axis(const std::string& s) {
  if (s == "source") return Axis::source;
  if (s == "target") return Axis::target;
  throw ConfigError("unknown accuracy axis '" + s + "' (source, target)");
}

inline std::string to_string(Axis a) { return a == Axis::source ? "source" : "target"; }

/// Thresholds lo, lo+step, ..., hi computed by multiplication so the grid
/// carries no accumulated rounding.
inline std::vector<double> threshold_grid(double lo = 0.0, double hi = 1.10, double step = 0.02) {
  if (!(step > 0.0) || hi < lo) throw ConfigError("bad threshold grid");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> g;
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + step * static_cast<double>(i));
  return g;
}

struct CurvePoint {
  double threshold = 0.0;
  std::map<std::string, std::optional<double>> per_task;  // nullopt: emptied or degenerate
  std::optional<double> mean;
  std::optional<double> std;  // sample std; needs two defined tasks
  std::size_t emptied = 0;    // tasks with fewer than two rows left
  std::size_t degenerate = 0; // tasks left with constant scores or accuracies
};

/// Rows kept at `threshold` (≤ 0 keeps everything, else strictly greater).
inline bool kept(const NormalizedRecord& r, Axis axis, double threshold) {
  if (threshold <= 0.0) return true;
  return (axis == Axis::source ? r.src_acc : r.tgt_acc) > threshold;
}

/// Per-task Spearman correlation between one validator's normalized score and
/// normalized target accuracy, for every threshold in the grid.
inline std::vector<CurvePoint> correlation_vs_threshold(const Normalized& n, const std::string& validator, Axis axis,
                                                        const std::vector<double>& grid = threshold_grid()) {
  std::map<std::string, std::vector<const NormalizedRecord*>> by_task;
  for (const auto& r : n.rows) by_task[r.task].push_back(&r);
  std::vector<CurvePoint> curve;
  for (double t : grid) {
    CurvePoint p;
    p.threshold = t;
    std::vector<double> rhos;
    for (const auto& [task, rows] : by_task) {
      std::vector<double> s, a;
      for (const auto* r : rows) {
        auto it = r->score.find(validator);
        if (it == r->score.end() || !kept(*r, axis, t)) continue;
        s.push_back(it->second);
        a.push_back(r->tgt_acc);
      }
      if (s.size() < 2) {
        ++p.emptied;
        p.per_task[task] = std::nullopt;
        continue;
      }
      const auto c = spearman(s, a);
      if (!c.defined) {
        ++p.degenerate;
        p.per_task[task] = std::nullopt;
        continue;
      }
      p.per_task[task] = c.rho;
      rhos.push_back(c.rho);
    }
    if (!rhos.empty()) {
      double m = 0.0;
      for (double r : rhos) m += r;
      m /= static_cast<double>(rhos.size());
      p.mean = m;
      if (rhos.size() > 1) {
        double ss = 0.0;
        for (double r : rhos) ss += (r - m) * (r - m);
        p.std = std::sqrt(ss / static_cast<double>(rhos.size() - 1));
      }
    }
    curve.push_back(std::move(p));
  }
  return curve;
}

/// x, one column per task, mean, band-low, band-high (mean ∓ std).
inline Table curve_plot_data(const std::vector<CurvePoint>& curve) {
  Table t;
  t.header = {"threshold"};
  std::vector<std::string> tasks;
  if (!curve.empty()) {
    for (const auto& [task, v] : curve.front().per_task) tasks.push_back(task);
  }
  for (const auto& task : tasks) t.header.push_back(task);
  for (const char* h : {"mean", "band_low", "band_high", "tasks_emptied", "tasks_degenerate"}) t.header.push_back(h);
  for (const auto& p : curve) {
    std::vector<std::string> row{fmt_num(p.threshold, 2)};
    for (const auto& task : tasks) {
      auto it = p.per_task.find(task);
      row.push_back(it == p.per_task.end() ? kMissing : fmt_num(it->second));
    }
    row.push_back(fmt_num(p.mean));
    const bool band = p.mean && p.std;
    row.push_back(band ? fmt_num(*p.mean - *p.std) : kMissing);
    row.push_back(band ? fmt_num(*p.mean + *p.std) : kMissing);
    row.push_back(std::to_string(p.emptied));
    row.push_back(std::to_string(p.degenerate));
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace udabench::analysis
