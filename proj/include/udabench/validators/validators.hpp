#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench::validators {

struct ValidationScore {
  std::string validator;
  double value = 0.0;
  bool valid = true;
  bool higher_is_better = true;
};

inline ValidationScore make_score(std::string name, double value) {
  return {std::move(name), value, std::isfinite(value), true};
}

inline ValidationScore invalid_score(std::string name) {
  return {std::move(name), std::numeric_limits<double>::quiet_NaN(), false, true};
}

/// Strict ordering for selection: every valid score ranks above every invalid one.
inline bool ranks_below(const ValidationScore& a, const ValidationScore& b) {
  if (a.valid != b.valid) return !a.valid;
  if (!a.valid) return false;
  return a.higher_is_better ? a.value < b.value : a.value > b.value;
}

/// Index of the best score (first on ties); invalid scores lose to any valid one.
inline std::size_t best_index(std::span<const ValidationScore> scores) {
  if (scores.empty()) throw InputError("best_index of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (ranks_below(scores[best], scores[i])) best = i;
  return best;
}

/// Everything a validator may look at for one checkpoint. Target labels are
/// deliberately absent; the oracle receives them out of band.
struct CheckpointSnapshot {
  std::string trial_id;
  std::size_t checkpoint = 0;
  Tensor tgt_train_preds;
  Tensor tgt_train_features;
  Tensor src_val_preds;
  std::vector<double> src_val_losses;
  std::vector<int> src_val_labels;
  Tensor src_train_features;
  Tensor src_val_features;
};

// ---------------------------------------------------------------------------
// Accuracy

enum class Averaging { micro, macro };

inline std::vector<int> argmax_rows(const Tensor& preds) {
  std::vector<int> out(preds.rows());
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    auto row = preds.row_span(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

inline double accuracy_of_labels(std::span<const int> predicted, std::span<const int> labels, Averaging mode) {
  if (labels.empty()) throw InputError("accuracy of an empty set");
  if (predicted.size() != labels.size()) throw InputError("accuracy: prediction and label counts differ");
  if (mode == Averaging::micro) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) ok += predicted[i] == labels[i];
    return static_cast<double>(ok) / static_cast<double>(labels.size());
  }
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // label → (correct, total)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [ok, total] = per_class[labels[i]];
    ok += predicted[i] == labels[i];
    ++total;
  }
  double s = 0.0;
  for (const auto& [c, v] : per_class) s += static_cast<double>(v.first) / static_cast<double>(v.second);
  return s / static_cast<double>(per_class.size());
}

inline double accuracy(const Tensor& preds, std::span<const int> labels, Averaging mode) {
  if (preds.rows() == 0) throw InputError("accuracy of an empty set");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= preds.cols()) {
      throw InputError("label " + std::to_string(y) + " outside [0, " + std::to_string(preds.cols()) + ")");
    }
  }
  auto pred = argmax_rows(preds);
  return accuracy_of_labels(pred, labels, mode);
}

// ---------------------------------------------------------------------------
// Scorers

inline ValidationScore oracle_score(const CheckpointSnapshot& s, const std::vector<int>* target_labels) {
  if (target_labels == nullptr) throw ConfigError("oracle validator needs target labels");
  return make_score("oracle", accuracy(s.tgt_train_preds, *target_labels, Averaging::macro));
}

namespace detail {

inline double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

/// Entropy of the mean prediction minus the mean per-row entropy, over the whole set.
inline double information_maximization(const Tensor& preds) {
  if (preds.rows() == 0) throw InputError("IM of an empty prediction set");
  const std::size_t n = preds.rows(), c = preds.cols();
  std::vector<double> mean(c, 0.0);
  double mean_h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] += preds(i, j);
      h -= detail::plogp(preds(i, j));
    }
    mean_h += h;
  }
  mean_h /= static_cast<double>(n);
  double h_mean = 0.0;
  for (double& m : mean) {
    m /= static_cast<double>(n);
    h_mean -= detail::plogp(m);
  }
  return h_mean - mean_h;
}

inline ValidationScore im_score(const Tensor& preds) { return make_score("IM", information_maximization(preds)); }

/// Mean entropy of the temperature-softmaxed cosine-similarity rows (self excluded).
inline double soft_neighborhood_density(const Tensor& features, double tau) {
  if (!(tau > 0.0)) throw ConfigError("SND temperature must be positive");
  const std::size_t n = features.rows();
  if (n < 2) throw InputError("SND needs at least two target samples");
  Tensor f = features;
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (double v : f.row_span(i)) norm += v * v;
    if (norm == 0.0) throw InputError("SND: feature row " + std::to_string(i) + " has zero norm");
    norm = std::sqrt(norm);
    for (auto& v : f.row_span(i)) v /= norm;
  }
  Tensor sim = matmul_nt(f, f);
  // Mean taken relative to the first row's entropy so equal entropies average exactly.
  double first = 0.0, shifted = 0.0;
  std::vector<double> z(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) z[k++] = sim(i, j) / tau;
    const double zmax = *std::max_element(z.begin(), z.end());
    double partition = 0.0;
    for (auto& v : z) {
      v -= zmax;
      partition += std::exp(v);
    }
    // H = log Z − Σ p·z with p = exp(z)/Z
    double expected = 0.0;
    for (double v : z) expected += std::exp(v) / partition * v;
    const double h = std::log(partition) - expected;
    if (i == 0) first = h;
    shifted += h - first;
  }
  return first + shifted / static_cast<double>(n);
}

inline ValidationScore snd_score(const Tensor& features, double tau = 0.05) {
  return make_score("SND", soft_neighborhood_density(features, tau));
}

inline ValidationScore neg_snd_score(const Tensor& features, double tau = 0.05) {
  return make_score("NegSND", -soft_neighborhood_density(features, tau));
}

// ---------------------------------------------------------------------------
// DEV

class DegenerateVariance : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Importance-weighted source-validation risk with a control variate:
/// w = (N_s/N_t)·q/(1−q), η = −Cov(w·L, w)/Var(w), risk = mean(w·L) + η·mean(w) − η.
inline double dev_risk(std::span<const double> losses, std::span<const double> target_prob, double n_source,
                       double n_target) {
  if (losses.size() != target_prob.size() || losses.empty()) {
    throw InputError("DEV: need one target probability per source-validation loss");
  }
  const std::size_t n = losses.size();
  std::vector<double> w(n), wl(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(losses[i])) throw InputError("DEV: non-finite loss at index " + std::to_string(i));
    w[i] = (n_source / n_target) * target_prob[i] / (1.0 - target_prob[i]);
    wl[i] = w[i] * losses[i];
  }
  auto mean = [n](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(n);
  };
  const double mw = mean(w), mwl = mean(wl);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (wl[i] - mwl) * (w[i] - mw);
    var += (w[i] - mw) * (w[i] - mw);
  }
  // Both sums share the same normalizer, which cancels in η.
  if (!(var / static_cast<double>(n) >= 1e-12)) {
    throw DegenerateVariance("DEV: importance-weight variance " + std::to_string(var / static_cast<double>(n)) +
                             " is below 1e-12");
  }
  const double eta = -cov / var;
  return mwl + eta * mw - eta;
}

/// Negative DEV risk; degenerate or non-finite cases yield an invalid score.
inline ValidationScore dev_score(std::span<const double> losses, std::span<const double> target_prob,
                                 double n_source, double n_target) {
  try {
    return make_score("DEV", -dev_risk(losses, target_prob, n_source, n_target));
  } catch (const DegenerateVariance&) {
    return invalid_score("DEV");
  }
}

// ---------------------------------------------------------------------------
// Source thresholding

/// Keeps an item when its source accuracy, normalized by the task's
/// source-only accuracy, exceeds the threshold. A threshold ≤ 0 keeps everything.
inline bool passes_threshold(double src_acc, double source_only_acc, double threshold) {
  if (threshold <= 0.0) return true;
  if (!(source_only_acc > 0.0)) throw ConfigError("source-only accuracy must be positive");
  return src_acc / source_only_acc > threshold;
}

template <class Record, class TaskOf, class SrcAccOf>
std::vector<Record> threshold_filter(const std::vector<Record>& records, double threshold,
                                     const std::map<std::string, double>& source_only_acc, TaskOf task_of,
                                     SrcAccOf src_acc_of) {
  std::vector<Record> out;
  for (const auto& r : records) {
    const std::string task = task_of(r);
    auto it = source_only_acc.find(task);
    if (it == source_only_acc.end()) throw ConfigError("no source-only reference accuracy for task " + task);
    if (passes_threshold(src_acc_of(r), it->second, threshold)) out.push_back(r);
  }
  return out;
}

struct ThresholdPoint {
  double normalized_src_acc = 0.0;
  double tgt_acc = 0.0;
};

/// Mean over tasks of the normalized source accuracy of each task's best-target entry.
inline double derive_threshold(const std::map<std::string, std::vector<ThresholdPoint>>& by_task) {
  if (by_task.empty()) throw InputError("derive_threshold needs at least one task");
  double s = 0.0;
  for (const auto& [task, pts] : by_task) {
    if (pts.empty()) throw InputError("derive_threshold: task " + task + " has no records");
    const auto best = std::max_element(pts.begin(), pts.end(),
                                       [](const auto& a, const auto& b) { return a.tgt_acc < b.tgt_acc; });
    s += best->normalized_src_acc;
  }
  return s / static_cast<double>(by_task.size());
}

}  // namespace udabench::validators
