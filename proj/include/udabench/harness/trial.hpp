#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "udabench/algorithms/step.hpp"
#include "udabench/core/log.hpp"
#include "udabench/datasets/task.hpp"
#include "udabench/harness/early_stop.hpp"
#include "udabench/harness/records.hpp"
#include "udabench/harness/schedule.hpp"
#include "udabench/harness/trial_config.hpp"
#include "udabench/validators/domain_classifier.hpp"
#include "udabench/validators/validators.hpp"

namespace udabench::harness {

using algorithms::Batch;
using models::ModelBundle;

inline models::ModelDims dims_for(const TrialConfig& c, std::size_t input_dim, std::size_t num_classes) {
  models::ModelDims d;
  d.input_dim = input_dim;
  d.num_classes = num_classes;
  d.trunk_width = c.trunk_width;
  d.classifier_hidden = c.classifier_hidden;
  d.discriminator_hidden = c.discriminator_hidden;
  return d;
}

/// Endless shuffled mini-batches over one labeled set; reshuffles on every pass.
class BatchStream {
 public:
  BatchStream(const data::LabeledSet& set, Rng rng) : set_(&set), rng_(rng), order_(set.size()) {
    if (set.size() == 0) throw InputError("cannot draw batches from an empty set");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  Batch next(std::size_t k) {
    k = std::min(k, order_.size());
    Batch b;
    b.idx.resize(k);
    for (auto& i : b.idx) {
      if (pos_ == 0) rng_.shuffle(std::span<std::size_t>(order_));
      i = order_[pos_];
      pos_ = (pos_ + 1) % order_.size();
    }
    b.x = set_->x.gather_rows(std::span<const std::size_t>(b.idx));
    b.y.reserve(k);
    for (auto i : b.idx) b.y.push_back(set_->y[i]);
    return b;
  }

 private:
  const data::LabeledSet* set_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Source-only model

struct SourceOnlyOptions {
  std::size_t epochs = 100;
  std::size_t patience = 30;
  double lr = 3e-3;
  std::size_t batch = 64;
};

inline double macro_accuracy(ModelBundle& b, const data::LabeledSet& s) {
  return validators::accuracy(models::infer(b, s.x).preds, s.y, validators::Averaging::macro);
}

/// Trunk + classifier trained with cross entropy. With a validation set the
/// weights of the best macro validation accuracy are kept and training stops
/// after `patience` epochs without strict improvement; without one, all epochs run.
inline ModelBundle train_source_only(const data::LabeledSet& train, const data::LabeledSet* val,
                                     const models::ModelDims& dims, const SourceOnlyOptions& opt,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Rng init = rng.derive(1);
  ModelBundle b = models::build_bundle(dims, init);
  BatchStream stream(train, rng.derive(2));
  Rng drop = rng.derive(3);
  const std::size_t steps = (train.size() + opt.batch - 1) / opt.batch;
  std::optional<ModelBundle> best;
  double best_acc = -1.0;
  std::size_t since = 0;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    for (std::size_t s = 0; s < steps; ++s) {
      Batch batch = stream.next(opt.batch);
      Graph g;
      auto taps = models::forward_with_taps(g, b, g.input(batch.x), true, drop);
      Var loss = algorithms::src_ce_loss(taps.preds[0], batch.y, 1.0);
      if (!std::isfinite(loss.item())) throw NumericError("source-only training diverged");
      g.backward(loss);
      auto params = models::all_params(b);
      adam_step(std::span<Parameter* const>(params), opt.lr);
    }
    if (val == nullptr) continue;
    const double acc = macro_accuracy(b, *val);
    if (acc > best_acc) {
      best_acc = acc;
      best = b;
      since = 0;
    } else if (++since >= opt.patience) {
      break;
    }
  }
  return best ? *best : b;
}

// ---------------------------------------------------------------------------
// Adaptation loop

enum class LoopEnd { completed, early_stopped, failed };

/// Runs compose_step over paired source/target batches under the one-cycle
/// schedule. `on_checkpoint(epoch, step)` fires every `val_interval` epochs
/// and after the final epoch; returning true stops training.
inline LoopEnd adapt(const TrialConfig& cfg, ModelBundle& b, const data::LabeledSet& src_train,
                     const data::LabeledSet& tgt_train, Rng rng,
                     const std::function<bool(std::size_t, std::size_t)>& on_checkpoint) {
  Rng init = rng.derive(1);
  algorithms::AdaptState st =
      algorithms::prepare_adaptation(cfg.algorithm, b, cfg.feature_layer, tgt_train.x, init);
  BatchStream src(src_train, rng.derive(2)), tgt(tgt_train, rng.derive(3));
  Rng step_rng = rng.derive(4);
  const auto& bud = cfg.budget;
  const std::size_t per_epoch = (std::max(src_train.size(), tgt_train.size()) + bud.batch - 1) / bud.batch;
  const std::size_t total = bud.epochs * per_epoch;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= bud.epochs; ++epoch) {
    try {
      for (std::size_t s = 0; s < per_epoch; ++s, ++step) {
        const double lr = onecycle_lr(static_cast<double>(step), static_cast<double>(total), cfg.lr_max);
        Batch bs = src.next(bud.batch), bt = tgt.next(bud.batch);
        bt.y.clear();  // target labels never reach the algorithm
        auto report = algorithms::compose_step(cfg.algorithm, b, st, bs, bt, lr, step_rng);
        if (!std::isfinite(report.total)) throw NumericError("non-finite loss at step " + std::to_string(step));
      }
    } catch (const NumericError& e) {
      logging::warn(std::string("trial diverged: ") + e.what());
      return LoopEnd::failed;
    }
    if (epoch % bud.val_interval == 0 || epoch == bud.epochs) {
      if (on_checkpoint(epoch, step)) return epoch == bud.epochs ? LoopEnd::completed : LoopEnd::early_stopped;
    }
  }
  return LoopEnd::completed;
}

// ---------------------------------------------------------------------------
// Checkpoint scoring

namespace detail {

inline std::vector<double> per_sample_ce(const Tensor& preds, const std::vector<int>& y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = -std::log(preds(i, y[i]) + algorithms::kLogEps);
  return out;
}

}  // namespace detail

/// Views of one task as the trial sees it.
struct TrialData {
  data::LabeledSet src_train, src_val, tgt_train, tgt_val;

  static TrialData from(const data::TaskData& d) {
    return {d.src_train(), d.src_val(), d.tgt_train(), d.tgt_val()};
  }
};

inline CheckpointEntry evaluate_checkpoint(ModelBundle& b, const TrialData& d, const TrialConfig& cfg,
                                           std::size_t epoch, std::size_t step, std::uint64_t dev_seed) {
  using namespace validators;
  CheckpointEntry e;
  e.epoch = epoch;
  e.step = step;
  auto tgt = models::infer(b, d.tgt_train.x);
  auto sv = models::infer(b, d.src_val.x);
  auto tv = models::infer(b, d.tgt_val.x);

  CheckpointSnapshot snap;
  snap.checkpoint = epoch;
  snap.tgt_train_preds = tgt.preds;
  snap.tgt_train_features = tgt.features;
  snap.src_val_preds = sv.preds;
  snap.src_val_labels = d.src_val.y;
  snap.src_val_losses = detail::per_sample_ce(sv.preds, d.src_val.y);
  snap.src_val_features = sv.features;

  std::optional<double> snd;
  auto snd_value = [&]() -> std::optional<double> {
    if (!snd) {
      try {
        snd = soft_neighborhood_density(snap.tgt_train_features, cfg.validator_options.snd_tau);
      } catch (const InputError& err) {
        logging::debug(err.what());
        snd = std::numeric_limits<double>::quiet_NaN();
      }
    }
    return snd;
  };

  for (const auto& name : cfg.validators) {
    ValidationScore s;
    if (name == "oracle") {
      s = oracle_score(snap, &d.tgt_train.y);
    } else if (name == "IM") {
      s = im_score(snap.tgt_train_preds);
    } else if (name == "SND") {
      s = make_score("SND", *snd_value());
    } else if (name == "NegSND") {
      s = make_score("NegSND", -*snd_value());
    } else if (name == "DEV") {
      snap.src_train_features = models::infer(b, d.src_train.x).features;
      DomainClassifierOptions o;
      o.epochs = cfg.validator_options.dev_epochs;
      o.lr = cfg.validator_options.dev_lr;
      o.hidden = cfg.discriminator_hidden;
      o.batch = cfg.budget.batch;
      o.seed = dev_seed;
      auto clf = train_domain_classifier(snap.src_train_features, snap.tgt_train_features, o);
      const auto q = clf.target_probability(snap.src_val_features);
      s = dev_score(snap.src_val_losses, q, static_cast<double>(d.src_train.size()),
                    static_cast<double>(d.tgt_train.size()));
    } else {
      throw ConfigError("unknown validator '" + name + "'");
    }
    s.validator = name;
    e.scores[name] = s;
  }
  e.src_val_acc = accuracy(sv.preds, d.src_val.y, Averaging::macro);
  e.tgt_train_acc = accuracy(tgt.preds, d.tgt_train.y, Averaging::macro);
  e.tgt_val_acc = accuracy(tv.preds, d.tgt_val.y, Averaging::macro);
  e.src_val_acc_micro = accuracy(sv.preds, d.src_val.y, Averaging::micro);
  e.tgt_train_acc_micro = accuracy(tgt.preds, d.tgt_train.y, Averaging::micro);
  e.tgt_val_acc_micro = accuracy(tv.preds, d.tgt_val.y, Averaging::micro);
  return e;
}

inline TrialRecord record_header(const TrialConfig& cfg, const std::string& trial_id) {
  TrialRecord r;
  r.trial_id = trial_id;
  r.task = cfg.task;
  r.algorithm = cfg.algorithm.name();
  r.feature_layer = models::to_string(cfg.feature_layer);
  r.hparams = cfg.algorithm.hparams;
  r.hparams["lr"] = cfg.lr_max;
  r.dann = cfg.algorithm.dann;
  r.seed = cfg.seed;
  return r;
}

/// One hyperparameter trial started from a copy of `warm_start`.
inline TrialRecord run_trial(const TrialConfig& cfg, const TrialData& d, const ModelBundle& warm_start,
                             const std::string& trial_id, bool record_wallclock = false) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrialRecord r = record_header(cfg, trial_id);
  ModelBundle b = warm_start;
  Rng rng(cfg.seed);
  const std::uint64_t dev_base = rng.derive(5).next_u64();
  EarlyStopper stopper(cfg.budget.patience);
  bool numeric_failure = false;
  const LoopEnd end = adapt(cfg, b, d.src_train, d.tgt_train, rng, [&](std::size_t epoch, std::size_t step) {
    try {
      r.checkpoints.push_back(evaluate_checkpoint(b, d, cfg, epoch, step, dev_base + epoch));
    } catch (const NumericError& e) {
      logging::warn(std::string("checkpoint evaluation failed: ") + e.what());
      numeric_failure = true;
      return true;
    }
    return stopper.observe(r.checkpoints.back().scores.at(cfg.selection));
  });
  if (numeric_failure || end == LoopEnd::failed) {
    r.status = "failed";
  } else {
    r.status = end == LoopEnd::early_stopped ? "early_stopped" : "completed";
  }
  if (record_wallclock) {
    r.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return r;
}

/// Reference entry for a task: the source-only model evaluated once.
inline TrialRecord reference_record(ModelBundle& so, const TrialData& d, const TrialConfig& cfg,
                                    const std::string& trial_id) {
  TrialConfig c = cfg;
  c.algorithm = algorithms::AlgorithmConfig{};
  TrialRecord r = record_header(c, trial_id);
  r.hparams.clear();
  r.status = "reference";
  const auto saved = so.layer;
  so.layer = cfg.feature_layer;
  r.checkpoints.push_back(evaluate_checkpoint(so, d, c, 0, 0, 0));
  so.layer = saved;
  return r;
}

}  // namespace udabench::harness
