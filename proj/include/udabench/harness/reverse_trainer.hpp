#pragma once

#include <memory>

#include "udabench/harness/trial.hpp"
#include "udabench/validators/reverse.hpp"

namespace udabench::harness {

/// Full UDA training (source-only warm start, then the configured algorithm for
/// the whole epoch budget) behind the reverse-validation trainer interface.
class UdaTrainer : public validators::Trainer {
 public:
  UdaTrainer(TrialConfig cfg, std::size_t num_classes, SourceOnlyOptions so = {})
      : cfg_(std::move(cfg)), num_classes_(num_classes), so_(so) {}

  validators::Predictor train(const data::LabeledSet& source, const Tensor& target_x) override {
    ++runs_;
    logging::info("training run " + std::to_string(runs_) + " (" + cfg_.algorithm.name() + ", " +
                  std::to_string(source.size()) + " labeled, " + std::to_string(target_x.rows()) + " unlabeled)");
    const Rng rng = Rng(cfg_.seed).derive(runs_);
    const auto dims = dims_for(cfg_, source.x.cols(), num_classes_);
    auto b = std::make_shared<ModelBundle>(train_source_only(source, nullptr, dims, so_, rng.derive(1).next_u64()));
    data::LabeledSet target;
    target.x = target_x;
    target.y.assign(target_x.rows(), 0);  // placeholder; adapt() strips target labels
    target.domain = data::Domain::target;
    const LoopEnd end = adapt(cfg_, *b, source, target, rng.derive(2), [](std::size_t, std::size_t) { return false; });
    if (end == LoopEnd::failed) throw NumericError("training run " + std::to_string(runs_) + " diverged");
    return [b](const Tensor& x) { return models::infer(*b, x).preds; };
  }

  std::size_t runs() const { return runs_; }

 private:
  TrialConfig cfg_;
  std::size_t num_classes_;
  SourceOnlyOptions so_;
  std::size_t runs_ = 0;
};

}  // namespace udabench::harness
