#pragma once

#include <functional>

#include "udabench/datasets/datasets.hpp"
#include "udabench/validators/validators.hpp"

namespace udabench::validators {

/// Maps an input matrix to prediction rows.
using Predictor = std::function<Tensor(const Tensor&)>;

/// Anything that can run one UDA training: labeled source, unlabeled target in,
/// trained predictor out. Reverse validation calls it twice.
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual Predictor train(const data::LabeledSet& source, const Tensor& target_x) = 0;
};

struct ReverseResult {
  ValidationScore score;
  std::vector<int> pseudo_labels;  // forward model's argmax on target-train
};

/// Forward run S→T, pseudo-label T, reverse run T→S, score on the true labels of S.
inline ReverseResult reverse_validation(const data::LabeledSet& source, const Tensor& target_x, Trainer& trainer) {
  if (source.x.rows() == 0 || target_x.rows() == 0) throw InputError("reverse validation needs both domains");
  Predictor forward = trainer.train(source, target_x);
  ReverseResult r;
  r.pseudo_labels = argmax_rows(forward(target_x));
  data::LabeledSet pseudo;
  pseudo.x = target_x;
  pseudo.y = r.pseudo_labels;
  pseudo.domain = data::Domain::target;
  Predictor reverse = trainer.train(pseudo, source.x);
  r.score = make_score("RV", accuracy(reverse(source.x), source.y, Averaging::macro));
  return r;
}

}  // namespace udabench::validators
