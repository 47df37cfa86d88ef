#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/diffcore/param.hpp"

namespace udabench {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;  // added to the gradient as weight_decay * w
};

/// One Adam update over every parameter whose gradient was produced by the
/// last backward pass. Parameters the loss did not reach are skipped, so a
/// loss that ignores a module leaves that module untouched.
inline void adam_step(std::span<Parameter* const> params, double lr, const AdamOptions& opt = {}) {
  if (lr < 0.0) throw ConfigError("adam_step: negative learning rate");
  for (const Parameter* p : params) {
    if (!p->has_grad) continue;
    if (!p->grad.all_finite()) throw NumericError("adam_step: non-finite gradient for " + p->name);
  }
  for (Parameter* p : params) {
    if (!p->has_grad) continue;
    if (p->first_moment.size() != p->value.size()) {
      p->first_moment = Tensor(p->value.rows(), p->value.cols());
      p->second_moment = Tensor(p->value.rows(), p->value.cols());
    }
    ++p->step;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p->step));
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + opt.weight_decay * p->value[i];
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = opt.beta1 * m + (1.0 - opt.beta1) * g;
      v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
      p->value[i] -= lr * (m / c1) / (std::sqrt(v / c2) + opt.epsilon);
    }
    p->has_grad = false;
  }
}

inline void adam_step(ParamSet& set, double lr, const AdamOptions& opt = {}) {
  const std::vector<Parameter*> ptrs = set.pointers();
  adam_step(std::span<Parameter* const>(ptrs), lr, opt);
}

}  // namespace udabench
