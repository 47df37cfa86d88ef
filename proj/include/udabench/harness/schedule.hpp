#pragma once

#include <cmath>
#include <numbers>

#include "udabench/core/error.hpp"

namespace udabench::harness {

/// One-cycle learning rate: cosine ramp from lr_max/100 up to lr_max over the
/// first 5% of steps, then cosine anneal down to 0 at `total_steps`.
inline double onecycle_lr(double step, double total_steps, double lr_max) {
  if (step < 0.0 || step > total_steps) throw ConfigError("onecycle_lr: step outside [0, total_steps]");
  if (total_steps <= 0.0) return lr_max;
  const double lr_init = lr_max / 100.0;
  const double warm = 0.05 * total_steps;
  if (step <= warm) {
    const double t = step / warm;
    return lr_init + (lr_max - lr_init) * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  }
  const double t = (step - warm) / (total_steps - warm);
  return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace udabench::harness
