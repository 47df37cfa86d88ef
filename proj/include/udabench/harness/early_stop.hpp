#pragma once

#include <cstddef>

#include "udabench/validators/validators.hpp"

namespace udabench::harness {

/// Patience counted in validation steps. Only a strictly larger valid score
/// counts as improvement; invalid scores never do.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Feeds one validation score; returns true when training should stop.
  bool observe(const validators::ValidationScore& s) {
    ++steps_;
    if (s.valid && (!has_best_ || s.value > best_)) {
      best_ = s.value;
      has_best_ = true;
      best_step_ = steps_;
      since_ = 0;
    } else {
      ++since_;
    }
    return since_ >= patience_;
  }

  std::size_t steps() const { return steps_; }
  std::size_t best_step() const { return best_step_; }

 private:
  std::size_t patience_;
  std::size_t steps_ = 0;
  std::size_t since_ = 0;
  std::size_t best_step_ = 0;
  double best_ = 0.0;
  bool has_best_ = false;
};

}  // namespace udabench::harness
