#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "udabench/algorithms/config.hpp"
#include "udabench/core/rng.hpp"

namespace udabench::harness {

using algorithms::Dist;
using algorithms::HyperRange;

/// Independent per-key distributions; the learning rate is one of the keys.
struct SearchSpace {
  std::vector<HyperRange> ranges;

  static SearchSpace for_algorithm(algorithms::Algo a) {
    SearchSpace s;
    s.ranges.push_back(algorithms::lr_range());
    for (auto& r : algorithms::search_ranges(a)) s.ranges.push_back(r);
    return s;
  }

  void validate() const {
    for (const auto& r : ranges) {
      if (!(r.lo <= r.hi)) throw ConfigError("search range " + r.name + " has lo > hi");
      if (r.dist == Dist::log_uniform && !(r.lo > 0.0)) throw ConfigError("log-uniform range " + r.name + " must be positive");
      if (r.dist == Dist::integer && !(r.step > 0.0)) throw ConfigError("integer range " + r.name + " needs a positive step");
    }
  }
};

inline double sample_value(const HyperRange& r, Rng& rng) {
  switch (r.dist) {
    case Dist::uniform: return rng.uniform(r.lo, r.hi);
    case Dist::log_uniform: return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
    case Dist::integer: {
      const auto n = static_cast<std::uint64_t>(std::floor((r.hi - r.lo) / r.step + 1e-9)) + 1;
      return r.lo + r.step * static_cast<double>(rng.below(n));
    }
  }
  return r.lo;
}

/// One independent draw per key, in the space's key order.
inline std::map<std::string, double> sample_hyperparams(const SearchSpace& space, Rng& rng) {
  space.validate();
  std::map<std::string, double> out;
  for (const auto& r : space.ranges) out[r.name] = sample_value(r, rng);
  return out;
}

}  // namespace udabench::harness
