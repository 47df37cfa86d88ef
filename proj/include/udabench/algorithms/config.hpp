#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"

namespace udabench::algorithms {

enum class Algo {
  source_only, dann, dc, cdan, mmd, jmmd, coral, mcd, swd, minent, im, itl, mcc, bsp, bnm, afn, atdoc, rtn
};

inline const std::vector<std::pair<Algo, std::string>>& algo_names() {
  static const std::vector<std::pair<Algo, std::string>> names = {
      {Algo::source_only, "SourceOnly"}, {Algo::dann, "DANN"},     {Algo::dc, "DC"},
      {Algo::cdan, "CDAN"},              {Algo::mmd, "MMD"},       {Algo::jmmd, "JMMD"},
      {Algo::coral, "CORAL"},            {Algo::mcd, "MCD"},       {Algo::swd, "SWD"},
      {Algo::minent, "MinEnt"},          {Algo::im, "IM"},         {Algo::itl, "ITL"},
      {Algo::mcc, "MCC"},                {Algo::bsp, "BSP"},       {Algo::bnm, "BNM"},
      {Algo::afn, "AFN"},                {Algo::atdoc, "ATDOC"},   {Algo::rtn, "RTN"},
  };
  return names;
}

inline std::string to_string(Algo a) {
  for (const auto& [k, n] : algo_names())
    if (k == a) return n;
  return "?";
}

/// Algorithms that may be stacked on top of DANN ("X-DANN").
inline bool combines_with_dann(Algo a) {
  return a == Algo::afn || a == Algo::atdoc || a == Algo::bnm || a == Algo::bsp || a == Algo::im ||
         a == Algo::mcc;
}

/// Algorithms whose losses need features distinct from the softmax output.
inline bool accepts_fl8(Algo a) {
  return !(a == Algo::mcd || a == Algo::swd || a == Algo::rtn || a == Algo::cdan || a == Algo::jmmd);
}

enum class Dist { uniform, log_uniform, integer };

struct HyperRange {
  std::string name;
  Dist dist = Dist::uniform;
  double lo = 0.0;
  double hi = 1.0;
  double step = 1.0;  // integer grid spacing

  bool contains(double v) const {
    if (!(v >= lo && v <= hi)) return false;
    if (dist != Dist::integer) return true;
    const double k = (v - lo) / step;
    return std::abs(k - std::round(k)) < 1e-9;
  }
};

/// The search space of one algorithm (learning rate excluded).
inline std::vector<HyperRange> search_ranges(Algo a) {
  const HyperRange L{"lambda_L"};
  switch (a) {
    case Algo::source_only: return {};
    case Algo::dann: return {{"lambda_D"}, {"lambda_grl", Dist::log_uniform, 0.1, 10.0}, L};
    case Algo::dc:
    case Algo::cdan: return {{"lambda_D"}, {"lambda_G"}, L};
    case Algo::mmd:
    case Algo::jmmd: return {{"lambda_F"}, L, {"gamma_exp", Dist::integer, 1, 8, 1}};
    case Algo::coral: return {{"lambda_F"}, L};
    case Algo::mcd:
    case Algo::swd: return {{"N_mcd", Dist::integer, 1, 10, 1}, L, {"lambda_disc"}};
    case Algo::minent: return {{"lambda_ent"}, L};
    case Algo::im: return {{"lambda_imax"}, L};
    case Algo::itl: return {{"lambda_imax"}, {"lambda_imin"}, L};
    case Algo::mcc: return {{"lambda_mcc"}, {"T_mcc", Dist::uniform, 0.2, 5.0}, L};
    case Algo::bsp: return {{"lambda_bsp", Dist::log_uniform, 1e-6, 1.0}, L};
    case Algo::bnm: return {{"lambda_bnm"}, L};
    case Algo::afn: return {{"lambda_afn", Dist::log_uniform, 1e-6, 1.0}, {"S_afn", Dist::uniform, 0.0, 2.0}, L};
    case Algo::atdoc: return {{"lambda_atdoc"}, {"k_atdoc", Dist::integer, 5, 25, 5}, L};
    case Algo::rtn: return {{"lambda_F"}, L, {"lambda_ent"}};
  }
  return {};
}

inline HyperRange lr_range() { return {"lr", Dist::log_uniform, 1e-5, 0.1}; }

/// Knobs that are fixed per experiment rather than searched.
struct AlgorithmOptions {
  std::size_t swd_projections = 128;
  std::size_t cdan_dim = 64;
  int rtn_gamma_exp = 2;
  std::size_t bsp_k = 1;
};

struct AlgorithmConfig {
  Algo algorithm = Algo::source_only;
  bool with_dann = false;                 // X-DANN combination
  std::map<std::string, double> hparams;  // searched values
  std::map<std::string, double> dann;     // frozen lambda_D / lambda_grl for X-DANN
  AlgorithmOptions options;

  std::string name() const { return to_string(algorithm) + (with_dann ? "-DANN" : ""); }

  double get(const std::string& key) const {
    if (algorithm == Algo::source_only && key == "lambda_L") return hparams.count(key) ? hparams.at(key) : 1.0;
    auto it = hparams.find(key);
    if (it == hparams.end()) throw ConfigError(name() + ": missing hyperparameter " + key);
    return it->second;
  }

  double frozen_dann(const std::string& key) const {
    auto it = dann.find(key);
    if (it == dann.end()) throw ConfigError(name() + ": missing frozen DANN hyperparameter " + key);
    return it->second;
  }

  bool uses_discriminator() const {
    return with_dann || algorithm == Algo::dann || algorithm == Algo::dc || algorithm == Algo::cdan ||
           algorithm == Algo::itl;
  }

  /// Every required key present and inside its search interval; no unknown keys.
  void validate() const {
    if (with_dann && !combines_with_dann(algorithm)) {
      throw ConfigError(name() + " is not a supported DANN combination");
    }
    const auto ranges = search_ranges(algorithm);
    for (const auto& r : ranges) {
      const double v = get(r.name);
      if (!r.contains(v)) {
        throw ConfigError(name() + ": " + r.name + "=" + std::to_string(v) + " outside its search interval");
      }
    }
    for (const auto& [k, v] : hparams) {
      const bool known = std::any_of(ranges.begin(), ranges.end(), [&](const HyperRange& r) { return r.name == k; });
      if (!known && !(algorithm == Algo::source_only && k == "lambda_L")) {
        throw ConfigError(name() + ": unknown hyperparameter " + k);
      }
    }
    if (with_dann) {
      for (const auto& r : search_ranges(Algo::dann)) {
        if (r.name == "lambda_L") continue;
        const double v = frozen_dann(r.name);
        if (!r.contains(v)) throw ConfigError(name() + ": frozen DANN " + r.name + " outside its interval");
      }
    }
  }
};

inline std::vector<std::string> known_algorithm_ids() {
  std::vector<std::string> out;
  for (const auto& [k, n] : algo_names()) out.push_back(n);
  for (const auto& [k, n] : algo_names())
    if (combines_with_dann(k)) out.push_back(n + "-DANN");
  return out;
}

/// Parses "MCC", "MCC-DANN", "SourceOnly", ...
inline AlgorithmConfig parse_algorithm(const std::string& id) {
  AlgorithmConfig c;
  std::string base = id;
  if (id.size() > 5 && id.compare(id.size() - 5, 5, "-DANN") == 0) {
    base = id.substr(0, id.size() - 5);
    c.with_dann = true;
  }
  for (const auto& [k, n] : algo_names()) {
    if (n == base) {
      c.algorithm = k;
      if (c.with_dann && !combines_with_dann(k)) break;
      return c;
    }
  }
  std::string known;
  for (const auto& n : known_algorithm_ids()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown algorithm '" + id + "' (known: " + known + ")");
}

}  // namespace udabench::algorithms
