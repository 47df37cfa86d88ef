#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/diffcore/graph.hpp"
#include "udabench/diffcore/param.hpp"

namespace udabench::models {

/// Where adaptation losses tap the network: trunk output, penultimate
/// classifier activation, or the softmax output.
enum class FeatureLayer { fl0, fl6, fl8 };

inline std::string to_string(FeatureLayer f) {
  switch (f) {
    case FeatureLayer::fl0: return "FL0";
    case FeatureLayer::fl6: return "FL6";
    case FeatureLayer::fl8: return "FL8";
  }
  return "?";
}

inline FeatureLayer parse_feature_layer(std::string_view s) {
  if (s == "FL0" || s == "fl0" || s == "0") return FeatureLayer::fl0;
  if (s == "FL6" || s == "fl6" || s == "6") return FeatureLayer::fl6;
  if (s == "FL8" || s == "fl8" || s == "8") return FeatureLayer::fl8;
  throw ConfigError("unknown feature layer '" + std::string(s) + "' (expected FL0, FL6 or FL8)");
}

/// Layer widths of a plain ReLU MLP (input, hidden..., output).
struct MlpSpec {
  std::vector<std::size_t> widths;
  double dropout = 0.0;

  /// Weights plus biases of every Linear layer.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) n += widths[i] * widths[i + 1] + widths[i + 1];
    return n;
  }
};

/// Small default widths; the layer stack is fixed, only sizes vary.
struct ModelDims {
  std::size_t input_dim = 2;
  std::size_t trunk_width = 32;
  std::array<std::size_t, 2> classifier_hidden = {32, 16};
  std::size_t discriminator_hidden = 64;
  std::size_t num_classes = 2;
  double dropout = 0.5;
};

namespace detail {

inline void add_linear(ParamSet& set, const std::string& name, std::size_t in, std::size_t out,
                       Rng& rng) {
  if (in == 0 || out == 0) throw ConfigError("linear layer " + name + " needs positive widths");
  // Kaiming-uniform for ReLU: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  Tensor w(in, out);
  for (auto& v : w.data()) v = rng.uniform(-bound, bound);
  set.add(name + ".weight", std::move(w));
  set.add(name + ".bias", Tensor(1, out));
}

}  // namespace detail

/// x·W + b for the layer named `name` in `set`.
inline Var linear(Graph& g, Var x, ParamSet& set, std::string_view name) {
  const std::string base(name);
  return add(matmul(x, g.param(set.at(base + ".weight"))), g.param(set.at(base + ".bias")));
}

/// input → width → width, ReLU after both layers.
inline ParamSet build_trunk(std::size_t input_dim, std::size_t width, Rng& rng) {
  ParamSet set("trunk");
  detail::add_linear(set, "fc1", input_dim, width, rng);
  detail::add_linear(set, "fc2", width, width, rng);
  return set;
}

/// Linear(h1) → ReLU → Dropout → Linear(h2) → ReLU → Dropout → Linear(C) → Softmax.
/// Dropout has no parameters; its probability lives in ModelDims.
inline ParamSet build_classifier(std::size_t feature_dim, std::size_t num_classes,
                                 std::array<std::size_t, 2> hidden, Rng& rng) {
  ParamSet set("classifier");
  detail::add_linear(set, "fc1", feature_dim, hidden[0], rng);
  detail::add_linear(set, "fc2", hidden[0], hidden[1], rng);
  detail::add_linear(set, "fc3", hidden[1], num_classes, rng);
  return set;
}

/// Linear(h) → ReLU → Linear(h) → ReLU → Linear(1). Same depth for every feature layer.
inline ParamSet build_discriminator(std::size_t feature_dim, std::size_t hidden, Rng& rng) {
  ParamSet set("discriminator");
  detail::add_linear(set, "fc1", feature_dim, hidden, rng);
  detail::add_linear(set, "fc2", hidden, hidden, rng);
  detail::add_linear(set, "fc3", hidden, 1, rng);
  return set;
}

/// Residual block on logits for RTN: C → C → C. The output layer starts at
/// zero so the block is initially the identity shortcut.
inline ParamSet build_residual_block(std::size_t num_classes, Rng& rng) {
  ParamSet set("residual");
  detail::add_linear(set, "fc1", num_classes, num_classes, rng);
  detail::add_linear(set, "fc2", num_classes, num_classes, rng);
  set.at("fc2.weight").value.fill(0.0);
  return set;
}

inline Var trunk_forward(Graph& g, ParamSet& trunk, Var x) {
  return relu(linear(g, relu(linear(g, x, trunk, "fc1")), trunk, "fc2"));
}

inline Var discriminator_forward(Graph& g, ParamSet& disc, Var features) {
  Var h = relu(linear(g, features, disc, "fc1"));
  h = relu(linear(g, h, disc, "fc2"));
  return linear(g, h, disc, "fc3");
}

inline Var residual_forward(Graph& g, ParamSet& block, Var logits) {
  return linear(g, relu(linear(g, logits, block, "fc1")), block, "fc2");
}

}  // namespace udabench::models
