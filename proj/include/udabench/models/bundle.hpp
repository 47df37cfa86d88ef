#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "udabench/core/binary_io.hpp"
#include "udabench/models/mlp.hpp"

namespace udabench::models {

/// Trunk, one or more classifiers, and the optional discriminator / residual
/// block an algorithm needs. Copying a bundle copies every weight and Adam state.
struct ModelBundle {
  ModelDims dims;
  FeatureLayer layer = FeatureLayer::fl0;
  bool allow_fl8 = true;
  ParamSet trunk;
  std::vector<ParamSet> classifiers;
  std::optional<ParamSet> discriminator;
  std::optional<ParamSet> residual;

  std::size_t feature_width() const {
    switch (layer) {
      case FeatureLayer::fl0: return dims.trunk_width;
      case FeatureLayer::fl6: return dims.classifier_hidden[1];
      case FeatureLayer::fl8: return dims.num_classes;
    }
    return 0;
  }
};

/// Trunk plus one classifier: the shape of a source-only model.
inline ModelBundle build_bundle(const ModelDims& dims, Rng& rng) {
  ModelBundle b;
  b.dims = dims;
  b.trunk = build_trunk(dims.input_dim, dims.trunk_width, rng);
  b.classifiers.push_back(
      build_classifier(dims.trunk_width, dims.num_classes, dims.classifier_hidden, rng));
  return b;
}

inline void add_discriminator(ModelBundle& b, std::size_t input_width, Rng& rng) {
  b.discriminator = build_discriminator(input_width, b.dims.discriminator_hidden, rng);
}

inline void add_classifier(ModelBundle& b, Rng& rng) {
  b.classifiers.push_back(
      build_classifier(b.dims.trunk_width, b.dims.num_classes, b.dims.classifier_hidden, rng));
}

/// Activations of one forward pass. `logits[k]` / `preds[k]` belong to classifier k.
struct Taps {
  Var fl0;
  Var fl6;
  Var features;
  std::vector<Var> logits;
  std::vector<Var> preds;
};

/// Runs trunk and classifiers. In FL6 mode the first two classifier layers of
/// classifier 0 belong to the trunk and every classifier reduces to its final
/// Linear layer; in FL8 mode the softmax output doubles as the feature tap.
inline Taps forward_with_taps(Graph& g, ModelBundle& b, Var x, bool training, Rng& rng) {
  if (b.layer == FeatureLayer::fl8 && !b.allow_fl8) {
    throw ConfigError("feature layer FL8 is not supported by this algorithm");
  }
  if (x.cols() != b.dims.input_dim) {
    throw StructuralError("input width " + std::to_string(x.cols()) + " does not match trunk input " +
                          std::to_string(b.dims.input_dim));
  }
  Taps t;
  t.fl0 = trunk_forward(g, b.trunk, x);
  const double p = b.dims.dropout;
  auto hidden = [&](ParamSet& cls) {
    Var h = dropout(relu(linear(g, t.fl0, cls, "fc1")), p, rng, training);
    return dropout(relu(linear(g, h, cls, "fc2")), p, rng, training);
  };
  t.fl6 = hidden(b.classifiers.front());
  for (std::size_t k = 0; k < b.classifiers.size(); ++k) {
    Var h = (k == 0 || b.layer != FeatureLayer::fl0) ? t.fl6 : hidden(b.classifiers[k]);
    Var logits = linear(g, h, b.classifiers[k], "fc3");
    t.logits.push_back(logits);
    t.preds.push_back(row_softmax(logits));
  }
  switch (b.layer) {
    case FeatureLayer::fl0: t.features = t.fl0; break;
    case FeatureLayer::fl6: t.features = t.fl6; break;
    case FeatureLayer::fl8: t.features = t.preds.front(); break;
  }
  return t;
}

/// Classifier heads applied to an externally supplied feature tap (e.g. a
/// detached one). Returns the softmax output of every classifier.
inline std::vector<Var> heads_forward(Graph& g, ModelBundle& b, Var features, bool training, Rng& rng) {
  std::vector<Var> out;
  const double p = b.dims.dropout;
  for (auto& cls : b.classifiers) {
    Var h = features;
    switch (b.layer) {
      case FeatureLayer::fl0:
        h = dropout(relu(linear(g, h, cls, "fc1")), p, rng, training);
        h = dropout(relu(linear(g, h, cls, "fc2")), p, rng, training);
        break;
      case FeatureLayer::fl6: break;
      case FeatureLayer::fl8: throw ConfigError("classifier heads are undefined on FL8 features");
    }
    out.push_back(row_softmax(linear(g, h, cls, "fc3")));
  }
  return out;
}

/// Evaluation-mode outputs of classifier 0.
struct Inference {
  Tensor features;
  Tensor logits;
  Tensor preds;
};

inline Inference infer(ModelBundle& b, const Tensor& x) {
  Graph g;
  Rng unused(0);
  Taps t = forward_with_taps(g, b, g.input(x), false, unused);
  return {t.features.value(), t.logits[0].value(), t.preds[0].value()};
}

/// Parameters that produce the feature tap.
inline std::vector<Parameter*> generator_params(ModelBundle& b) {
  std::vector<Parameter*> out = b.trunk.pointers();
  if (b.layer != FeatureLayer::fl0) {
    ParamSet& c0 = b.classifiers.front();
    for (const char* n : {"fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"}) out.push_back(&c0.at(n));
    if (b.layer == FeatureLayer::fl8) {
      out.push_back(&c0.at("fc3.weight"));
      out.push_back(&c0.at("fc3.bias"));
    }
  }
  return out;
}

/// Parameters downstream of the feature tap for classifier k (empty under FL8).
inline std::vector<Parameter*> classifier_params(ModelBundle& b, std::size_t k) {
  ParamSet& c = b.classifiers.at(k);
  switch (b.layer) {
    case FeatureLayer::fl0: return c.pointers();
    case FeatureLayer::fl6: return {&c.at("fc3.weight"), &c.at("fc3.bias")};
    case FeatureLayer::fl8:
      if (k == 0) return {};
      return {&c.at("fc3.weight"), &c.at("fc3.bias")};
  }
  return {};
}

inline std::vector<Parameter*> all_params(ModelBundle& b) {
  std::vector<Parameter*> out = b.trunk.pointers();
  for (auto& c : b.classifiers)
    for (auto* p : c.pointers()) out.push_back(p);
  if (b.discriminator)
    for (auto* p : b.discriminator->pointers()) out.push_back(p);
  if (b.residual)
    for (auto* p : b.residual->pointers()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint files: "UDAW", u32 version 1, then per parameter
// u16 name length, UTF-8 name, u64 rows, u64 cols, row-major f64, all little-endian.

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline NamedTensors named_tensors(const ModelBundle& b) {
  NamedTensors out;
  auto collect = [&](const ParamSet& set, const std::string& prefix) {
    for (const auto& p : set) out.emplace_back(prefix + "." + p.name, p.value);
  };
  collect(b.trunk, "trunk");
  for (std::size_t k = 0; k < b.classifiers.size(); ++k) collect(b.classifiers[k], "classifier" + std::to_string(k));
  if (b.discriminator) collect(*b.discriminator, "discriminator");
  if (b.residual) collect(*b.residual, "residual");
  return out;
}

inline std::vector<char> encode_weights(const NamedTensors& tensors) {
  std::vector<char> out;
  binary::put_bytes(out, "UDAW", 4);
  binary::put<std::uint32_t>(out, 1);
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw InputError("parameter name too long: " + name);
    binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    binary::put_bytes(out, name.data(), name.size());
    binary::put<std::uint64_t>(out, t.rows());
    binary::put<std::uint64_t>(out, t.cols());
    for (double v : t.data()) binary::put<double>(out, v);
  }
  return out;
}

inline NamedTensors decode_weights(std::vector<char> bytes, const std::string& source) {
  binary::Reader r(std::move(bytes), source);
  r.expect_magic("UDAW");
  r.expect_version(1);
  NamedTensors out;
  while (!r.at_end()) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string name = r.get_string(len, "parameter name");
    const auto rows = r.get<std::uint64_t>("rows");
    const auto cols = r.get<std::uint64_t>("cols");
    if (cols != 0 && rows > r.remaining() / 8 / cols) r.fail("payload of " + name + " exceeds file size");
    Tensor t(rows, cols);
    for (auto& v : t.data()) v = r.get<double>("payload");
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

inline void save_weights(const std::string& path, const ModelBundle& b) {
  binary::write_file(path, encode_weights(named_tensors(b)));
}

/// Loads values into an already-shaped bundle; every stored name must exist with the same shape.
inline void load_weights(const std::string& path, ModelBundle& b) {
  NamedTensors stored = decode_weights(binary::read_file(path), path);
  auto target = [&](const std::string& full) -> Parameter& {
    const auto dot = full.find('.');
    const std::string owner = full.substr(0, dot);
    const std::string name = full.substr(dot + 1);
    ParamSet* set = nullptr;
    if (owner == "trunk") set = &b.trunk;
    else if (owner == "discriminator" && b.discriminator) set = &*b.discriminator;
    else if (owner == "residual" && b.residual) set = &*b.residual;
    else if (owner.rfind("classifier", 0) == 0) {
      const std::size_t k = std::stoul(owner.substr(10));
      if (k < b.classifiers.size()) set = &b.classifiers[k];
    }
    if (set == nullptr || set->find(name) == nullptr) {
      throw FormatError(path + ": unknown parameter " + full, 0);
    }
    return set->at(name);
  };
  for (auto& [name, t] : stored) {
    Parameter& p = target(name);
    if (!p.value.same_shape(t)) {
      throw FormatError(path + ": shape mismatch for " + name + ": " + t.shape() + " vs " + p.value.shape(), 0);
    }
    p.value = std::move(t);
  }
}

}  // namespace udabench::models
