#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "udabench/algorithms/config.hpp"
#include "udabench/models/mlp.hpp"

namespace udabench::harness {

struct Budget {
  std::size_t epochs = 60;
  std::size_t patience = 10;
  std::size_t val_interval = 1;
  std::size_t batch = 64;  // per domain
};

struct ValidatorOptions {
  double snd_tau = 0.05;
  std::size_t dev_epochs = 200;
  double dev_lr = 1e-3;
};

inline const std::vector<std::string>& known_validators() {
  static const std::vector<std::string> v = {"oracle", "IM", "SND", "NegSND", "DEV"};
  return v;
}

struct TrialConfig {
  std::string task = "moons-45";
  algorithms::AlgorithmConfig algorithm;
  models::FeatureLayer feature_layer = models::FeatureLayer::fl0;
  double lr_max = 1e-3;
  std::uint64_t seed = 0;
  Budget budget;
  std::vector<std::string> validators = {"IM", "SND", "NegSND", "DEV", "oracle"};
  std::string selection = "IM";  // drives early stopping
  ValidatorOptions validator_options;
  std::size_t trunk_width = 32;
  std::array<std::size_t, 2> classifier_hidden = {32, 16};
  std::size_t discriminator_hidden = 64;

  void validate() const {
    if (!(lr_max >= 1e-5 && lr_max <= 0.1)) throw ConfigError("lr_max must lie in [1e-5, 0.1]");
    if (budget.epochs == 0 || budget.val_interval == 0 || budget.batch == 0) {
      throw ConfigError("epochs, val_interval and batch must be positive");
    }
    if (validators.empty()) throw ConfigError("at least one validator is required");
    for (const auto& v : validators) {
      bool known = false;
      for (const auto& k : known_validators()) known = known || k == v;
      if (!known) throw ConfigError("unknown validator '" + v + "'");
    }
    bool has_sel = false;
    for (const auto& v : validators) has_sel = has_sel || v == selection;
    if (!has_sel) throw ConfigError("selection validator '" + selection + "' is not among the configured validators");
    algorithm.validate();
  }
};

// JSON field names mirror the struct members one to one.

inline nlohmann::json to_json(const TrialConfig& c) {
  nlohmann::json j;
  j["task"] = c.task;
  j["algorithm"] = c.algorithm.name();
  j["hparams"] = c.algorithm.hparams;
  if (!c.algorithm.dann.empty()) j["dann"] = c.algorithm.dann;
  j["feature_layer"] = models::to_string(c.feature_layer);
  j["lr_max"] = c.lr_max;
  j["seed"] = c.seed;
  j["budget"] = {{"epochs", c.budget.epochs},
                 {"patience", c.budget.patience},
                 {"val_interval", c.budget.val_interval},
                 {"batch", c.budget.batch}};
  j["validators"] = c.validators;
  j["selection"] = c.selection;
  j["validator_options"] = {{"snd_tau", c.validator_options.snd_tau},
                            {"dev_epochs", c.validator_options.dev_epochs},
                            {"dev_lr", c.validator_options.dev_lr}};
  j["trunk_width"] = c.trunk_width;
  j["classifier_hidden"] = c.classifier_hidden;
  j["discriminator_hidden"] = c.discriminator_hidden;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline TrialConfig trial_config_from_json(const nlohmann::json& j, TrialConfig c = {}) {
  static const std::vector<std::string> keys = {
      "task", "algorithm", "hparams", "dann", "feature_layer", "lr_max", "seed", "budget", "validators",
      "selection", "validator_options", "trunk_width", "classifier_hidden", "discriminator_hidden"};
  if (!j.is_object()) throw ConfigError("trial config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    if (j.contains("task")) c.task = j["task"].get<std::string>();
    if (j.contains("algorithm")) {
      auto parsed = algorithms::parse_algorithm(j["algorithm"].get<std::string>());
      c.algorithm.algorithm = parsed.algorithm;
      c.algorithm.with_dann = parsed.with_dann;
    }
    if (j.contains("hparams")) c.algorithm.hparams = j["hparams"].get<std::map<std::string, double>>();
    if (j.contains("dann")) c.algorithm.dann = j["dann"].get<std::map<std::string, double>>();
    if (j.contains("feature_layer")) c.feature_layer = models::parse_feature_layer(j["feature_layer"].get<std::string>());
    if (j.contains("lr_max")) c.lr_max = j["lr_max"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("budget")) {
      const auto& b = j["budget"];
      c.budget.epochs = b.value("epochs", c.budget.epochs);
      c.budget.patience = b.value("patience", c.budget.patience);
      c.budget.val_interval = b.value("val_interval", c.budget.val_interval);
      c.budget.batch = b.value("batch", c.budget.batch);
    }
    if (j.contains("validators")) c.validators = j["validators"].get<std::vector<std::string>>();
    if (j.contains("selection")) c.selection = j["selection"].get<std::string>();
    if (j.contains("validator_options")) {
      const auto& v = j["validator_options"];
      c.validator_options.snd_tau = v.value("snd_tau", c.validator_options.snd_tau);
      c.validator_options.dev_epochs = v.value("dev_epochs", c.validator_options.dev_epochs);
      c.validator_options.dev_lr = v.value("dev_lr", c.validator_options.dev_lr);
    }
    if (j.contains("trunk_width")) c.trunk_width = j["trunk_width"].get<std::size_t>();
    if (j.contains("classifier_hidden")) c.classifier_hidden = j["classifier_hidden"].get<std::array<std::size_t, 2>>();
    if (j.contains("discriminator_hidden")) c.discriminator_hidden = j["discriminator_hidden"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trial config: ") + e.what());
  }
  return c;
}

}  // namespace udabench::harness
