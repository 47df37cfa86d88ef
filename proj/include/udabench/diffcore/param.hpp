#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench {

/// Trainable tensor with its gradient slot and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool has_grad = false;  // set by Graph::backward when the loss reaches this parameter
  Tensor first_moment;
  Tensor second_moment;
  std::int64_t step = 0;
};

/// Named, ordered list of parameters. Element addresses stay stable as long as
/// no parameter is added, which is what graphs binding these parameters rely on.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::string prefix) : prefix_(std::move(prefix)) {}

  Parameter& add(std::string name, Tensor value) {
    if (find(name) != nullptr) throw ConfigError("duplicate parameter name: " + name);
    params_.push_back(Parameter{std::move(name), std::move(value), {}, false, {}, {}, 0});
    return params_.back();
  }

  Parameter* find(std::string_view name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Parameter* find(std::string_view name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  Parameter& at(std::string_view name) {
    if (auto* p = find(name)) return *p;
    throw ConfigError("no parameter named " + std::string(name));
  }
  const Parameter& at(std::string_view name) const {
    if (const auto* p = find(name)) return *p;
    throw ConfigError("no parameter named " + std::string(name));
  }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  /// Total number of scalar weights.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  const std::string& prefix() const { return prefix_; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Parameter*> pointers() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

 private:
  std::string prefix_;
  std::vector<Parameter> params_;
};

}  // namespace udabench
