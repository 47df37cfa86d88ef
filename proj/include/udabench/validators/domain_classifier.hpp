#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/diffcore/adam.hpp"
#include "udabench/diffcore/graph.hpp"
#include "udabench/models/mlp.hpp"

namespace udabench::validators {

struct DomainClassifierOptions {
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t hidden = 64;
  std::size_t batch = 64;  // per domain
  std::uint64_t seed = 0;
};

/// Source-vs-target discriminator used by DEV. Inputs are standardized with
/// statistics of the pooled training features.
class DomainClassifier {
 public:
  DomainClassifier(ParamSet net, std::vector<double> mean, std::vector<double> inv_std)
      : net_(std::move(net)), mean_(std::move(mean)), inv_std_(std::move(inv_std)) {}

  /// P(target | feature row) for every row.
  std::vector<double> target_probability(const Tensor& features) {
    Graph g;
    Var z = models::discriminator_forward(g, net_, g.input(standardize(features)));
    std::vector<double> q(features.rows());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 1.0 / (1.0 + std::exp(-z.value()(i, 0)));
    return q;
  }

  Tensor standardize(const Tensor& x) const { return standardized(x, mean_, inv_std_); }

  static Tensor standardized(const Tensor& x, const std::vector<double>& mean, const std::vector<double>& inv_std) {
    if (x.cols() != mean.size()) throw StructuralError("domain classifier: feature width mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - mean[j]) * inv_std[j];
    return out;
  }

 private:
  ParamSet net_;
  std::vector<double> mean_;
  std::vector<double> inv_std_;
};

inline DomainClassifier train_domain_classifier(const Tensor& src, const Tensor& tgt,
                                                const DomainClassifierOptions& opt = {}) {
  if (src.rows() == 0 || tgt.rows() == 0) throw InputError("domain classifier needs both domains non-empty");
  if (src.cols() != tgt.cols()) throw StructuralError("domain classifier: source/target widths differ");
  const std::size_t d = src.cols();
  const std::size_t n_all = src.rows() + tgt.rows();
  std::vector<double> mu(d, 0.0), inv_std(d, 1.0);
  for (const Tensor* t : {&src, &tgt})
    for (std::size_t i = 0; i < t->rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) mu[j] += (*t)(i, j);
  for (auto& m : mu) m /= static_cast<double>(n_all);
  std::vector<double> var(d, 0.0);
  for (const Tensor* t : {&src, &tgt})
    for (std::size_t i = 0; i < t->rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) var[j] += ((*t)(i, j) - mu[j]) * ((*t)(i, j) - mu[j]);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n_all));
    inv_std[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }

  Rng rng(opt.seed);
  Rng init = rng.derive(1);
  const Tensor xs = DomainClassifier::standardized(src, mu, inv_std);
  const Tensor xt = DomainClassifier::standardized(tgt, mu, inv_std);
  ParamSet net = models::build_discriminator(d, opt.hidden, init);

  std::vector<std::size_t> is(xs.rows()), it(xt.rows());
  std::iota(is.begin(), is.end(), 0);
  std::iota(it.begin(), it.end(), 0);
  const std::size_t bs = std::min(opt.batch, xs.rows()), bt = std::min(opt.batch, xt.rows());
  const std::size_t steps = (std::max(xs.rows(), xt.rows()) + opt.batch - 1) / opt.batch;
  std::size_t ps = 0, pt = 0;
  auto take = [&rng](std::vector<std::size_t>& order, std::size_t& pos, std::size_t k) {
    std::vector<std::size_t> out(k);
    for (auto& o : out) {
      if (pos == 0) rng.shuffle(std::span<std::size_t>(order));
      o = order[pos];
      pos = (pos + 1) % order.size();
    }
    return out;
  };

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps; ++s) {
      const auto a = take(is, ps, bs);
      const auto b = take(it, pt, bt);
      Graph g;
      Var zs = models::discriminator_forward(g, net, g.input(xs.gather_rows(std::span<const std::size_t>(a))));
      Var zt = models::discriminator_forward(g, net, g.input(xt.gather_rows(std::span<const std::size_t>(b))));
      // target is the positive class
      Var loss = scale(mean(softplus(zs)) + mean(softplus(neg(zt))), 0.5);
      g.backward(loss);
      adam_step(net, opt.lr);
    }
  }
  return DomainClassifier(std::move(net), std::move(mu), std::move(inv_std));
}

}  // namespace udabench::validators
