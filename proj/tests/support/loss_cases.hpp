#pragma once

// Random small instances of every adaptation loss, each checked against
// central differences. Inputs that must be probabilities enter as logits
// through a softmax so perturbations stay on the simplex.

#include <functional>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "udabench/algorithms/losses.hpp"

namespace udabench::testing {

struct LossCase {
  std::string name;
  std::function<double(Rng&)> run;  // returns max relative error of one random instance
};

namespace detail {

inline std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

inline std::vector<int> labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(classes));
  return y;
}

inline Var leaf(Graph& g, Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  return g.input(random_tensor(rng, r, c, scale), true);
}

/// Tiny two-layer discriminator whose weights are gradient-checked leaves.
struct TinyDisc {
  Var w1, b1, w2;
  TinyDisc(Graph& g, Rng& rng, std::size_t in, std::size_t hidden)
      : w1(leaf(g, rng, in, hidden, 0.7)), b1(leaf(g, rng, 1, hidden, 0.3)), w2(leaf(g, rng, hidden, 1, 0.7)) {}
  // softplus instead of relu keeps the finite-difference check away from kinks
  Var operator()(Var f) const { return matmul(softplus(matmul(f, w1) + b1), w2); }
  std::vector<Var> leaves() const { return {w1, b1, w2}; }
};

}  // namespace detail

inline std::vector<LossCase> loss_cases() {
  using namespace algorithms;
  using detail::dim;
  using detail::leaf;
  std::vector<LossCase> cases;

  cases.push_back({"src_ce", [](Rng& rng) {
                     Graph g;
                     const std::size_t n = dim(rng, 2, 8), c = dim(rng, 2, 6);
                     Var z = leaf(g, rng, n, c);
                     auto y = detail::labels(rng, n, c);
                     Var loss = src_ce_loss(row_softmax(z), y, 0.3 + rng.uniform());
                     return check_gradients(g, loss, {z}).max_rel_error;
                   }});

  cases.push_back({"dann", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 6), nt = dim(rng, 2, 6), d = dim(rng, 2, 6);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d);
                     detail::TinyDisc disc(g, rng, d, dim(rng, 2, 5));
                     const double grl = 0.1 + 3.0 * rng.uniform();
                     Var loss = dann_loss(fs, ft, disc, 0.2 + rng.uniform(), grl);
                     std::vector<Var> leaves = {fs, ft};
                     std::vector<double> scales = {-grl, -grl};
                     for (Var v : disc.leaves()) leaves.push_back(v), scales.push_back(1.0);
                     return check_gradients(g, loss, leaves, scales).max_rel_error;
                   }});

  cases.push_back({"dc", [](Rng& rng) {
                     Graph g;
                     const std::size_t n = dim(rng, 2, 8), d = dim(rng, 2, 6);
                     Var f = leaf(g, rng, n, d);
                     detail::TinyDisc disc(g, rng, d, dim(rng, 2, 5));
                     Var loss = dc_loss(domain_probs(disc(f)), 0.2 + rng.uniform());
                     std::vector<Var> leaves = {f};
                     for (Var v : disc.leaves()) leaves.push_back(v);
                     return check_gradients(g, loss, leaves).max_rel_error;
                   }});

  cases.push_back({"cdan", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 5), nt = dim(rng, 2, 5), d = dim(rng, 2, 5),
                                       c = dim(rng, 2, 4), k = dim(rng, 2, 8);
                     auto proj = make_cdan_projection(d, c, k, rng);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d);
                     Var zs = leaf(g, rng, ns, c), zt = leaf(g, rng, nt, c);
                     detail::TinyDisc disc(g, rng, k, dim(rng, 2, 4));
                     Var hs = cdan_combine(fs, row_softmax(zs), proj);
                     Var ht = cdan_combine(ft, row_softmax(zt), proj);
                     Var loss = domain_bce(disc(hs), disc(ht), rng.bernoulli(0.5));
                     std::vector<Var> leaves = {fs, ft, zs, zt};
                     for (Var v : disc.leaves()) leaves.push_back(v);
                     return check_gradients(g, loss, leaves).max_rel_error;
                   }});

  cases.push_back({"mmd", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 6), nt = dim(rng, 2, 6), d = dim(rng, 1, 5);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d, 1.5);
                     Var loss = mmd_loss(fs, ft, static_cast<int>(dim(rng, 1, 8)), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {fs, ft}).max_rel_error;
                   }});

  cases.push_back({"jmmd", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 6), nt = dim(rng, 2, 6), d = dim(rng, 1, 5), c = dim(rng, 2, 4);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d, 1.5);
                     Var zs = leaf(g, rng, ns, c), zt = leaf(g, rng, nt, c);
                     Var loss = jmmd_loss({fs, row_softmax(zs)}, {ft, row_softmax(zt)},
                                          static_cast<int>(dim(rng, 1, 8)), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {fs, ft, zs, zt}).max_rel_error;
                   }});

  cases.push_back({"coral", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 8), nt = dim(rng, 2, 8), d = dim(rng, 1, 6);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d, 2.0);
                     Var loss = coral_loss(fs, ft, 0.2 + rng.uniform());
                     return check_gradients(g, loss, {fs, ft}).max_rel_error;
                   }});

  cases.push_back({"mcd_discrepancy", [](Rng& rng) {
                     Graph g;
                     const std::size_t n = dim(rng, 2, 8), c = dim(rng, 2, 5);
                     Var z1 = leaf(g, rng, n, c), z2 = leaf(g, rng, n, c);
                     Var loss = mcd_discrepancy(row_softmax(z1), row_softmax(z2));
                     return check_gradients(g, loss, {z1, z2}).max_rel_error;
                   }});

  cases.push_back({"swd_discrepancy", [](Rng& rng) {
                     Graph g;
                     const std::size_t n = dim(rng, 2, 8), c = dim(rng, 2, 5);
                     Var z1 = leaf(g, rng, n, c), z2 = leaf(g, rng, n, c);
                     Tensor proj = random_projections(c, dim(rng, 1, 16), rng);
                     Var loss = swd_discrepancy(row_softmax(z1), row_softmax(z2), proj);
                     return check_gradients(g, loss, {z1, z2}).max_rel_error;
                   }});

  cases.push_back({"minent", [](Rng& rng) {
                     Graph g;
                     Var z = leaf(g, rng, dim(rng, 1, 8), dim(rng, 2, 6));
                     Var loss = minent_loss(row_softmax(z), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {z}).max_rel_error;
                   }});

  cases.push_back({"im", [](Rng& rng) {
                     Graph g;
                     Var z = leaf(g, rng, dim(rng, 1, 8), dim(rng, 2, 6));
                     Var loss = im_loss(row_softmax(z), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {z}).max_rel_error;
                   }});

  cases.push_back({"itl", [](Rng& rng) {
                     Graph g;
                     const std::size_t n = dim(rng, 2, 8), d = dim(rng, 2, 5);
                     Var z = leaf(g, rng, n, dim(rng, 2, 6));
                     Var f = leaf(g, rng, n, d);
                     detail::TinyDisc disc(g, rng, d, dim(rng, 2, 4));
                     Var loss = itl_loss(row_softmax(z), domain_probs(disc(f)), rng.uniform(), rng.uniform());
                     std::vector<Var> leaves = {z, f};
                     for (Var v : disc.leaves()) leaves.push_back(v);
                     return check_gradients(g, loss, leaves).max_rel_error;
                   }});

  cases.push_back({"mcc", [](Rng& rng) {
                     Graph g;
                     Var z = leaf(g, rng, dim(rng, 2, 8), dim(rng, 2, 6), 2.0);
                     Var loss = mcc_loss(z, rng.uniform(0.2, 5.0), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {z}).max_rel_error;
                   }});

  cases.push_back({"bsp", [](Rng& rng) {
                     Graph g;
                     Var fs = leaf(g, rng, dim(rng, 2, 8), 4), ft = leaf(g, rng, dim(rng, 2, 8), 4);
                     Var loss = bsp_loss(fs, ft, 0.5, dim(rng, 1, 2));
                     return check_gradients(g, loss, {fs, ft}).max_rel_error;
                   }});

  cases.push_back({"bnm", [](Rng& rng) {
                     Graph g;
                     Var z = leaf(g, rng, dim(rng, 2, 8), dim(rng, 2, 5), 2.0);
                     Var loss = bnm_loss(row_softmax(z), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {z}).max_rel_error;
                   }});

  cases.push_back({"afn", [](Rng& rng) {
                     Graph g;
                     const std::size_t d = dim(rng, 1, 6);
                     Var fs = leaf(g, rng, dim(rng, 1, 6), d), ft = leaf(g, rng, dim(rng, 1, 6), d);
                     Var loss = afn_loss(fs, ft, rng.uniform(0.0, 2.0), 0.2 + rng.uniform());
                     return check_gradients(g, loss, {fs, ft}).max_rel_error;
                   }});

  cases.push_back({"atdoc", [](Rng& rng) {
                     Graph g;
                     const std::size_t bank_n = dim(rng, 12, 30), d = dim(rng, 2, 5), c = dim(rng, 2, 5);
                     const std::size_t n = dim(rng, 2, 6), k = 5 * dim(rng, 1, 2);
                     AtdocBank bank = AtdocBank::init(random_tensor(rng, bank_n, d), c);
                     Tensor probs(bank_n, c);
                     for (std::size_t i = 0; i < bank_n; ++i) probs(i, rng.below(c)) = 1.0;
                     std::vector<std::size_t> all(bank_n);
                     for (std::size_t i = 0; i < bank_n; ++i) all[i] = i;
                     bank.update(all, bank.features, probs);
                     std::vector<std::size_t> idx(n);
                     for (auto& v : idx) v = rng.below(bank_n);
                     Var f = leaf(g, rng, n, d);
                     Var z = leaf(g, rng, n, c);
                     Var loss = atdoc_loss(f, row_softmax(z), idx, bank, k, 0.2 + rng.uniform());
                     return check_gradients(g, loss, {f, z}).max_rel_error;
                   }});

  cases.push_back({"rtn", [](Rng& rng) {
                     Graph g;
                     const std::size_t ns = dim(rng, 2, 6), nt = dim(rng, 2, 6), c = dim(rng, 2, 4), d = dim(rng, 1, 4);
                     Var zs = leaf(g, rng, ns, c), zt = leaf(g, rng, nt, c);
                     Var w1 = leaf(g, rng, c, c, 0.5), w2 = leaf(g, rng, c, c, 0.5);
                     Var fs = leaf(g, rng, ns, d), ft = leaf(g, rng, nt, d);
                     auto y = detail::labels(rng, ns, c);
                     Var adjusted = zs + matmul(softplus(matmul(zs, w1)), w2);
                     Var loss = src_ce_loss(row_softmax(adjusted), y, rng.uniform()) +
                                minent_loss(row_softmax(zt), rng.uniform()) + mmd_loss(fs, ft, 2, rng.uniform());
                     return check_gradients(g, loss, {zs, zt, w1, w2, fs, ft}).max_rel_error;
                   }});

  return cases;
}

}  // namespace udabench::testing
