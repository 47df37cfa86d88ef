#pragma once

// Loss terms for every adaptation family. Each function builds graph nodes
// and returns a scalar Var already multiplied by its weight.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/diffcore/graph.hpp"

namespace udabench::algorithms {

/// Added inside every log of a probability.
inline constexpr double kLogEps = 1e-12;

namespace detail {

inline Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
    t(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

inline void require_rows(Var a, std::size_t n, const char* what) {
  if (a.rows() < n) {
    throw InputError(std::string(what) + " needs at least " + std::to_string(n) + " rows, got " +
                     std::to_string(a.rows()));
  }
}

}  // namespace detail

/// Per-row entropy −Σ p log(p+ε), shape (N, 1).
inline Var row_entropy(Var p) { return neg(row_sum(p * log(p, kLogEps))); }

/// Entropy of the mean prediction, 1×1.
inline Var entropy_of_mean(Var p) { return sum(row_entropy(col_mean(p))); }

/// Mean cross entropy of probability rows against integer labels.
inline Var src_ce_loss(Var preds, std::span<const int> labels, double lambda_L) {
  if (labels.size() != preds.rows()) {
    throw InputError("cross entropy: " + std::to_string(preds.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  Var oh = constant(*preds.graph, detail::one_hot(labels, preds.cols()));
  Var ce = scale(sum(oh * log(preds, kLogEps)), -1.0 / static_cast<double>(preds.rows()));
  return scale(ce, lambda_L);
}

// ---------------------------------------------------------------------------
// Adversarial

/// Binary cross entropy with logits; source rows carry label 1, target rows label 0.
inline Var domain_bce(Var logits_src, Var logits_tgt, bool flip = false) {
  Var s = flip ? softplus(logits_src) : softplus(neg(logits_src));
  Var t = flip ? softplus(neg(logits_tgt)) : softplus(logits_tgt);
  const double n = static_cast<double>(logits_src.rows() + logits_tgt.rows());
  return scale(sum(s) + sum(t), 1.0 / n);
}

/// Single-logit discriminator output → 2-way probabilities (p_source, p_target).
inline Var domain_probs(Var logits) {
  Var zero = constant(*logits.graph, Tensor(logits.rows(), 1));
  return row_softmax(concat_cols(logits, zero));
}

/// Discriminator of DANN applied through gradient reversal. `discriminator`
/// maps a feature Var to an (N, 1) logit Var.
template <class Disc>
inline Var dann_loss(Var f_src, Var f_tgt, Disc&& discriminator, double lambda_D, double lambda_grl) {
  Var fs = grad_reverse(f_src, lambda_grl);
  Var ft = grad_reverse(f_tgt, lambda_grl);
  return scale(domain_bce(discriminator(fs), discriminator(ft)), lambda_D);
}

/// Cross entropy of 2-way domain predictions against the uniform target.
inline Var dc_loss(Var domain_preds, double lambda_G) {
  Var ce = scale(sum(log(domain_preds, kLogEps)), -0.5 / static_cast<double>(domain_preds.rows()));
  return scale(ce, lambda_G);
}

/// Fixed Gaussian projections for the randomized multilinear map.
struct CdanProjection {
  Tensor r_f;  // feature_dim × d
  Tensor r_p;  // classes × d
  std::size_t dim() const { return r_f.cols(); }
};

inline CdanProjection make_cdan_projection(std::size_t feature_dim, std::size_t classes, std::size_t d,
                                           Rng& rng) {
  if (d == 0) throw ConfigError("CDAN projection dimension must be positive");
  CdanProjection p{Tensor(feature_dim, d), Tensor(classes, d)};
  for (auto& v : p.r_f.data()) v = rng.normal();
  for (auto& v : p.r_p.data()) v = rng.normal();
  return p;
}

/// (f R_f) ⊙ (p R_p) / √d.
inline Var cdan_combine(Var features, Var preds, const CdanProjection& proj) {
  Graph& g = *features.graph;
  Var a = matmul(features, constant(g, proj.r_f));
  Var b = matmul(preds, constant(g, proj.r_p));
  return scale(a * b, 1.0 / std::sqrt(static_cast<double>(proj.dim())));
}

// ---------------------------------------------------------------------------
// Distribution distances

/// Bandwidth multipliers 2^−γ … 2^γ.
inline std::vector<double> mmd_multipliers(int gamma_exp) {
  if (gamma_exp < 1 || gamma_exp > 8) throw ConfigError("gamma_exp must be an integer in [1, 8]");
  std::vector<double> out;
  for (int k = -gamma_exp; k <= gamma_exp; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

/// Pairwise squared Euclidean distances of the rows of z.
inline Var pairwise_sq_dists(Var z) {
  Var r = row_sum(square(z));
  return r + transpose(r) - scale(matmul(z, transpose(z)), 2.0);
}

/// Median of the off-diagonal pairwise squared distances; 1 when all points coincide.
inline double median_sq_dist(const Tensor& d) {
  std::vector<double> v;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = i + 1; j < d.cols(); ++j) v.push_back(std::max(d(i, j), 0.0));
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m > 0.0 ? m : 1.0;
}

/// Mean of Gaussian kernels exp(−d²/(m·base)) over the multipliers. The base
/// bandwidth is read off the current values and treated as a constant.
inline Var multi_kernel(Var z, int gamma_exp) {
  Var d = pairwise_sq_dists(z);
  const double base = median_sq_dist(d.value());
  const auto mults = mmd_multipliers(gamma_exp);
  Var k = exp(scale(d, -1.0 / (mults[0] * base)));
  for (std::size_t i = 1; i < mults.size(); ++i) k = k + exp(scale(d, -1.0 / (mults[i] * base)));
  return scale(k, 1.0 / static_cast<double>(mults.size()));
}

/// Signed V-statistic weights: 1/ns² on source pairs, 1/nt² on target pairs, −1/(ns·nt) across.
inline Tensor mmd_weights(std::size_t ns, std::size_t nt) {
  const std::size_t n = ns + nt;
  Tensor w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool si = i < ns, sj = j < ns;
      if (si && sj) w(i, j) = 1.0 / static_cast<double>(ns * ns);
      else if (!si && !sj) w(i, j) = 1.0 / static_cast<double>(nt * nt);
      else w(i, j) = -1.0 / static_cast<double>(ns * nt);
    }
  }
  return w;
}

inline Var mmd_loss(Var f_src, Var f_tgt, int gamma_exp, double lambda_F) {
  if (f_src.rows() + f_tgt.rows() < 2 || f_src.rows() == 0 || f_tgt.rows() == 0) {
    throw InputError("MMD needs at least one sample per domain and two in total");
  }
  Var k = multi_kernel(concat_rows(f_src, f_tgt), gamma_exp);
  Var w = constant(*f_src.graph, mmd_weights(f_src.rows(), f_tgt.rows()));
  return scale(sum(k * w), lambda_F);
}

/// MMD under the product of per-layer kernels. layers_src[l] pairs with layers_tgt[l].
inline Var jmmd_loss(const std::vector<Var>& layers_src, const std::vector<Var>& layers_tgt, int gamma_exp,
                     double lambda_F) {
  if (layers_src.size() != layers_tgt.size()) throw InputError("JMMD: layer count differs between domains");
  if (layers_src.empty()) throw InputError("JMMD needs at least one layer");
  const std::size_t ns = layers_src.front().rows(), nt = layers_tgt.front().rows();
  if (ns == 0 || nt == 0 || ns + nt < 2) throw InputError("JMMD needs samples in both domains");
  Var k = multi_kernel(concat_rows(layers_src[0], layers_tgt[0]), gamma_exp);
  for (std::size_t l = 1; l < layers_src.size(); ++l) {
    k = k * multi_kernel(concat_rows(layers_src[l], layers_tgt[l]), gamma_exp);
  }
  Var w = constant(*layers_src.front().graph, mmd_weights(ns, nt));
  return scale(sum(k * w), lambda_F);
}

/// Unbiased covariance of the rows of f.
inline Var covariance(Var f) {
  detail::require_rows(f, 2, "covariance");
  Var c = f - col_mean(f);
  return scale(matmul(transpose(c), c), 1.0 / static_cast<double>(f.rows() - 1));
}

inline Var coral_loss(Var f_src, Var f_tgt, double lambda_F) {
  if (f_src.cols() != f_tgt.cols()) throw InputError("CORAL: feature widths differ");
  const double d = static_cast<double>(f_src.cols());
  return scale(sum(square(covariance(f_src) - covariance(f_tgt))), lambda_F / (4.0 * d * d));
}

/// Mean over samples of the L1 distance between prediction rows.
inline Var mcd_discrepancy(Var p1, Var p2) {
  return scale(sum(abs(p1 - p2)), 1.0 / static_cast<double>(p1.rows()));
}

/// Random unit projection directions as columns (dim × n).
inline Tensor random_projections(std::size_t dim, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("SWD needs at least one projection");
  Tensor t(dim, n);
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        t(i, j) = rng.normal();
        norm += t(i, j) * t(i, j);
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) t(i, j) /= norm;
  }
  return t;
}

/// Mean over projections of the squared 1-D Wasserstein-2 distance between
/// the projected sets (sorted-difference form). Sets must have equal size.
inline Var swd_discrepancy(Var p1, Var p2, const Tensor& projections) {
  if (p1.rows() != p2.rows()) throw InputError("SWD: sets must have equal size");
  Graph& g = *p1.graph;
  Var theta = constant(g, projections);
  Var a = sort_cols(matmul(p1, theta));
  Var b = sort_cols(matmul(p2, theta));
  return mean(square(a - b));
}

// ---------------------------------------------------------------------------
// Prediction-shaping

inline Var minent_loss(Var preds, double lambda_ent) { return scale(mean(row_entropy(preds)), lambda_ent); }

/// λ·(mean entropy − entropy of mean): the negative information maximization value.
inline Var im_loss(Var preds, double lambda_imax) {
  return scale(mean(row_entropy(preds)) - entropy_of_mean(preds), lambda_imax);
}

/// λ_imax·(−IM of class predictions) + λ_imin·(IM of domain predictions).
inline Var itl_loss(Var class_preds, Var domain_preds, double lambda_imax, double lambda_imin) {
  return im_loss(class_preds, lambda_imax) - im_loss(domain_preds, lambda_imin);
}

/// Minimum class confusion. Samples are weighted by w = 1 + exp(−H) of the
/// temperature-scaled predictions (detached), rescaled to sum to the batch size;
/// the class-correlation matrix Ŷᵀ diag(w) Ŷ is row-normalized and its
/// off-diagonal mass divided by C is the loss.
inline Var mcc_loss(Var logits, double temperature, double lambda_mcc) {
  if (!(temperature > 0.0)) throw ConfigError("MCC temperature must be positive");
  Graph& g = *logits.graph;
  const std::size_t b = logits.rows(), c = logits.cols();
  Var y = row_softmax(scale(logits, 1.0 / temperature));
  const Tensor& yv = y.value();
  Tensor w(b, 1);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < c; ++j) h -= yv(i, j) * std::log(yv(i, j) + kLogEps);
    w(i, 0) = 1.0 + std::exp(-h);
    total += w(i, 0);
  }
  for (auto& v : w.data()) v *= static_cast<double>(b) / total;
  Var cc = matmul(transpose(y), y * constant(g, w));
  Var cn = cc / row_sum(cc);
  Var off = sum(cn) - sum(cn * constant(g, Tensor::identity(c)));
  return scale(off, lambda_mcc / static_cast<double>(c));
}

inline Var bsp_loss(Var f_src, Var f_tgt, double lambda_bsp, std::size_t k = 1) {
  auto top = [k](Var f) {
    Var s = svd_values(f);
    return sum(square(slice_rows(s, 0, std::min<std::size_t>(k, s.rows()))));
  };
  return scale(top(f_src) + top(f_tgt), lambda_bsp);
}

inline Var bnm_loss(Var preds, double lambda_bnm) {
  return scale(nuclear_norm(preds), -lambda_bnm / static_cast<double>(preds.rows()));
}

/// Stepwise feature-norm enlargement over both domains.
inline Var afn_loss(Var f_src, Var f_tgt, double step, double lambda_afn) {
  Var n = l2_row_norm(concat_rows(f_src, f_tgt));
  Var r = n - add_scalar(detach(n), step);
  return scale(mean(square(r)), lambda_afn);
}

// ---------------------------------------------------------------------------
// ATDOC memory bank

/// Features (L2-normalized) and soft predictions for every target-train sample.
struct AtdocBank {
  Tensor features;
  Tensor preds;

  static AtdocBank init(const Tensor& features, std::size_t classes) {
    AtdocBank b;
    b.features = normalize_rows(features);
    b.preds = Tensor(features.rows(), classes, 1.0 / static_cast<double>(classes));
    return b;
  }

  static Tensor normalize_rows(const Tensor& f) {
    Tensor out = f;
    for (std::size_t i = 0; i < f.rows(); ++i) {
      double n = 0.0;
      for (double v : f.row_span(i)) n += v * v;
      n = std::sqrt(n);
      if (n > 0.0)
        for (auto& v : out.row_span(i)) v /= n;
    }
    return out;
  }

  /// Overwrites the entries of the given bank rows.
  void update(std::span<const std::size_t> idx, const Tensor& feats, const Tensor& probs) {
    Tensor nf = normalize_rows(feats);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      std::copy(nf.row_span(r).begin(), nf.row_span(r).end(), features.row_span(idx[r]).begin());
      std::copy(probs.row_span(r).begin(), probs.row_span(r).end(), preds.row_span(idx[r]).begin());
    }
  }

  /// k nearest bank rows by cosine similarity, excluding `self`. Ties favor lower index.
  std::vector<std::size_t> neighbors(std::span<const double> query, std::size_t self, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> sims;
    double qn = 0.0;
    for (double v : query) qn += v * v;
    qn = std::sqrt(qn);
    for (std::size_t j = 0; j < features.rows(); ++j) {
      if (j == self) continue;
      double dot = 0.0;
      auto row = features.row_span(j);
      for (std::size_t c = 0; c < row.size(); ++c) dot += row[c] * query[c];
      sims.emplace_back(qn > 0.0 ? dot / qn : 0.0, j);
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(sims[i].second);
    return out;
  }

  /// Argmax of the mean stored prediction over each sample's k neighbors.
  std::vector<int> pseudo_labels(const Tensor& feats, std::span<const std::size_t> idx, std::size_t k) const {
    if (features.rows() < k + 1) {
      throw ConfigError("ATDOC bank holds " + std::to_string(features.rows()) + " entries; k=" +
                        std::to_string(k) + " needs at least " + std::to_string(k + 1));
    }
    std::vector<int> out;
    for (std::size_t r = 0; r < feats.rows(); ++r) {
      auto nb = neighbors(feats.row_span(r), idx[r], k);
      std::vector<double> soft(preds.cols(), 0.0);
      for (auto j : nb)
        for (std::size_t c = 0; c < preds.cols(); ++c) soft[c] += preds(j, c);
      out.push_back(static_cast<int>(std::max_element(soft.begin(), soft.end()) - soft.begin()));
    }
    return out;
  }
};

/// Cross entropy against k-NN pseudo-labels from the bank (labels are constants).
inline Var atdoc_loss(Var f_tgt, Var preds_tgt, std::span<const std::size_t> idx, const AtdocBank& bank,
                      std::size_t k, double lambda_atdoc) {
  auto labels = bank.pseudo_labels(f_tgt.value(), idx, k);
  return src_ce_loss(preds_tgt, labels, lambda_atdoc);
}

}  // namespace udabench::algorithms
