#pragma once

// Scalar-loop reference implementations shared by unit and acceptance tests.

#include <cmath>
#include <vector>

#include "udabench/core/rng.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench::testing {

inline Tensor random_probs(std::size_t n, std::size_t c, Rng& rng) {
  Tensor p(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += p(i, j) = rng.uniform(0.01, 1.0);
    for (std::size_t j = 0; j < c; ++j) p(i, j) /= s;
  }
  return p;
}

// IM computed column-first, independent of the library's row loop.
inline double im_oracle(const Tensor& p) {
  const std::size_t n = p.rows(), c = p.cols();
  double h_mean = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += p(i, j);
    col /= n;
    if (col > 0) h_mean -= col * std::log(col);
  }
  double mean_h = 0.0;
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (p(i, j) > 0) mean_h -= p(i, j) * std::log(p(i, j)) / n;
  return h_mean - mean_h;
}

// DEV with unbiased (n−1) covariance estimates, written out scalar by scalar.
inline double dev_oracle(const std::vector<double>& L, const std::vector<double>& q, double ns, double nt) {
  const std::size_t n = L.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = ns / nt * (q[i] / (1 - q[i]));
  double sw = 0, swl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swl += w[i] * L[i];
  }
  const double mw = sw / n, mwl = swl / n;
  double cov = 0, var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (w[i] * L[i] - mwl) * (w[i] - mw) / (n - 1);
    var += (w[i] - mw) * (w[i] - mw) / (n - 1);
  }
  const double eta = -cov / var;
  return mwl + eta * mw - eta;
}

}  // namespace udabench::testing
