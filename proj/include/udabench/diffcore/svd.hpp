#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench {

struct SvdOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;
};

/// Thin decomposition A = U·diag(S)·Vᵀ with r = min(rows, cols) components,
/// singular values sorted descending. Columns of U for zero singular values
/// are left as zero vectors.
struct SvdResult {
  Tensor u;                   // rows × r
  std::vector<double> s;      // r
  Tensor v;                   // cols × r
  int sweeps = 0;
};

namespace detail {

// One-sided Jacobi on the columns of a tall matrix (rows >= cols).
inline SvdResult jacobi_tall(const Tensor& a, const SvdOptions& opt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Work column-major for cache-friendly column rotations.
  std::vector<std::vector<double>> w(n, std::vector<double>(m));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) w[j][i] = a(i, j);
    v[j][j] = 1.0;
  }

  int sweep = 0;
  bool converged = n < 2;
  while (!converged) {
    if (sweep == opt.max_sweeps) {
      throw NumericError("svd: one-sided Jacobi did not converge within " +
                         std::to_string(opt.max_sweeps) + " sweeps");
    }
    ++sweep;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        const auto& wp = w[p];
        const auto& wq = w[q];
        for (std::size_t i = 0; i < m; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= opt.tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        auto& xp = w[p];
        auto& xq = w[q];
        for (std::size_t i = 0; i < m; ++i) {
          const double ip = xp[i];
          const double iq = xq[i];
          xp[i] = c * ip - s * iq;
          xq[i] = s * ip + c * iq;
        }
        auto& vp = v[p];
        auto& vq = v[q];
        for (std::size_t i = 0; i < n; ++i) {
          const double ip = vp[i];
          const double iq = vq[i];
          vp[i] = c * ip - s * iq;
          vq[i] = s * ip + c * iq;
        }
      }
    }
    converged = !rotated;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double ss = 0.0;
    for (double x : w[j]) ss += x * x;
    norms[j] = std::sqrt(ss);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

  SvdResult out{Tensor(m, n), std::vector<double>(n), Tensor(n, n), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    const double sigma = norms[j];
    out.s[k] = sigma;
    if (sigma > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w[j][i] / sigma;
    }
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v[j][i];
  }
  return out;
}

}  // namespace detail

inline SvdResult svd(const Tensor& a, const SvdOptions& opt = {}) {
  if (!a.all_finite()) throw NumericError("svd: input has non-finite entries");
  if (a.rows() >= a.cols()) return detail::jacobi_tall(a, opt);
  SvdResult t = detail::jacobi_tall(a.transposed(), opt);
  std::swap(t.u, t.v);
  return t;
}

inline std::vector<double> singular_values(const Tensor& a, const SvdOptions& opt = {}) {
  return svd(a, opt).s;
}

}  // namespace udabench
