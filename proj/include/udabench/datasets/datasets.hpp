#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench::data {

enum class Domain { source, target };

inline const char* to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

struct LabeledSet {
  Tensor x;
  std::vector<int> y;
  Domain domain = Domain::source;

  std::size_t size() const { return y.size(); }

  int num_classes() const {
    int c = 0;
    for (int v : y) c = std::max(c, v + 1);
    return c;
  }

  void validate(int classes) const {
    if (x.rows() != y.size()) {
      throw InputError("labeled set has " + std::to_string(x.rows()) + " rows but " +
                       std::to_string(y.size()) + " labels");
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] < 0 || y[i] >= classes) {
        throw InputError("label " + std::to_string(y[i]) + " at index " + std::to_string(i) +
                         " outside [0, " + std::to_string(classes) + ")");
      }
    }
  }

  LabeledSet subset(const std::vector<std::size_t>& idx) const {
    LabeledSet out;
    out.x = x.gather_rows(std::span<const std::size_t>(idx));
    out.domain = domain;
    out.y.reserve(idx.size());
    for (auto i : idx) out.y.push_back(y.at(i));
    return out;
  }
};

struct UnlabeledSet {
  Tensor x;
  Domain domain = Domain::target;
};

/// Rotates 2-D points (columns 0 and 1) about their centroid.
inline Tensor rotate_about_centroid(const Tensor& x, double degrees) {
  if (x.cols() < 2) throw InputError("rotation needs at least two feature columns");
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    cx += x(i, 0);
    cy += x(i, 1);
  }
  const double n = static_cast<double>(std::max<std::size_t>(x.rows(), 1));
  cx /= n;
  cy /= n;
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double dx = x(i, 0) - cx, dy = x(i, 1) - cy;
    out(i, 0) = cx + c * dx - s * dy;
    out(i, 1) = cy + s * dx + c * dy;
  }
  return out;
}

struct DomainPair {
  LabeledSet source;
  LabeledSet target;
};

/// Classic two interleaved half circles. Class 0 is the upper moon, class 1
/// the lower one; the target domain is the same point cloud rotated about
/// its centroid.
inline DomainPair gen_two_moons_shift(std::size_t n_per_class, double noise_sigma,
                                      double rotation_deg, Rng& rng) {
  if (n_per_class < 10) throw ConfigError("two-moons needs at least 10 samples per class");
  if (rotation_deg < 0.0 || rotation_deg >= 180.0) {
    throw ConfigError("two-moons rotation must lie in [0, 180)");
  }
  DomainPair out;
  out.source.x = Tensor(2 * n_per_class, 2);
  out.source.y.resize(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    const double t = std::numbers::pi * rng.uniform();
    double px = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double py = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
    out.source.x(i, 0) = px + noise_sigma * rng.normal();
    out.source.x(i, 1) = py + noise_sigma * rng.normal();
    out.source.y[i] = label;
  }
  out.source.domain = Domain::source;
  out.target.x = rotation_deg == 0.0 ? out.source.x : rotate_about_centroid(out.source.x, rotation_deg);
  out.target.y = out.source.y;
  out.target.domain = Domain::target;
  return out;
}

/// C isotropic Gaussian clusters with means evenly spaced on a circle of
/// radius `radius`. Target means are translated by `mean_shift` along the
/// first axis and target spreads multiplied by `scale`.
inline DomainPair gen_blob_shift(int num_classes, std::size_t n_per_class, double mean_shift,
                                 double scale, Rng& rng, std::size_t dim = 2, double radius = 4.0,
                                 double sigma = 1.0) {
  if (num_classes < 2) throw ConfigError("blob shift needs at least two classes");
  if (dim < 2) throw ConfigError("blob shift needs at least two dimensions");
  if (scale <= 0.0) throw ConfigError("blob scale must be positive");
  const std::size_t n = static_cast<std::size_t>(num_classes) * n_per_class;
  auto center = [&](int c, std::size_t d) {
    const double a = 2.0 * std::numbers::pi * c / num_classes;
    if (d == 0) return radius * std::cos(a);
    if (d == 1) return radius * std::sin(a);
    return 0.0;
  };
  Rng src_rng = rng.derive(1), tgt_rng = rng.derive(2);
  DomainPair out;
  out.source.x = Tensor(n, dim);
  out.target.x = Tensor(n, dim);
  out.source.y.resize(n);
  out.target.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / n_per_class);
    out.source.y[i] = out.target.y[i] = c;
    for (std::size_t d = 0; d < dim; ++d) {
      out.source.x(i, d) = center(c, d) + sigma * src_rng.normal();
      out.target.x(i, d) = center(c, d) + (d == 0 ? mean_shift : 0.0) + scale * sigma * tgt_rng.normal();
    }
  }
  out.source.domain = Domain::source;
  out.target.domain = Domain::target;
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Four-way split table: UDA trains on source.train + target.train; validators
/// may read source.train/val and target.train; target.val is for final reporting only.
struct SplitTable {
  Split source;
  Split target;
};

/// Per class: shuffle by seed, floor(ratio·n_c) indices to train, the rest to val.
/// Output lists are sorted ascending.
inline Split split_per_class(const std::vector<int>& labels, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split out;
  for (auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      throw ConfigError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                        " sample(s); at least 2 are needed for a train/val split");
    }
    Rng rng = Rng(seed).derive(static_cast<std::uint64_t>(cls));
    rng.shuffle(std::span<std::size_t>(idx));
    // Small guard so representation error never drops an exact product below its integer.
    auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(idx.size()) + 1e-9));
    n_train = std::min(n_train, idx.size() - 1);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.insert(out.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

inline Split split_per_class(const LabeledSet& set, double ratio, std::uint64_t seed) {
  return split_per_class(set.y, ratio, seed);
}

}  // namespace udabench::data
