#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>

#include "udabench/core/error.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/datasets/datasets.hpp"
#include "udabench/datasets/matrix_io.hpp"

namespace udabench::data {

enum class Generator { moons, blobs, files };

/// Everything needed to regenerate a task bit-for-bit.
struct TaskSpec {
  std::string name;
  Generator generator = Generator::moons;
  double rotation_deg = 45.0;
  double noise_sigma = 0.1;
  int num_classes = 2;
  std::size_t n_per_class = 150;
  double mean_shift = 0.0;
  double scale = 1.0;
  std::string directory;  // files generator only
  std::uint64_t data_seed = 7;
  std::uint64_t split_seed = 11;
  double split_ratio = 0.8;
};

namespace detail {

inline double parse_number(std::string_view s, const std::string& whole) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("malformed task id '" + whole + "'");
  }
  return v;
}

}  // namespace detail

inline const char* known_task_forms() {
  return "moons-<degrees>, blobs-<classes>-<shift>, dir:<path>";
}

/// Task ids: "moons-45", "blobs-3-10" (3 classes, mean shift 10), "dir:/path/to/task".
/// A directory task holds source_x, source_y, target_x, target_y as .udam/.udal or .csv files.
inline TaskSpec parse_task(const std::string& id) {
  TaskSpec t;
  t.name = id;
  if (id.rfind("moons-", 0) == 0) {
    t.generator = Generator::moons;
    t.rotation_deg = detail::parse_number(std::string_view(id).substr(6), id);
    if (t.rotation_deg < 0.0 || t.rotation_deg >= 180.0) {
      throw ConfigError("moons rotation must lie in [0, 180): " + id);
    }
    return t;
  }
  if (id.rfind("blobs-", 0) == 0) {
    const std::string rest = id.substr(6);
    const auto dash = rest.find('-');
    if (dash == std::string::npos) throw ConfigError("malformed task id '" + id + "'");
    const double c = detail::parse_number(std::string_view(rest).substr(0, dash), id);
    if (c < 2 || c != static_cast<int>(c)) throw ConfigError("blobs need an integer class count ≥ 2: " + id);
    t.generator = Generator::blobs;
    t.num_classes = static_cast<int>(c);
    t.mean_shift = detail::parse_number(std::string_view(rest).substr(dash + 1), id);
    t.n_per_class = 100;
    return t;
  }
  if (id.rfind("dir:", 0) == 0) {
    t.generator = Generator::files;
    t.directory = id.substr(4);
    if (t.directory.empty()) throw ConfigError("dir: task needs a path");
    return t;
  }
  throw ConfigError("unknown task '" + id + "' (known forms: " + known_task_forms() + ")");
}

struct TaskData {
  std::string name;
  int num_classes = 0;
  LabeledSet source;
  LabeledSet target;  // labels only for oracle scoring and reporting
  SplitTable splits;

  std::size_t input_dim() const { return source.x.cols(); }
  LabeledSet src_train() const { return source.subset(splits.source.train); }
  LabeledSet src_val() const { return source.subset(splits.source.val); }
  LabeledSet tgt_train() const { return target.subset(splits.target.train); }
  LabeledSet tgt_val() const { return target.subset(splits.target.val); }
};

namespace detail {

inline std::string find_task_file(const std::filesystem::path& dir, const std::string& stem,
                                  const char* binary_ext) {
  for (const char* ext : {binary_ext, ".csv"}) {
    auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p.string();
  }
  throw InputError("task directory " + dir.string() + " lacks " + stem + binary_ext + " or " + stem + ".csv");
}

}  // namespace detail

inline TaskData materialize(const TaskSpec& spec) {
  TaskData d;
  d.name = spec.name;
  Rng rng(spec.data_seed);
  DomainPair pair;
  switch (spec.generator) {
    case Generator::moons:
      pair = gen_two_moons_shift(spec.n_per_class, spec.noise_sigma, spec.rotation_deg, rng);
      break;
    case Generator::blobs:
      pair = gen_blob_shift(spec.num_classes, spec.n_per_class, spec.mean_shift, spec.scale, rng);
      break;
    case Generator::files: {
      const std::filesystem::path dir(spec.directory);
      pair.source.x = load_matrix(detail::find_task_file(dir, "source_x", ".udam"));
      pair.source.y = load_labels(detail::find_task_file(dir, "source_y", ".udal"));
      pair.target.x = load_matrix(detail::find_task_file(dir, "target_x", ".udam"));
      pair.target.y = load_labels(detail::find_task_file(dir, "target_y", ".udal"));
      pair.source.domain = Domain::source;
      pair.target.domain = Domain::target;
      if (pair.source.x.cols() != pair.target.x.cols()) {
        throw InputError("source and target feature widths differ in " + spec.directory);
      }
      break;
    }
  }
  d.num_classes = std::max(pair.source.num_classes(), pair.target.num_classes());
  pair.source.validate(d.num_classes);
  pair.target.validate(d.num_classes);
  if (pair.target.size() == 0) throw InputError("task " + spec.name + " has an empty target domain");
  d.source = std::move(pair.source);
  d.target = std::move(pair.target);
  d.splits.source = split_per_class(d.source, spec.split_ratio, spec.split_seed);
  d.splits.target = split_per_class(d.target, spec.split_ratio, spec.split_seed + 1);
  return d;
}

}  // namespace udabench::data
