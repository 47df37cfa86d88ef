#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "udabench/core/error.hpp"
#include "udabench/core/log.hpp"
#include "udabench/validators/validators.hpp"

namespace udabench::harness {

struct CheckpointEntry {
  std::size_t step = 0;   // optimizer steps taken so far
  std::size_t epoch = 0;
  std::map<std::string, validators::ValidationScore> scores;
  // macro-averaged accuracies
  double src_val_acc = 0.0;
  double tgt_train_acc = 0.0;
  double tgt_val_acc = 0.0;
  // micro-averaged counterparts
  double src_val_acc_micro = 0.0;
  double tgt_train_acc_micro = 0.0;
  double tgt_val_acc_micro = 0.0;
};

struct TrialRecord {
  std::string trial_id;
  std::string task;
  std::string algorithm;
  std::string feature_layer = "FL0";
  std::map<std::string, double> hparams;  // includes "lr"
  std::map<std::string, double> dann;     // frozen values for X-DANN
  std::uint64_t seed = 0;
  std::vector<CheckpointEntry> checkpoints;
  std::string status = "completed";  // completed | early_stopped | failed | reference
  double wallclock_s = 0.0;
};

inline nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : r.checkpoints) {
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [name, s] : c.scores) {
      scores[name] = {{"value", s.valid ? nlohmann::json(s.value) : nlohmann::json(nullptr)}, {"valid", s.valid}};
    }
    cps.push_back({{"step", c.step},
                   {"epoch", c.epoch},
                   {"scores", scores},
                   {"src_val_acc", c.src_val_acc},
                   {"tgt_train_acc", c.tgt_train_acc},
                   {"tgt_val_acc", c.tgt_val_acc},
                   {"src_val_acc_micro", c.src_val_acc_micro},
                   {"tgt_train_acc_micro", c.tgt_train_acc_micro},
                   {"tgt_val_acc_micro", c.tgt_val_acc_micro}});
  }
  nlohmann::json j = {{"trial_id", r.trial_id},
                      {"task", r.task},
                      {"algorithm", r.algorithm},
                      {"feature_layer", r.feature_layer},
                      {"hparams", r.hparams},
                      {"seed", r.seed},
                      {"checkpoints", cps},
                      {"status", r.status},
                      {"wallclock_s", r.wallclock_s}};
  if (!r.dann.empty()) j["dann"] = r.dann;
  return j;
}

inline TrialRecord record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial_id = j.at("trial_id").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.feature_layer = j.at("feature_layer").get<std::string>();
  r.hparams = j.at("hparams").get<std::map<std::string, double>>();
  if (j.contains("dann")) r.dann = j["dann"].get<std::map<std::string, double>>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.status = j.at("status").get<std::string>();
  r.wallclock_s = j.value("wallclock_s", 0.0);
  for (const auto& c : j.at("checkpoints")) {
    CheckpointEntry e;
    e.step = c.at("step").get<std::size_t>();
    e.epoch = c.value("epoch", std::size_t{0});
    for (const auto& [name, s] : c.at("scores").items()) {
      validators::ValidationScore v;
      v.validator = name;
      v.valid = s.at("valid").get<bool>();
      v.value = s.at("value").is_null() ? std::numeric_limits<double>::quiet_NaN() : s.at("value").get<double>();
      v.valid = v.valid && std::isfinite(v.value);
      e.scores[name] = v;
    }
    e.src_val_acc = c.at("src_val_acc").get<double>();
    e.tgt_train_acc = c.at("tgt_train_acc").get<double>();
    e.tgt_val_acc = c.at("tgt_val_acc").get<double>();
    e.src_val_acc_micro = c.value("src_val_acc_micro", e.src_val_acc);
    e.tgt_train_acc_micro = c.value("tgt_train_acc_micro", e.tgt_train_acc);
    e.tgt_val_acc_micro = c.value("tgt_val_acc_micro", e.tgt_val_acc);
    r.checkpoints.push_back(std::move(e));
  }
  return r;
}

inline std::string record_line(const TrialRecord& r) { return to_json(r).dump() + "\n"; }

/// Appends one line under an exclusive advisory lock, in a single write.
inline void append_line(const std::string& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw InputError("cannot open " + path + ": " + std::strerror(errno));
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw InputError("cannot lock " + path + ": " + std::strerror(errno));
  }
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
      throw InputError("write to " + path + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
}

inline void append_record(const std::string& path, const TrialRecord& r) { append_line(path, record_line(r)); }

/// Reads every complete line. A final line without its newline is the trace of
/// an interrupted write and is dropped with a warning; any other bad line is a
/// FormatError carrying its 1-based line number.
inline std::vector<TrialRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open records file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<TrialRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      logging::warn(path + ": discarding incomplete trailing line " + std::to_string(line_no));
      break;
    }
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace udabench::harness
