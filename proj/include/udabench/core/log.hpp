#pragma once

#include <atomic>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace udabench::logging {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {

struct State {
  std::mutex mutex;
  Sink sink;
  Level threshold = Level::info;
};

inline State& state() {
  static State s;
  return s;
}

inline const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "?";
}

}  // namespace detail

/// Replaces the output sink. Passing an empty function restores stderr output.
inline Sink set_sink(Sink sink) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  std::swap(s.sink, sink);
  return sink;
}

inline void set_level(Level level) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  s.threshold = level;
}

inline void write(Level level, std::string_view message) {
  auto& s = detail::state();
  std::lock_guard lock(s.mutex);
  if (level < s.threshold) return;
  if (s.sink) {
    s.sink(level, message);
  } else {
    std::cerr << "[" << detail::tag(level) << "] " << message << '\n';
  }
}

inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void error(std::string_view m) { write(Level::error, m); }

/// Emits at most `limit` warnings for one call site; later ones are counted only.
class RateLimitedWarning {
 public:
  explicit RateLimitedWarning(int limit) : limit_(limit) {}

  void operator()(std::string_view message) {
    const int n = count_.fetch_add(1);
    if (n < limit_) warn(message);
    if (n == limit_) warn("further warnings of this kind suppressed");
  }

  int count() const { return count_.load(); }

 private:
  int limit_;
  std::atomic<int> count_{0};
};

}  // namespace udabench::logging
