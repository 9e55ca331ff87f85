#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sensefit::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::string_view level_name(Level lv) {
  switch (lv) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    case Level::off: return "off";
  }
  return "?";
}

inline bool parse_level(std::string_view s, Level& out) {
  for (Level lv : {Level::debug, Level::info, Level::warn, Level::error, Level::off}) {
    if (s == level_name(lv)) {
      out = lv;
      return true;
    }
  }
  return false;
}

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {

struct State {
  std::mutex mu;
  Level threshold = Level::info;
  Sink sink;
};

inline State& state() {
  static State s;
  return s;
}

}  // namespace detail

inline void set_level(Level lv) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  s.threshold = lv;
}

inline Level level() {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  return s.threshold;
}

// Replaces the stderr writer; pass an empty Sink to restore it.
inline Sink set_sink(Sink sink) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  return std::exchange(s.sink, std::move(sink));
}

inline void write(Level lv, std::string_view msg) {
  auto& s = detail::state();
  std::lock_guard lock(s.mu);
  if (lv < s.threshold) return;
  if (s.sink) {
    s.sink(lv, msg);
  } else {
    std::cerr << "level=" << level_name(lv) << " msg=\"" << msg << "\"\n";
  }
}

template <typename... Args>
void emit(Level lv, Args&&... args) {
  if (lv < level()) return;
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  write(lv, oss.str());
}

template <typename... Args>
void debug(Args&&... args) { emit(Level::debug, std::forward<Args>(args)...); }
template <typename... Args>
void info(Args&&... args) { emit(Level::info, std::forward<Args>(args)...); }
template <typename... Args>
void warn(Args&&... args) { emit(Level::warn, std::forward<Args>(args)...); }
template <typename... Args>
void error(Args&&... args) { emit(Level::error, std::forward<Args>(args)...); }

// Collects messages for the lifetime of the object. Used by tests.
class ScopedCapture {
 public:
  explicit ScopedCapture(Level threshold = Level::debug) : saved_level_(level()) {
    set_level(threshold);
    saved_ = set_sink([this](Level lv, std::string_view msg) {
      messages_.emplace_back(lv, std::string(msg));
    });
  }
  ~ScopedCapture() {
    set_sink(std::move(saved_));
    set_level(saved_level_);
  }
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  const std::vector<std::pair<Level, std::string>>& messages() const { return messages_; }

  std::size_t count(Level lv) const {
    std::size_t n = 0;
    for (const auto& m : messages_) n += (m.first == lv);
    return n;
  }

  bool contains(std::string_view needle) const {
    for (const auto& m : messages_) {
      if (m.second.find(needle) != std::string::npos) return true;
    }
    return false;
  }

 private:
  Level saved_level_;
  Sink saved_;
  std::vector<std::pair<Level, std::string>> messages_;
};

}  // namespace sensefit::log
