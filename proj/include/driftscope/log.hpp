#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace driftscope::log {

using Sink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}
inline Sink& sink() {
  static Sink s = [](const std::string& msg) { std::cerr << "driftscope: warning: " << msg << '\n'; };
  return s;
}
}  // namespace detail

/// Replaces the warning sink and returns the previous one.
inline Sink set_warning_sink(Sink sink) {
  std::lock_guard lock(detail::sink_mutex());
  return std::exchange(detail::sink(), std::move(sink));
}

inline void warn(const std::string& msg) {
  std::lock_guard lock(detail::sink_mutex());
  if (detail::sink()) detail::sink()(msg);
}

/// Swallows warnings for the lifetime of the guard.
class ScopedSilence {
 public:
  ScopedSilence() : previous_(set_warning_sink({})) {}
  ~ScopedSilence() { set_warning_sink(std::move(previous_)); }
  ScopedSilence(const ScopedSilence&) = delete;
  ScopedSilence& operator=(const ScopedSilence&) = delete;

 private:
  Sink previous_;
};

}  // namespace driftscope::log
