#pragma once

#include <ostream>
#include <string>

namespace dbf {

/// Line-oriented diagnostics sink; a default-constructed logger is silent.
class Logger {
 public:
  Logger() = default;
  explicit Logger(std::ostream* sink) : sink_(sink) {}

  void line(const std::string& text) {
    if (sink_) *sink_ << text << '\n';
  }

  explicit operator bool() const { return sink_ != nullptr; }

 private:
  std::ostream* sink_ = nullptr;
};

}  // namespace dbf
