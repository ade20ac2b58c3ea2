#pragma once

#include <stdexcept>
#include <string>

namespace sb {

// Invalid block/dataset/model/training configuration.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-format problems carry a distinct code so callers can tell
// truncation, corruption and version skew apart.
class IoError : public std::runtime_error {
 public:
  enum class Code { Generic, Truncated, Checksum, Version };
  IoError(Code code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Training diverged (NaN or runaway loss).
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sb
