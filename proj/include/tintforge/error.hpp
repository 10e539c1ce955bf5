#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tintforge {

enum class ErrorKind {
  Input,    // bad arguments, malformed files, invariant violations
  Network,  // transport failures talking to an LLM endpoint
  Schema,   // a remote reply that does not follow the response contract
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Network: return "network";
    case ErrorKind::Schema: return "schema";
  }
  return "input";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& message) {
  return Error(ErrorKind::Input, message);
}

/// Error raised while reading a line-oriented file; `line` is 1-based, 0 when
/// the failure is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(ErrorKind::Input, format(source, line, what)),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& what) {
    if (line == 0) return source + ": " + what;
    return source + ":" + std::to_string(line) + ": " + what;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace tintforge
