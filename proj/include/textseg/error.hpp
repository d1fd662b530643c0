#pragma once

#include <stdexcept>
#include <string>

namespace textseg {

/// Coarse failure class. Maps one-to-one onto CLI exit codes and C API
/// status values.
enum class ErrorKind {
  Usage = 1,
  Data = 2,
  Numeric = 3,
};

/// All library failures are reported as textseg::Error. `code()` is a stable
/// identifier such as "MalformedSeparator" or "WindowTooLarge".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] void throw_usage(const std::string& code, const std::string& message);
[[noreturn]] void throw_data(const std::string& code, const std::string& message);
[[noreturn]] void throw_numeric(const std::string& code, const std::string& message);

}  // namespace textseg
