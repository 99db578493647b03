#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kbts {

enum class ErrorKind {
  DuplicateRule,
  EmptyField,
  NotFound,
  ParseError,
  IoError,
  EmptyRuleBase,
  InvalidChoice,
  SessionClosed,
  NegativeDuration,
  NotDefuzzifiable,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Base for every failure the library reports. Callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Rule-file parse failure. line is 1-based and 0 when the failure is not
/// tied to the JSON text; records holds the 0-based indices of the offending
/// entries in the "rules" array.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line,
             std::vector<std::size_t> records = {})
      : Error(ErrorKind::ParseError, message),
        line_(line),
        records_(std::move(records)) {}

  std::size_t line() const noexcept { return line_; }
  const std::vector<std::size_t>& records() const noexcept { return records_; }

 private:
  std::size_t line_;
  std::vector<std::size_t> records_;
};

class InvalidChoiceError : public Error {
 public:
  InvalidChoiceError(const std::string& choice, std::vector<std::string> options);

  const std::vector<std::string>& valid_options() const noexcept {
    return options_;
  }

 private:
  std::vector<std::string> options_;
};

}  // namespace kbts
