#include "kbts/error.hpp"

namespace kbts {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateRule: return "DuplicateRule";
    case ErrorKind::EmptyField: return "EmptyField";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyRuleBase: return "EmptyRuleBase";
    case ErrorKind::InvalidChoice: return "InvalidChoice";
    case ErrorKind::SessionClosed: return "SessionClosed";
    case ErrorKind::NegativeDuration: return "NegativeDuration";
    case ErrorKind::NotDefuzzifiable: return "NotDefuzzifiable";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string describe_choice(const std::string& choice,
                            const std::vector<std::string>& options) {
  std::string msg = "invalid choice '" + choice + "'; valid options:";
  for (std::size_t i = 0; i < options.size(); ++i) {
    msg += (i == 0 ? " " : ", ");
    msg += options[i];
  }
  return msg;
}

}  // namespace

InvalidChoiceError::InvalidChoiceError(const std::string& choice,
                                       std::vector<std::string> options)
    : Error(ErrorKind::InvalidChoice, describe_choice(choice, options)),
      options_(std::move(options)) {}

}  // namespace kbts
