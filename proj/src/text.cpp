#include "kbts/text.hpp"

#include <cctype>

namespace kbts {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::string fold_key(std::string_view text) {
  std::string key = normalize(text);
  for (char& c : key) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return key;
}

bool equivalent(std::string_view lhs, std::string_view rhs) {
  return fold_key(lhs) == fold_key(rhs);
}

}  // namespace kbts
