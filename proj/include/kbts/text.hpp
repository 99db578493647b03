#pragma once

#include <string>
#include <string_view>

namespace kbts {

/// Trims surrounding whitespace and collapses internal whitespace runs to a
/// single space. Character case is preserved.
std::string normalize(std::string_view text);

/// Comparison key: normalize() followed by ASCII case folding. Two texts are
/// considered equal throughout the system iff their keys are equal.
std::string fold_key(std::string_view text);

bool equivalent(std::string_view lhs, std::string_view rhs);

}  // namespace kbts
