#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kbts {

using RuleId = std::int64_t;
using Version = std::int64_t;

/// One production rule: IF condition_a AND condition_b THEN conclusion,
/// repaired by solution.
struct Rule {
  RuleId id = 0;
  std::string condition_a;  // problem category
  std::string condition_b;  // observed symptom
  std::string conclusion;   // fault cause
  std::string solution;     // repair action

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// An attribute/value assertion in working memory.
struct Fact {
  std::string slot;
  std::string value;

  /// Normalizes both fields; throws EmptyField when either is empty after.
  static Fact make(std::string_view slot, std::string_view value);

  /// Equal iff normalized slot and value match case-insensitively.
  friend bool operator==(const Fact& lhs, const Fact& rhs);
};

struct Diagnosis {
  RuleId rule_id = 0;
  std::string conclusion;
  std::string solution;

  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

Diagnosis diagnosis_of(const Rule& rule);

/// Partial replacement used by RuleBase::update_rule. Unset fields keep the
/// stored value.
struct RuleFields {
  std::optional<std::string> condition_a;
  std::optional<std::string> condition_b;
  std::optional<std::string> conclusion;
  std::optional<std::string> solution;
};

/// Versioned rule collection. Rules are kept in ascending id order, the
/// normalized condition pair is unique (case-insensitive), and every
/// successful mutation bumps version by exactly one.
///
/// Ids are assigned here and never reused: last_id() is a high-water mark that
/// survives deletion of the newest rule.
class RuleBase {
 public:
  RuleBase() = default;

  /// Builds a rule-base from stored records, enforcing every invariant.
  /// Throws ParseError naming the offending record indices.
  static RuleBase from_records(std::vector<Rule> rules, Version version,
                               RuleId last_id = 0);

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  Version version() const noexcept { return version_; }
  RuleId last_id() const noexcept { return last_id_; }
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

  const Rule* find(RuleId id) const;
  /// Throws NotFound.
  const Rule& at(RuleId id) const;
  const Rule* find_pair(std::string_view condition_a,
                        std::string_view condition_b) const;

  Rule add_rule(std::string_view condition_a, std::string_view condition_b,
                std::string_view conclusion, std::string_view solution);
  Rule update_rule(RuleId id, const RuleFields& fields);
  void delete_rule(RuleId id);

  friend bool operator==(const RuleBase&, const RuleBase&) = default;

 private:
  std::vector<Rule> rules_;
  Version version_ = 0;
  RuleId last_id_ = 0;
};

/// Normalized, case-folded lookup key for a condition pair.
std::string pair_key(std::string_view condition_a, std::string_view condition_b);

/// The canonical rule-file text for rb (UTF-8 JSON, trailing newline).
std::string to_json_text(const RuleBase& rb);

/// Parses rule-file text. Throws ParseError with line/record position.
RuleBase parse_rulebase(std::string_view text);

/// Throws IoError or ParseError.
RuleBase load(const std::filesystem::path& path);

/// Writes atomically: temp file in the target directory, fsync, rename.
/// Throws IoError.
void save(const RuleBase& rb, const std::filesystem::path& path);

/// The 33 troubleshooting rules of the bundled knowledge base, ids 1..33.
RuleBase seed_corpus();

}  // namespace kbts
