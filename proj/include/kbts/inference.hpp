#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "kbts/rule_model.hpp"

namespace kbts {

/// Engine-side view of a rule. Persisted rules always have two conditions,
/// the engine itself accepts any nonzero number. A production with no
/// conditions never matches.
struct Production {
  RuleId id = 0;
  std::vector<std::string> conditions;
  std::string conclusion;
  std::string solution;
};

Production to_production(const Rule& rule);
std::vector<Production> to_productions(const RuleBase& rb);

/// Facts plus the refraction record of one inference run.
class WorkingMemory {
 public:
  /// Returns false when an equal fact is already present.
  bool assert_fact(const Fact& fact);

  /// True iff some fact's value equals text (normalized, case-insensitive).
  bool has_value(std::string_view text) const;

  const std::vector<Fact>& facts() const noexcept { return facts_; }

  bool has_fired(RuleId id) const { return fired_.count(id) != 0; }
  void mark_fired(RuleId id) { fired_.insert(id); }
  const std::set<RuleId>& fired() const noexcept { return fired_; }

 private:
  std::vector<Fact> facts_;
  std::unordered_set<std::string> fact_keys_;
  std::unordered_set<std::string> value_keys_;
  std::set<RuleId> fired_;
};

/// Slot names are ignored: a condition is satisfied by any fact whose value
/// equals it.
bool match_rule(const Production& rule, const WorkingMemory& memory);
bool match_rule(const Rule& rule, const WorkingMemory& memory);

/// Orders matching candidates: fired rules dropped, then more conditions
/// first, then ascending id. Total and stable for distinct ids.
std::vector<Production> resolve_conflicts(std::vector<Production> candidates,
                                          const WorkingMemory& memory);

/// Forward chaining to fixpoint. One rule fires per recognize-act cycle; its
/// conclusion is asserted as Fact("conclusion", text) and may enable further
/// rules. Each rule fires at most once. Diagnoses are in firing order.
std::vector<Diagnosis> forward_chain(std::span<const Production> rules,
                                     std::span<const Fact> initial_facts);
std::vector<Diagnosis> forward_chain(const RuleBase& rb,
                                     std::span<const Fact> initial_facts);

/// Convenience for answer lists: each text becomes Fact("answer", text).
/// Blank entries are ignored.
std::vector<Fact> answer_facts(std::span<const std::string> answers);

}  // namespace kbts
