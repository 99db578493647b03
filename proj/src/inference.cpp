#include "kbts/inference.hpp"

#include <algorithm>
#include <unordered_map>

#include "kbts/text.hpp"

namespace kbts {

Production to_production(const Rule& rule) {
  return Production{rule.id, {rule.condition_a, rule.condition_b}, rule.conclusion,
                    rule.solution};
}

std::vector<Production> to_productions(const RuleBase& rb) {
  std::vector<Production> out;
  out.reserve(rb.size());
  for (const Rule& r : rb.rules()) out.push_back(to_production(r));
  return out;
}

bool WorkingMemory::assert_fact(const Fact& fact) {
  std::string key = fold_key(fact.slot) + '\x1f' + fold_key(fact.value);
  if (!fact_keys_.insert(std::move(key)).second) return false;
  value_keys_.insert(fold_key(fact.value));
  facts_.push_back(Fact{normalize(fact.slot), normalize(fact.value)});
  return true;
}

bool WorkingMemory::has_value(std::string_view text) const {
  return value_keys_.count(fold_key(text)) != 0;
}

bool match_rule(const Production& rule, const WorkingMemory& memory) {
  if (rule.conditions.empty()) return false;
  return std::all_of(rule.conditions.begin(), rule.conditions.end(),
                     [&](const std::string& c) { return memory.has_value(c); });
}

bool match_rule(const Rule& rule, const WorkingMemory& memory) {
  return memory.has_value(rule.condition_a) && memory.has_value(rule.condition_b);
}

std::vector<Production> resolve_conflicts(std::vector<Production> candidates,
                                          const WorkingMemory& memory) {
  std::erase_if(candidates,
                [&](const Production& p) { return memory.has_fired(p.id); });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Production& lhs, const Production& rhs) {
                     if (lhs.conditions.size() != rhs.conditions.size()) {
                       return lhs.conditions.size() > rhs.conditions.size();
                     }
                     return lhs.id < rhs.id;
                   });
  return candidates;
}

namespace {

// Incremental agenda: each rule tracks how many of its distinct condition
// keys are present, so a new fact only touches the rules that mention it.
class Agenda {
 public:
  explicit Agenda(std::span<const Production> rules) : rules_(rules) {
    remaining_.resize(rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
      std::unordered_set<std::string> keys;
      for (const std::string& c : rules[i].conditions) keys.insert(fold_key(c));
      remaining_[i] = keys.size();
      for (const std::string& k : keys) index_[k].push_back(i);
    }
  }

  void on_new_value(const std::string& value_key) {
    if (!seen_values_.insert(value_key).second) return;
    auto it = index_.find(value_key);
    if (it == index_.end()) return;
    for (std::size_t i : it->second) {
      if (--remaining_[i] == 0) ready_.push_back(rules_[i]);
    }
  }

  std::vector<Production>& ready() { return ready_; }

 private:
  std::span<const Production> rules_;
  std::vector<std::size_t> remaining_;
  std::unordered_map<std::string, std::vector<std::size_t>> index_;
  std::unordered_set<std::string> seen_values_;
  std::vector<Production> ready_;
};

}  // namespace

std::vector<Diagnosis> forward_chain(std::span<const Production> rules,
                                     std::span<const Fact> initial_facts) {
  WorkingMemory memory;
  Agenda agenda(rules);
  auto learn = [&](const Fact& f) {
    if (memory.assert_fact(f)) agenda.on_new_value(fold_key(f.value));
  };
  for (const Fact& f : initial_facts) learn(f);

  std::vector<Diagnosis> fired;
  while (true) {
    std::vector<Production> ordered = resolve_conflicts(agenda.ready(), memory);
    if (ordered.empty()) break;
    const Production& chosen = ordered.front();
    memory.mark_fired(chosen.id);
    fired.push_back(Diagnosis{chosen.id, chosen.conclusion, chosen.solution});
    std::erase_if(agenda.ready(),
                  [&](const Production& p) { return p.id == chosen.id; });
    learn(Fact{"conclusion", chosen.conclusion});
  }
  return fired;
}

std::vector<Diagnosis> forward_chain(const RuleBase& rb,
                                     std::span<const Fact> initial_facts) {
  const std::vector<Production> rules = to_productions(rb);
  return forward_chain(std::span<const Production>(rules), initial_facts);
}

std::vector<Fact> answer_facts(std::span<const std::string> answers) {
  std::vector<Fact> facts;
  for (const std::string& a : answers) {
    std::string value = normalize(a);
    if (!value.empty()) facts.push_back(Fact{"answer", std::move(value)});
  }
  return facts;
}

}  // namespace kbts
