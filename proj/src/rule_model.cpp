#include "kbts/rule_model.hpp"

#include <algorithm>
#include <unordered_map>

#include "kbts/error.hpp"
#include "kbts/text.hpp"

namespace kbts {

namespace {

std::string require_field(std::string_view raw, std::string_view field_name) {
  std::string value = normalize(raw);
  if (value.empty()) {
    throw Error(ErrorKind::EmptyField,
                "field '" + std::string(field_name) + "' is empty");
  }
  return value;
}

Rule make_rule(RuleId id, std::string_view a, std::string_view b,
               std::string_view c, std::string_view d) {
  Rule r;
  r.id = id;
  r.condition_a = require_field(a, "if");
  r.condition_b = require_field(b, "and");
  r.conclusion = require_field(c, "then");
  r.solution = require_field(d, "solution");
  return r;
}

std::string duplicate_message(const Rule& existing) {
  return "condition pair (" + existing.condition_a + ", " +
         existing.condition_b + ") already used by rule " +
         std::to_string(existing.id);
}

std::string record_label(std::size_t index) {
  return "record " + std::to_string(index);
}

}  // namespace

Fact Fact::make(std::string_view slot, std::string_view value) {
  return Fact{require_field(slot, "slot"), require_field(value, "value")};
}

bool operator==(const Fact& lhs, const Fact& rhs) {
  return fold_key(lhs.slot) == fold_key(rhs.slot) &&
         fold_key(lhs.value) == fold_key(rhs.value);
}

Diagnosis diagnosis_of(const Rule& rule) {
  return Diagnosis{rule.id, rule.conclusion, rule.solution};
}

std::string pair_key(std::string_view condition_a, std::string_view condition_b) {
  // Unit separator keeps ("a b", "c") distinct from ("a", "b c").
  return fold_key(condition_a) + '\x1f' + fold_key(condition_b);
}

RuleBase RuleBase::from_records(std::vector<Rule> rules, Version version,
                                RuleId last_id) {
  RuleBase rb;
  rb.version_ = version;
  std::unordered_map<std::string, std::size_t> seen_pairs;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& in = rules[i];
    if (in.id <= 0) {
      throw ParseError(record_label(i) + ": id must be positive", 0, {i});
    }
    if (i > 0 && in.id <= rules[i - 1].id) {
      const std::string why = in.id == rules[i - 1].id
                                  ? "duplicate id " + std::to_string(in.id)
                                  : "records not sorted by id";
      throw ParseError(record_label(i - 1) + " and " + record_label(i) + ": " + why,
                       0, {i - 1, i});
    }
    Rule r;
    try {
      r = make_rule(in.id, in.condition_a, in.condition_b, in.conclusion,
                    in.solution);
    } catch (const Error& e) {
      throw ParseError(record_label(i) + ": " + e.what(), 0, {i});
    }
    auto [it, inserted] =
        seen_pairs.emplace(pair_key(r.condition_a, r.condition_b), i);
    if (!inserted) {
      throw ParseError(record_label(it->second) + " and " + record_label(i) +
                           ": duplicate condition pair (" + r.condition_a +
                           ", " + r.condition_b + ")",
                       0, {it->second, i});
    }
    rb.rules_.push_back(std::move(r));
  }
  rb.last_id_ = std::max(last_id, rb.rules_.empty() ? 0 : rb.rules_.back().id);
  return rb;
}

const Rule* RuleBase::find(RuleId id) const {
  auto it = std::lower_bound(
      rules_.begin(), rules_.end(), id,
      [](const Rule& r, RuleId value) { return r.id < value; });
  return (it != rules_.end() && it->id == id) ? &*it : nullptr;
}

const Rule& RuleBase::at(RuleId id) const {
  const Rule* r = find(id);
  if (r == nullptr) {
    throw Error(ErrorKind::NotFound, "rule " + std::to_string(id) + " not found");
  }
  return *r;
}

const Rule* RuleBase::find_pair(std::string_view condition_a,
                                std::string_view condition_b) const {
  const std::string key = pair_key(condition_a, condition_b);
  for (const Rule& r : rules_) {
    if (pair_key(r.condition_a, r.condition_b) == key) return &r;
  }
  return nullptr;
}

Rule RuleBase::add_rule(std::string_view condition_a, std::string_view condition_b,
                        std::string_view conclusion, std::string_view solution) {
  Rule r = make_rule(last_id_ + 1, condition_a, condition_b, conclusion, solution);
  if (const Rule* existing = find_pair(r.condition_a, r.condition_b)) {
    throw Error(ErrorKind::DuplicateRule, duplicate_message(*existing));
  }
  rules_.push_back(r);
  last_id_ = r.id;
  ++version_;
  return r;
}

Rule RuleBase::update_rule(RuleId id, const RuleFields& fields) {
  const Rule& current = at(id);
  Rule r = make_rule(id, fields.condition_a.value_or(current.condition_a),
                     fields.condition_b.value_or(current.condition_b),
                     fields.conclusion.value_or(current.conclusion),
                     fields.solution.value_or(current.solution));
  const Rule* clash = find_pair(r.condition_a, r.condition_b);
  if (clash != nullptr && clash->id != id) {
    throw Error(ErrorKind::DuplicateRule, duplicate_message(*clash));
  }
  auto it = std::find_if(rules_.begin(), rules_.end(),
                         [id](const Rule& x) { return x.id == id; });
  *it = r;
  ++version_;
  return r;
}

void RuleBase::delete_rule(RuleId id) {
  auto it = std::find_if(rules_.begin(), rules_.end(),
                         [id](const Rule& x) { return x.id == id; });
  if (it == rules_.end()) {
    throw Error(ErrorKind::NotFound, "rule " + std::to_string(id) + " not found");
  }
  rules_.erase(it);
  ++version_;
}

}  // namespace kbts
