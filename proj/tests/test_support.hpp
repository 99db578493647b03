#pragma once

// Shared helpers for the unit and acceptance suites: scratch directories,
// fixture access, random rule-base generators and the brute-force chaining
// oracle. The oracle deliberately shares no code with the engine.

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kbts/inference.hpp"
#include "kbts/rule_model.hpp"

namespace kbts::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "kbts-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) std::abort();
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(KBTS_FIXTURE_DIR) / name;
}

inline std::string fixture_text(const std::string& name) { return read_file(fixture(name)); }

/// Symbols "s0".."s{alphabet-1}"; already normalized and lower-case.
inline std::string symbol(int i) { return "s" + std::to_string(i); }

struct RandomChainCase {
  std::vector<Production> rules;
  std::vector<std::string> facts;
};

/// Up to max_rules productions with 1..3 conditions over an alphabet of at
/// most max_alphabet symbols; conclusions are drawn from the same alphabet so
/// rules chain.
inline RandomChainCase random_chain_case(std::mt19937& rng, int max_rules = 20,
                                         int max_alphabet = 8) {
  std::uniform_int_distribution<int> alphabet_size(1, max_alphabet);
  const int alphabet = alphabet_size(rng);
  std::uniform_int_distribution<int> rule_count(0, max_rules);
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  std::uniform_int_distribution<int> arity(1, 3);
  std::bernoulli_distribution coin(0.35);

  RandomChainCase c;
  const int n = rule_count(rng);
  for (int i = 0; i < n; ++i) {
    Production p;
    p.id = i + 1;
    const int k = arity(rng);
    for (int j = 0; j < k; ++j) p.conditions.push_back(symbol(pick(rng)));
    p.conclusion = symbol(pick(rng));
    p.solution = "fix-" + std::to_string(i + 1);
    c.rules.push_back(std::move(p));
  }
  // Shuffle ids so rule order and id order differ.
  std::vector<RuleId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(i + 1);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < n; ++i) c.rules[static_cast<std::size_t>(i)].id = ids[static_cast<std::size_t>(i)];
  for (int s = 0; s < alphabet; ++s) {
    if (coin(rng)) c.facts.push_back(symbol(s));
  }
  return c;
}

/// Naive fixpoint: scan every rule, fire all matching unfired rules, add
/// their conclusions; repeat until nothing changes. Returns the conclusions.
inline std::set<std::string> brute_force_conclusions(const std::vector<Production>& rules,
                                                     const std::vector<std::string>& facts) {
  std::set<std::string> known(facts.begin(), facts.end());
  std::set<std::string> conclusions;
  std::vector<bool> fired(rules.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (fired[i] || rules[i].conditions.empty()) continue;
      bool all = true;
      for (const std::string& c : rules[i].conditions) all = all && known.count(c) != 0;
      if (!all) continue;
      fired[i] = true;
      changed = true;
      conclusions.insert(rules[i].conclusion);
      known.insert(rules[i].conclusion);
    }
  }
  return conclusions;
}

inline std::vector<Fact> as_facts(const std::vector<std::string>& values) {
  std::vector<Fact> out;
  for (const std::string& v : values) out.push_back(Fact{"answer", v});
  return out;
}

/// Random valid rule-base built through add_rule/update_rule/delete_rule,
/// including awkward text (tabs, unicode, quotes, backslashes).
inline RuleBase random_rulebase(std::mt19937& rng, int max_ops = 30) {
  static const std::vector<std::string> words{
      "Disk", "fan", "BIOS", "Beeps", "caf\xc3\xa9", "\"quoted\"", "back\\slash",
      "tab\there", "  spaced  out ", "Ω", "a/b", "100%", "&amp;", "<td>"};
  std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);
  std::uniform_int_distribution<int> op(0, 9);
  auto phrase = [&] { return words[word(rng)] + " " + words[word(rng)]; };
  RuleBase rb;
  std::uniform_int_distribution<int> ops(0, max_ops);
  const int n = ops(rng);
  for (int i = 0; i < n; ++i) {
    try {
      const int o = op(rng);
      if (o < 7 || rb.empty()) {
        rb.add_rule(phrase(), phrase(), phrase(), phrase());
      } else if (o < 9) {
        const Rule& r = rb.rules()[std::uniform_int_distribution<std::size_t>(0, rb.size() - 1)(rng)];
        rb.update_rule(r.id, RuleFields{std::nullopt, phrase(), std::nullopt, phrase()});
      } else {
        const Rule& r = rb.rules()[std::uniform_int_distribution<std::size_t>(0, rb.size() - 1)(rng)];
        rb.delete_rule(r.id);
      }
    } catch (const std::exception&) {
      // duplicate pairs are expected with a small vocabulary
    }
  }
  return rb;
}

}  // namespace kbts::testing
