// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "kbts/agent.hpp"
#include "kbts/cli.hpp"
#include "kbts/decision_tree.hpp"
#include "kbts/fuzzy.hpp"
#include "kbts/inference.hpp"
#include "kbts/rule_model.hpp"
#include "kbts/text.hpp"
#include "test_support.hpp"

using namespace kbts;
using Clock = std::chrono::steady_clock;
namespace kt = kbts::testing;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& criterion) {
  Outcome o;
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct RefRow {
  std::string a, b, then, solution;
};

// Tab-separated transcription of the published rule table; header first,
// blank lines ignored.
std::vector<RefRow> reference_rows() {
  std::istringstream in(kt::fixture_text("reference_rules.tsv"));
  std::vector<RefRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> f;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, '\t');) f.push_back(cell);
    if (f.size() != 4) throw std::runtime_error("bad reference row: " + line);
    rows.push_back({f[0], f[1], f[2], f[3]});
  }
  return rows;
}

// "- IF beep IS <value> THEN <message>" lines.
std::map<std::string, std::string> reference_beep_messages() {
  std::istringstream in(kt::fixture_text("reference_beep_rules.txt"));
  std::map<std::string, std::string> out;
  for (std::string line; std::getline(in, line);) {
    const auto is = line.find(" IS ");
    const auto then = line.find(" THEN ");
    if (is == std::string::npos || then == std::string::npos) continue;
    out[line.substr(is + 4, then - is - 4)] = line.substr(then + 6);
  }
  return out;
}

Outcome table_reproduction() {
  const std::vector<RefRow> rows = reference_rows();
  const RuleBase rb = seed_corpus();
  if (rows.size() != 33 || rb.size() != 33) {
    return {false, "expected 33 rows, reference has " + std::to_string(rows.size()) +
                       ", corpus has " + std::to_string(rb.size())};
  }
  const auto t0 = Clock::now();
  int matched = 0;
  for (const RefRow& row : rows) {
    const auto found = forward_chain(rb, answer_facts(std::vector<std::string>{row.a, row.b}));
    if (found.size() == 1 && found[0].conclusion == normalize(row.then) &&
        found[0].solution == normalize(row.solution)) {
      ++matched;
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << std::setprecision(3) << matched << "/33 exact, " << elapsed << " s";
  return {matched == 33 && elapsed < 1.0, d.str()};
}

Outcome session_equivalence() {
  const RuleBase rb = seed_corpus();
  auto tree = std::make_shared<const DecisionTree>(DecisionTree::build(rb));
  int same = 0;
  for (const Rule& r : rb.rules()) {
    Session s = start_session(tree).first;
    s.answer(r.condition_a);
    const AnswerResult res = s.answer(r.condition_b);
    const auto* d = std::get_if<Diagnosis>(&res);
    const auto chained = forward_chain(rb, answer_facts(std::vector<std::string>{r.condition_a, r.condition_b}));
    if (d != nullptr && chained.size() == 1 && *d == chained[0] && s.closed()) ++same;
  }
  return {same == 33, std::to_string(same) + "/33 identical diagnoses"};
}

Outcome fuzzy_rule_table() {
  using fuzzy::BeepPattern;
  const std::map<std::string, std::string> expected = reference_beep_messages();
  const fuzzy::MembershipFunction mf = fuzzy::MembershipFunction::standard();
  // Each duration must sit on its class's plateau; if the breakpoints move,
  // the case is reported as a miss instead of silently changing class.
  const std::vector<std::pair<BeepPattern, fuzzy::LinguisticValue>> cases{
      {{0.1, false}, fuzzy::LinguisticValue::VeryShort},
      {{0.7, false}, fuzzy::LinguisticValue::Short},
      {{1.5, false}, fuzzy::LinguisticValue::Long},
      {{3.0, false}, fuzzy::LinguisticValue::VeryLong},
      {{6.0, false}, fuzzy::LinguisticValue::Continuous},
      {{1.0, true}, fuzzy::LinguisticValue::Infinite}};
  int exact = 0;
  std::string misses;
  for (const auto& [pattern, value] : cases) {
    if (!pattern.repeating_without_end &&
        mf.shape(value).degree(pattern.duration_seconds) != 1.0) {
      misses += " [" + std::to_string(pattern.duration_seconds) + " s not on plateau]";
      continue;
    }
    const fuzzy::PostDiagnosis d = mf.diagnose_beep(pattern);
    const auto it = expected.find(std::string(fuzzy::label(value)));
    if (it != expected.end() && d.linguistic == value && d.message == it->second) {
      ++exact;
    } else {
      misses += " [" + std::string(fuzzy::label(value)) + "]";
    }
  }
  return {exact == 6 && expected.size() == 6, std::to_string(exact) + "/6 messages exact" + misses};
}

Outcome oracle_equivalence() {
  std::mt19937 rng(20240601);
  const auto t0 = Clock::now();
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const kt::RandomChainCase c = kt::random_chain_case(rng, 20, 8);
    std::set<std::string> got;
    for (const Diagnosis& d : forward_chain(c.rules, kt::as_facts(c.facts))) {
      got.insert(d.conclusion);
    }
    if (got == kt::brute_force_conclusions(c.rules, c.facts)) ++agree;
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << std::setprecision(3) << agree << "/1000 agree with the brute-force fixpoint, " << elapsed << " s";
  return {agree == 1000 && elapsed < 30.0, d.str()};
}

Outcome fuzzy_invariants() {
  const fuzzy::MembershipFunction mf = fuzzy::MembershipFunction::standard();
  int points = 0, in_range = 0, covered = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double d = i * 0.01;
    ++points;
    bool ok = true;
    double best = 0;
    for (const auto& [v, mu] : mf.fuzzify(d)) {
      ok = ok && mu >= 0.0 && mu <= 1.0;
      best = std::max(best, mu);
    }
    in_range += ok ? 1 : 0;
    covered += best > 0 ? 1 : 0;
  }
  int round_trips = 0;
  for (fuzzy::LinguisticValue v : fuzzy::kDurationValues) {
    if (mf.classify({mf.defuzzify(v), false}) == v) ++round_trips;
  }
  std::ostringstream d;
  d << in_range << "/" << points << " in [0,1], " << covered << "/" << points << " covered, "
    << round_trips << "/5 round trips";
  return {in_range == points && covered == points && round_trips == 5, d.str()};
}

Outcome agent_idempotence() {
  const std::map<std::string, std::string> pages{
      {"http://kb.example/a", kt::fixture_text("source_a.html")},
      {"http://kb.example/b", kt::fixture_text("source_b.html")},
      {"http://kb.example/audio", kt::fixture_text("audio_rules.html")},
      {"http://kb.example/messy", kt::fixture_text("malformed.html")}};
  const agent::Fetcher fetch = [&](const std::string& url, std::chrono::seconds) {
    auto it = pages.find(url);
    if (it == pages.end()) return agent::FetchResult{false, "", "unreachable"};
    return agent::FetchResult{true, it->second, ""};
  };
  agent::SourceConfig cfg;
  for (const auto& [url, body] : pages) cfg.sources.push_back(url);
  cfg.sources.push_back("http://down.example/");

  RuleBase rb = seed_corpus();
  const agent::SyncReport first = agent::sync(rb, cfg, fetch);
  const RuleBase after = rb;
  const agent::SyncReport second = agent::sync(rb, cfg, fetch);

  bool identity = true;
  for (const agent::SyncReport* r : {&first, &second}) {
    for (const agent::SourceReport& s : r->sources) {
      identity = identity && s.candidates == s.added + s.skipped_duplicates + s.malformed;
    }
  }
  std::ostringstream d;
  d << "first sync added " << first.total_added() << ", re-sync added " << second.total_added()
    << ", accounting identity " << (identity ? "holds" : "violated");
  return {first.total_added() > 0 && second.total_added() == 0 && rb == after && identity,
          d.str()};
}

Outcome export_import_export() {
  kt::TempDir dir;
  const std::string rules = (dir / "rules.json").string();
  const std::string e1 = (dir / "e1.json").string();
  const std::string e2 = (dir / "e2.json").string();
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };
  int ok = 0;
  ok += run({"--rules", rules, "--seed-if-missing", "rules", "export", "--file", e1}) == 0;
  ok += run({"--rules", rules, "rules", "import", "--file", e1}) == 0;
  ok += run({"--rules", rules, "rules", "export", "--file", e2}) == 0;
  const bool same = ok == 3 && kt::read_file(e1) == kt::read_file(e2) && !kt::read_file(e1).empty();

  // Same check on a store with edits and a deleted newest rule.
  RuleBase rb = seed_corpus();
  rb.add_rule("Monitor", "Screen Flickers", "Low Refresh Rate", "Raise the Refresh Rate");
  rb.update_rule(5, RuleFields{.solution = "Update the BIOS \"firmware\""});
  rb.delete_rule(34);
  save(rb, dir / "edited.json");
  const std::string r2 = (dir / "rules2.json").string();
  const std::string f1 = (dir / "f1.json").string();
  const std::string f2 = (dir / "f2.json").string();
  run({"--rules", r2, "rules", "import", "--file", (dir / "edited.json").string()});
  run({"--rules", r2, "rules", "export", "--file", f1});
  run({"--rules", r2, "rules", "import", "--file", f1});
  run({"--rules", r2, "rules", "export", "--file", f2});
  const bool same_edited = kt::read_file(f1) == kt::read_file(f2) && !kt::read_file(f1).empty();
  return {same && same_edited, std::string("seed ") + (same ? "identical" : "differs") +
                                   ", edited " + (same_edited ? "identical" : "differs")};
}

// Starts `kbts serve` and returns its pid and port.
std::pair<pid_t, int> spawn_server(const std::string& config_path) {
  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    const int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
    ::execl(KBTS_BINARY, KBTS_BINARY, "--config", config_path.c_str(), "serve",
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  std::string line;
  char ch = 0;
  while (::read(fds[0], &ch, 1) == 1 && ch != '\n') line.push_back(ch);
  ::close(fds[0]);
  const auto colon = line.rfind(':');
  if (line.rfind("kbts listening on ", 0) != 0 || colon == std::string::npos) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    throw std::runtime_error("server did not start: '" + line + "'");
  }
  return {pid, std::stoi(line.substr(colon + 1))};
}

Outcome kill_after_ack() {
  kt::TempDir dir;
  const auto rules = dir / "rules.json";
  kt::write_file(dir / "kbts.json",
                 nlohmann::json{{"listen_addr", "127.0.0.1:0"},
                                {"rulebase_path", "rules.json"},
                                {"seed_if_missing", true}}
                     .dump());
  const int rounds = 5;
  int survived = 0;
  for (int round = 0; round < rounds; ++round) {
    const auto [pid, port] = spawn_server((dir / "kbts.json").string());
    httplib::Client c("127.0.0.1", port);
    const nlohmann::json body{{"if", "Durability"},
                              {"and", "Round " + std::to_string(round)},
                              {"then", "Acknowledged"},
                              {"solution", "Must Survive"}};
    auto res = c.Post("/admin/rules", body.dump(), "application/json");
    // Kill immediately after the acknowledgement arrives.
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    if (!res || res->status != 201) continue;
    const RuleBase on_disk = load(rules);
    const Rule* r = on_disk.find_pair("Durability", "Round " + std::to_string(round));
    if (r != nullptr && r->id == nlohmann::json::parse(res->body)["id"].get<RuleId>()) {
      ++survived;
    }
  }
  const bool no_temp = std::distance(std::filesystem::directory_iterator(dir.path()),
                                     std::filesystem::directory_iterator()) == 2;
  std::ostringstream d;
  d << survived << "/" << rounds << " acknowledged writes present after SIGKILL"
    << (no_temp ? "" : ", stray files left");
  return {survived == rounds, d.str()};
}

}  // namespace

int main() {
  report("table reproduction", table_reproduction);
  report("session equivalence", session_equivalence);
  report("fuzzy rule table", fuzzy_rule_table);
  report("oracle equivalence", oracle_equivalence);
  report("fuzzy invariants", fuzzy_invariants);
  report("agent idempotence", agent_idempotence);
  report("persistence: export/import/export", export_import_export);
  report("persistence: kill after acknowledged write", kill_after_ack);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
