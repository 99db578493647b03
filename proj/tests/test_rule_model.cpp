#include <doctest.h>

#include <random>
#include <set>

#include "kbts/error.hpp"
#include "kbts/rule_model.hpp"
#include "kbts/text.hpp"
#include "test_support.hpp"

using namespace kbts;
using kbts::testing::TempDir;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

void check_pairs_distinct(const RuleBase& rb) {
  std::set<std::string> keys;
  for (const Rule& r : rb.rules()) {
    CHECK(keys.insert(pair_key(r.condition_a, r.condition_b)).second);
  }
}

}  // namespace

TEST_CASE("normalize collapses whitespace and keeps case") {
  CHECK(normalize("  SMART   Warning Displayed ") == "SMART Warning Displayed");
  CHECK(normalize("Audio") == "Audio");
  CHECK(normalize("Hard\t Disk") == "Hard Disk");
  CHECK(normalize("") == "");
  CHECK(normalize(" \t\n ") == "");
  CHECK(fold_key("Hard   DISK") == "hard disk");
  CHECK(equivalent("hard   disk", "Hard Disk"));
}

TEST_CASE("normalize is idempotent") {
  std::mt19937 rng(7);
  const std::string alphabet = "ab \t\nXY.";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = 0; k < 12; ++k) s.push_back(alphabet[pick(rng)]);
    CHECK(normalize(normalize(s)) == normalize(s));
  }
}

TEST_CASE("add_rule assigns ids and bumps the version") {
  RuleBase rb;
  const Rule r = rb.add_rule("Audio", "Driver Warning", "Driver Conflict or Incompatible Driver",
                             "Install The Appropriate Driver");
  CHECK(r.id == 1);
  CHECK(r.condition_b == "Driver Warning");
  CHECK(rb.version() == 1);
  CHECK(rb.at(1) == r);

  SUBCASE("same pair twice is a duplicate, case-insensitively") {
    CHECK(kind_of([&] { rb.add_rule("audio", "driver   WARNING", "x", "y"); }) ==
          ErrorKind::DuplicateRule);
    CHECK(rb.version() == 1);
  }
  SUBCASE("blank field") {
    CHECK(kind_of([&] { rb.add_rule("BIOS", "   ", "x", "y"); }) == ErrorKind::EmptyField);
    CHECK(rb.size() == 1);
  }
  SUBCASE("stored text is normalized") {
    const Rule n = rb.add_rule("  Hard\tDisk ", "SMART  Warning", " c ", "d");
    CHECK(n.condition_a == "Hard Disk");
    CHECK(n.condition_b == "SMART Warning");
    CHECK(n.conclusion == "c");
  }
}

TEST_CASE("update_rule") {
  RuleBase rb;
  rb.add_rule("A", "B", "C", "D");
  rb.add_rule("A", "E", "F", "G");

  const Rule updated = rb.update_rule(1, RuleFields{.solution = "New Fix"});
  CHECK(updated.id == 1);
  CHECK(updated.solution == "New Fix");
  CHECK(updated.conclusion == "C");
  CHECK(rb.version() == 3);

  CHECK(kind_of([&] { rb.update_rule(99, RuleFields{.solution = "x"}); }) ==
        ErrorKind::NotFound);
  CHECK(kind_of([&] { rb.update_rule(2, RuleFields{.condition_b = "b"}); }) ==
        ErrorKind::DuplicateRule);
  CHECK(kind_of([&] { rb.update_rule(2, RuleFields{.conclusion = " "}); }) ==
        ErrorKind::EmptyField);
  CHECK(rb.version() == 3);
  // Re-casing a rule's own pair is not a collision with itself.
  CHECK(rb.update_rule(1, RuleFields{.condition_b = "b"}).condition_b == "b");
}

TEST_CASE("delete_rule never reuses ids") {
  RuleBase rb;
  rb.add_rule("A", "B", "C", "D");
  rb.add_rule("A", "E", "F", "G");
  rb.delete_rule(2);
  CHECK(rb.find(2) == nullptr);
  CHECK(kind_of([&] { rb.at(2); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { rb.delete_rule(2); }) == ErrorKind::NotFound);
  CHECK(rb.add_rule("X", "Y", "Z", "W").id == 3);
  CHECK(rb.version() == 4);
}

TEST_CASE("mutations keep pairs distinct and count versions exactly") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> sym(0, 3);
  std::uniform_int_distribution<int> op(0, 2);
  for (int round = 0; round < 50; ++round) {
    RuleBase rb;
    Version successes = 0;
    for (int step = 0; step < 40; ++step) {
      try {
        switch (op(rng)) {
          case 0:
            rb.add_rule("c" + std::to_string(sym(rng)), "S" + std::to_string(sym(rng)), "x", "y");
            break;
          case 1:
            rb.update_rule(sym(rng) + 1, RuleFields{.condition_b = "s" + std::to_string(sym(rng))});
            break;
          default:
            rb.delete_rule(sym(rng) + 1);
        }
        ++successes;
      } catch (const Error&) {
      }
      check_pairs_distinct(rb);
      CHECK(rb.version() == successes);
      CHECK(std::is_sorted(rb.rules().begin(), rb.rules().end(),
                           [](const Rule& a, const Rule& b) { return a.id < b.id; }));
    }
  }
}

TEST_CASE("save then load round-trips exactly") {
  TempDir dir;
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    const RuleBase rb = kbts::testing::random_rulebase(rng);
    const auto path = dir / "rules.json";
    save(rb, path);
    const RuleBase back = load(path);
    CHECK(back == rb);
    CHECK(to_json_text(back) == kbts::testing::read_file(path));
  }
  // Only the target file remains.
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()),
                      std::filesystem::directory_iterator()) == 1);
}

TEST_CASE("file format") {
  RuleBase rb;
  rb.add_rule("Audio", "Scratchy Sound", "Signal Interference",
              "Stay Away from Radio Frequency Sources");
  CHECK(to_json_text(rb) ==
        "{\n"
        "  \"version\": 1,\n"
        "  \"rules\": [\n"
        "    {\n"
        "      \"id\": 1,\n"
        "      \"if\": \"Audio\",\n"
        "      \"and\": \"Scratchy Sound\",\n"
        "      \"then\": \"Signal Interference\",\n"
        "      \"solution\": \"Stay Away from Radio Frequency Sources\"\n"
        "    }\n"
        "  ]\n"
        "}\n");

  SUBCASE("high-water mark survives deleting the newest rule") {
    rb.add_rule("Audio", "Driver Warning", "c", "d");
    rb.delete_rule(2);
    const RuleBase back = parse_rulebase(to_json_text(rb));
    CHECK(back.last_id() == 2);
    RuleBase copy = back;
    CHECK(copy.add_rule("New", "Rule", "c", "d").id == 3);
  }
}

TEST_CASE("load errors") {
  SUBCASE("duplicate pair names both records") {
    const std::string text = R"({"version": 4, "rules": [
      {"id": 1, "if": "Audio", "and": "Hiss", "then": "a", "solution": "b"},
      {"id": 2, "if": "Video", "and": "Flicker", "then": "a", "solution": "b"},
      {"id": 5, "if": "AUDIO", "and": "hiss", "then": "c", "solution": "d"}]})";
    try {
      parse_rulebase(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.records() == std::vector<std::size_t>{0, 2});
      CHECK(std::string(e.what()).find("record 0 and record 2") != std::string::npos);
    }
  }
  SUBCASE("syntax error reports a line") {
    try {
      parse_rulebase("{\n  \"version\": 1,\n  \"rules\": [\n    {\"id\": 1,,}\n  ]\n}\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("structural problems") {
    CHECK_THROWS_AS(parse_rulebase("[]"), ParseError);
    CHECK_THROWS_AS(parse_rulebase(R"({"rules": []})"), ParseError);
    CHECK_THROWS_AS(parse_rulebase(R"({"version": 1, "rules": [{"id": 1}]})"), ParseError);
    CHECK_THROWS_AS(parse_rulebase(
                        R"({"version": 1, "rules": [{"id": 2, "if": "a", "and": "b", "then": "c", "solution": "d"},
                                                     {"id": 1, "if": "e", "and": "f", "then": "g", "solution": "h"}]})"),
                    ParseError);
    CHECK_THROWS_AS(parse_rulebase(
                        R"({"version": 1, "rules": [{"id": 1, "if": " ", "and": "b", "then": "c", "solution": "d"}]})"),
                    ParseError);
  }
  SUBCASE("empty rules keep the stored version") {
    const RuleBase rb = parse_rulebase(R"({"version": 17, "rules": []})");
    CHECK(rb.empty());
    CHECK(rb.version() == 17);
  }
  SUBCASE("missing file") {
    TempDir dir;
    CHECK(kind_of([&] { load(dir / "absent.json"); }) == ErrorKind::IoError);
  }
}

TEST_CASE("seed corpus") {
  const RuleBase rb = seed_corpus();
  REQUIRE(rb.size() == 33);
  for (std::size_t i = 0; i < rb.size(); ++i) {
    CHECK(rb.rules()[i].id == static_cast<RuleId>(i + 1));
  }
  const Rule* smart = rb.find_pair("Hard Disk", "SMART Warning Displayed");
  REQUIRE(smart != nullptr);
  CHECK(smart->conclusion == "Serious Mechanical Problems are Detected");
  CHECK(smart->solution == "Backup & Replace Your Drive");

  const Rule* psu = rb.find_pair("Power Supply", "No Leds, No Fans are Turn");
  REQUIRE(psu != nullptr);
  CHECK(psu->conclusion == "Defective Power Supply");
  CHECK(psu->solution == "Replace Power Supply");

  CHECK(std::count_if(rb.rules().begin(), rb.rules().end(),
                      [](const Rule& r) { return r.condition_a == "Mouse"; }) == 4);
  CHECK(rb.rules().front().condition_b == "Sound Card can't be Detected.");
  CHECK(rb.rules().back().solution == "Remove all Connected Cards and Try Again");
}

TEST_CASE("facts compare by normalized slot and value") {
  CHECK(Fact{"Category", "Hard  Disk"} == Fact{"category", "hard disk"});
  CHECK_FALSE(Fact{"category", "Hard Disk"} == Fact{"symptom", "Hard Disk"});
  CHECK(kind_of([] { Fact::make("slot", "  "); }) == ErrorKind::EmptyField);
  CHECK(Fact::make(" slot ", " v  w ").value == "v w");
}
