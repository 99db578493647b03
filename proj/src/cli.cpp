#include "kbts/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "kbts/agent.hpp"
#include "kbts/config.hpp"
#include "kbts/error.hpp"
#include "kbts/fuzzy.hpp"
#include "kbts/inference.hpp"
#include "kbts/service.hpp"
#include "kbts/store.hpp"

namespace kbts::cli {

namespace {

constexpr const char* kDefaultRulesPath = "kbts_rules.json";

struct Options {
  std::string config_path;
  std::string rules_path;
  bool seed_if_missing = false;

  std::vector<std::string> facts;
  double seconds = 0;
  bool repeating = false;
  std::string rules_action;
  std::string file;
  std::vector<std::string> sources;
};

ServiceConfig resolve_config(const Options& opt) {
  ServiceConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = load_config(opt.config_path);
  } else {
    cfg.rulebase_path = kDefaultRulesPath;
  }
  if (!opt.rules_path.empty()) cfg.rulebase_path = opt.rules_path;
  if (opt.seed_if_missing) cfg.seed_if_missing = true;
  if (opt.config_path.empty() || !opt.rules_path.empty()) {
    cfg.agent_log_path = cfg.rulebase_path;
    cfg.agent_log_path += ".agent.log";
  }
  return cfg;
}

int cmd_diagnose(const ServiceConfig& cfg, const Options& opt, std::ostream& out,
                 std::ostream& err) {
  std::unique_ptr<RuleStore> store;
  try {
    store = RuleStore::open(cfg.rulebase_path, cfg.seed_if_missing);
  } catch (const Error& e) {
    err << "kbts: " << e.what() << '\n';
    return kExitLoadFailure;
  }
  const std::vector<Fact> facts = answer_facts(opt.facts);
  const std::vector<Diagnosis> found = forward_chain(*store->snapshot().rules, facts);
  for (const Diagnosis& d : found) out << d.conclusion << " -> " << d.solution << '\n';
  return found.empty() ? kExitNoDiagnosis : kExitOk;
}

int cmd_beep(const ServiceConfig& cfg, const Options& opt, std::ostream& out,
             std::ostream& err) {
  try {
    const fuzzy::PostDiagnosis d =
        cfg.membership.diagnose_beep(fuzzy::BeepPattern{opt.seconds, opt.repeating});
    out << fuzzy::label(d.linguistic) << ": " << d.message << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "kbts beep: " << e.what() << '\n';
    return kExitUsage;
  }
}

void print_table(const RuleBase& rb, std::ostream& out) {
  out << "IF\tAND\tTHEN\tSOLUTION\n";
  for (const Rule& r : rb.rules()) {
    out << r.condition_a << '\t' << r.condition_b << '\t' << r.conclusion << '\t'
        << r.solution << '\n';
  }
}

int cmd_rules(const ServiceConfig& cfg, const Options& opt, std::ostream& out,
              std::ostream& err) {
  if (opt.rules_action == "import") {
    if (opt.file.empty()) {
      err << "kbts rules import: --file is required\n";
      return kExitUsage;
    }
    RuleBase incoming;
    try {
      incoming = load(opt.file);
    } catch (const Error& e) {
      err << "kbts rules import: " << opt.file << ": " << e.what() << '\n';
      return kExitFailure;
    }
    RuleBase current;
    std::error_code ec;
    if (std::filesystem::exists(cfg.rulebase_path, ec)) {
      try {
        current = load(cfg.rulebase_path);
      } catch (const ParseError&) {
        // An unreadable store is replaced wholesale.
      }
    }
    const RuleBase next = imported(current, incoming);
    try {
      if (!(next == current) || !std::filesystem::exists(cfg.rulebase_path, ec)) {
        save(next, cfg.rulebase_path);
      }
    } catch (const Error& e) {
      err << "kbts rules import: " << e.what() << '\n';
      return kExitFailure;
    }
    out << "imported " << next.size() << " rules (version " << next.version() << ")\n";
    return kExitOk;
  }

  std::unique_ptr<RuleStore> store;
  try {
    store = RuleStore::open(cfg.rulebase_path, cfg.seed_if_missing);
  } catch (const Error& e) {
    err << "kbts: " << e.what() << '\n';
    return kExitLoadFailure;
  }
  const Snapshot snap = store->snapshot();
  if (opt.rules_action == "list") {
    print_table(*snap.rules, out);
    return kExitOk;
  }
  // export
  if (opt.file.empty()) {
    out << to_json_text(*snap.rules);
    return kExitOk;
  }
  try {
    save(*snap.rules, opt.file);
  } catch (const Error& e) {
    err << "kbts rules export: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_agent_sync(ServiceConfig cfg, const Options& opt, std::ostream& out,
                   std::ostream& err) {
  if (!opt.sources.empty()) cfg.agent.sources = opt.sources;
  if (cfg.agent.sources.empty()) {
    err << "kbts agent sync: no sources configured (use --source or the config file)\n";
    return kExitUsage;
  }
  std::unique_ptr<RuleStore> store;
  try {
    store = RuleStore::open(cfg.rulebase_path, cfg.seed_if_missing);
  } catch (const Error& e) {
    err << "kbts: " << e.what() << '\n';
    return kExitLoadFailure;
  }
  DiagnosticService service(cfg, std::move(store));
  try {
    out << agent::render(service.sync_agent());
  } catch (const Error& e) {
    err << "kbts agent sync: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-based PC troubleshooting: rules, diagnosis, beep codes"};
  app.name("kbts");
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "Service configuration file (JSON)");
  app.add_option("--rules", opt.rules_path, "Rule-base file (overrides the config)");
  app.add_flag("--seed-if-missing", opt.seed_if_missing,
               "Create the rule-base from the bundled corpus when absent");

  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");

  CLI::App* diagnose = app.add_subcommand("diagnose", "Forward-chain over the given facts");
  diagnose->add_option("--fact", opt.facts, "Observed fact (repeatable)")->required();

  CLI::App* beep = app.add_subcommand("beep", "Classify a POST beep");
  beep->add_option("--seconds", opt.seconds, "Beep duration in seconds")->required();
  beep->add_flag("--repeating", opt.repeating, "The beep repeats without end");

  CLI::App* rules = app.add_subcommand("rules", "List, import or export the rule-base");
  rules->add_option("action", opt.rules_action, "list | import | export")
      ->required()
      ->check(CLI::IsMember({"list", "import", "export"}));
  rules->add_option("--file", opt.file, "File to import from / export to");

  CLI::App* agent_cmd = app.add_subcommand("agent", "Knowledge acquisition agent");
  agent_cmd->require_subcommand(1);
  CLI::App* agent_sync = agent_cmd->add_subcommand("sync", "Run one acquisition pass");
  agent_sync->add_option("--source", opt.sources, "Source URL (repeatable)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  ServiceConfig cfg;
  try {
    cfg = resolve_config(opt);
  } catch (const Error& e) {
    err << "kbts: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig ? kExitUsage : kExitLoadFailure;
  }

  if (serve_cmd->parsed()) return serve(cfg);
  if (diagnose->parsed()) return cmd_diagnose(cfg, opt, out, err);
  if (beep->parsed()) return cmd_beep(cfg, opt, out, err);
  if (rules->parsed()) return cmd_rules(cfg, opt, out, err);
  if (agent_sync->parsed()) return cmd_agent_sync(cfg, opt, out, err);
  return kExitUsage;
}

}  // namespace kbts::cli
