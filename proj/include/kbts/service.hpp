#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include <json.hpp>

#include "kbts/agent.hpp"
#include "kbts/config.hpp"
#include "kbts/store.hpp"

namespace httplib {
class Server;
}

namespace kbts {

nlohmann::json rule_to_json(const Rule& r);
nlohmann::json question_to_json(const Question& q);
nlohmann::json diagnosis_to_json(const Diagnosis& d);

/// HTTP facade over the store, the questionnaire sessions, the beep
/// classifier and the acquisition agent.
class DiagnosticService {
 public:
  DiagnosticService(ServiceConfig config, std::unique_ptr<RuleStore> store,
                    agent::Fetcher fetcher = agent::default_fetch);

  /// Registers every endpoint on server.
  void bind(httplib::Server& server);

  /// One acquisition pass. Pages are fetched before the writer lock is taken;
  /// only dedup and insertion run as the writer. Runs are mutually exclusive.
  agent::SyncReport sync_agent();
  std::vector<agent::SyncReport> recent_reports() const;

  RuleStore& store() { return *store_; }
  SessionRegistry& sessions() { return sessions_; }
  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  std::unique_ptr<RuleStore> store_;
  SessionRegistry sessions_;
  agent::Fetcher fetcher_;
  agent::AgentLog log_;
  std::mutex agent_mu_;
  mutable std::mutex reports_mu_;
  std::deque<agent::SyncReport> reports_;
};

/// Loads the store, starts the periodic agent (when sources are configured)
/// and serves HTTP until SIGINT/SIGTERM. Returns a process exit code.
int serve(const ServiceConfig& config);

}  // namespace kbts
