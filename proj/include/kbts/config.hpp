#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kbts/agent.hpp"
#include "kbts/fuzzy.hpp"

namespace kbts {

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path rulebase_path = "rules.json";
  bool seed_if_missing = false;
  fuzzy::MembershipFunction membership = fuzzy::MembershipFunction::standard();
  agent::SourceConfig agent;
  /// Defaults to <rulebase_path>.agent.log.
  std::filesystem::path agent_log_path;
  int session_idle_timeout_seconds = 1800;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Relative paths are resolved against base_dir. Throws InvalidConfig.
ServiceConfig parse_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});

/// Throws IoError or InvalidConfig.
ServiceConfig load_config(const std::filesystem::path& path);

/// Applies {"very_short": [a,b,c,d], ..., "continuous": [a,b]} overrides to
/// the standard breakpoints. Throws InvalidConfig.
fuzzy::MembershipFunction parse_breakpoints(const nlohmann::json& overrides);

}  // namespace kbts
