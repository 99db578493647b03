#include "kbts/config.hpp"

#include <fstream>

#include "kbts/error.hpp"

namespace kbts {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, what);
}

std::pair<std::string, int> split_listen_addr(const std::string& addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    bad("listen_addr must be host:port, got '" + addr + "'");
  }
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    bad("listen_addr has an invalid port: '" + addr + "'");
  }
  if (port < 0 || port > 65535) bad("listen_addr port out of range: '" + addr + "'");
  return {addr.substr(0, colon), port};
}

template <typename T>
T get_as(const nlohmann::json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("config key '") + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& p,
                              const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

void ServiceConfig::validate() const {
  if (rulebase_path.empty()) bad("rulebase_path must not be empty");
  if (session_idle_timeout_seconds <= 0) bad("session_idle_timeout_seconds must be positive");
  if (listen_host.empty()) bad("listen_addr host must not be empty");
  agent.validate();
}

fuzzy::MembershipFunction parse_breakpoints(const nlohmann::json& overrides) {
  if (!overrides.is_object()) bad("fuzzy_breakpoints must be an object");
  fuzzy::MembershipFunction mf = fuzzy::MembershipFunction::standard();
  std::array<fuzzy::Trapezoid, 5> shapes{};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    shapes[i] = mf.shape(fuzzy::kDurationValues[i]);
  }
  for (const auto& [key, value] : overrides.items()) {
    auto v = fuzzy::from_label(key);
    if (!v || *v == fuzzy::LinguisticValue::Infinite) {
      bad("fuzzy_breakpoints: unknown linguistic value '" + key + "'");
    }
    const bool continuous = *v == fuzzy::LinguisticValue::Continuous;
    const std::size_t want = continuous ? 2 : 4;
    if (!value.is_array() || value.size() != want) {
      bad("fuzzy_breakpoints." + key + " needs " + std::to_string(want) + " numbers");
    }
    std::array<double, 4> p{0, 0, fuzzy::kUnbounded, fuzzy::kUnbounded};
    for (std::size_t k = 0; k < want; ++k) {
      if (!value[k].is_number()) bad("fuzzy_breakpoints." + key + " must be numeric");
      p[k] = value[k].get<double>();
    }
    shapes[static_cast<std::size_t>(*v)] = fuzzy::Trapezoid{p[0], p[1], p[2], p[3]};
  }
  return fuzzy::MembershipFunction(shapes);
}

ServiceConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) bad("config must be a JSON object");
  ServiceConfig cfg;
  const std::string listen = get_as<std::string>(doc, "listen_addr", "127.0.0.1:8080");
  std::tie(cfg.listen_host, cfg.listen_port) = split_listen_addr(listen);
  cfg.rulebase_path = resolve(get_as<std::string>(doc, "rulebase_path", ""), base_dir);
  cfg.seed_if_missing = get_as<bool>(doc, "seed_if_missing", false);
  if (auto it = doc.find("fuzzy_breakpoints"); it != doc.end() && !it->is_null()) {
    cfg.membership = parse_breakpoints(*it);
  }
  if (auto it = doc.find("agent"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) bad("agent must be an object");
    cfg.agent.sources = get_as<std::vector<std::string>>(*it, "sources", {});
    cfg.agent.poll_interval_seconds =
        get_as<int>(*it, "poll_interval_seconds", cfg.agent.poll_interval_seconds);
    cfg.agent.fetch_timeout_seconds =
        get_as<int>(*it, "fetch_timeout_seconds", cfg.agent.fetch_timeout_seconds);
    cfg.agent_log_path = resolve(get_as<std::string>(*it, "log_path", ""), base_dir);
  }
  cfg.session_idle_timeout_seconds =
      get_as<int>(doc, "session_idle_timeout_seconds", cfg.session_idle_timeout_seconds);
  if (cfg.agent_log_path.empty() && !cfg.rulebase_path.empty()) {
    cfg.agent_log_path = cfg.rulebase_path;
    cfg.agent_log_path += ".agent.log";
  }
  cfg.validate();
  return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad("config '" + path.string() + "': " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace kbts
