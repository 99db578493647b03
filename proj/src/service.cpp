#include "kbts/service.hpp"

#include <csignal>
#include <iostream>
#include <map>
#include <thread>

#include <httplib.h>

#include "kbts/error.hpp"
#include "kbts/inference.hpp"
#include "kbts/text.hpp"

namespace kbts {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReports = 50;

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateRule: return 409;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::EmptyField: return 422;
    case ErrorKind::NegativeDuration: return 422;
    case ErrorKind::InvalidChoice: return 400;
    case ErrorKind::ParseError: return 400;
    case ErrorKind::SessionClosed: return 410;
    case ErrorKind::EmptyRuleBase: return 503;
    case ErrorKind::NotDefuzzifiable: return 422;
    case ErrorKind::InvalidConfig: return 400;
    case ErrorKind::IoError: return 500;
  }
  return 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace),
                  "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view kind,
                const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  send_json(res, status, extra);
}

// Wraps a handler so library errors map onto HTTP statuses.
httplib::Server::Handler guarded(
    std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const InvalidChoiceError& e) {
      send_error(res, 400, "InvalidChoice", e.what(), {{"valid_options", e.valid_options()}});
    } catch (const Error& e) {
      send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

json body_object(const httplib::Request& req) {
  json body = json::parse(req.body);
  if (!body.is_object()) {
    throw Error(ErrorKind::ParseError, "request body must be a JSON object");
  }
  return body;
}

std::optional<std::string> optional_text(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorKind::ParseError, std::string("\"") + key + "\" must be a string");
  }
  return it->get<std::string>();
}

RuleId path_id(const httplib::Request& req) {
  try {
    return std::stoll(req.matches[1].str());
  } catch (const std::exception&) {
    throw Error(ErrorKind::NotFound, "rule " + req.matches[1].str() + " not found");
  }
}

}  // namespace

json rule_to_json(const Rule& r) {
  return {{"id", r.id},
          {"if", r.condition_a},
          {"and", r.condition_b},
          {"then", r.conclusion},
          {"solution", r.solution}};
}

json question_to_json(const Question& q) {
  return {{"text", q.text}, {"options", q.options}};
}

json diagnosis_to_json(const Diagnosis& d) {
  return {{"rule_id", d.rule_id}, {"conclusion", d.conclusion}, {"solution", d.solution}};
}

DiagnosticService::DiagnosticService(ServiceConfig config, std::unique_ptr<RuleStore> store,
                                     agent::Fetcher fetcher)
    : config_(std::move(config)),
      store_(std::move(store)),
      sessions_(std::chrono::seconds(config_.session_idle_timeout_seconds)),
      fetcher_(std::move(fetcher)),
      log_(config_.agent_log_path) {}

agent::SyncReport DiagnosticService::sync_agent() {
  std::lock_guard agent_lock(agent_mu_);
  const agent::SourceConfig& sources = config_.agent;

  std::map<std::string, agent::FetchResult> pages;
  for (const std::string& url : sources.sources) {
    try {
      pages[url] = fetcher_(url, std::chrono::seconds(sources.fetch_timeout_seconds));
    } catch (const std::exception& e) {
      pages[url] = agent::FetchResult{false, {}, e.what()};
    }
  }
  agent::Fetcher prefetched = [&pages](const std::string& url, std::chrono::seconds) {
    return pages.at(url);
  };

  agent::SyncReport report;
  store_->mutate([&](RuleBase& rb) { report = agent::sync(rb, sources, prefetched); });

  if (!log_.path().empty()) {
    try {
      log_.append(report);
    } catch (const Error& e) {
      std::cerr << "kbts: " << e.what() << '\n';
    }
  }
  std::lock_guard lock(reports_mu_);
  reports_.push_back(report);
  if (reports_.size() > kMaxReports) reports_.pop_front();
  return report;
}

std::vector<agent::SyncReport> DiagnosticService::recent_reports() const {
  std::lock_guard lock(reports_mu_);
  return {reports_.begin(), reports_.end()};
}

void DiagnosticService::bind(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods",
                               "GET, POST, PUT, DELETE, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
    const Snapshot snap = store_->snapshot();
    send_json(res, 200,
              {{"status", "ok"},
               {"rulebase_version", snap.rules->version()},
               {"rule_count", snap.rules->size()}});
  }));

  server.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto [id, question] = sessions_.create(store_->snapshot().tree);
    send_json(res, 201, {{"session_id", id}, {"question", question_to_json(question)}});
  }));

  server.Get(R"(/sessions/([0-9a-f]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               json body;
               const bool found =
                   sessions_.with_session(req.matches[1].str(), [&](Session& s) {
                     json transcript = json::array();
                     for (const auto& [q, a] : s.transcript()) {
                       transcript.push_back({{"question", q}, {"answer", a}});
                     }
                     body = {{"session_id", s.id()},
                             {"tree_version", s.tree_version()},
                             {"closed", s.closed()},
                             {"transcript", std::move(transcript)}};
                     if (!s.closed()) body["question"] = question_to_json(s.current_question());
                   });
               if (!found) {
                 send_error(res, 404, "NotFound", "unknown or expired session");
                 return;
               }
               send_json(res, 200, body);
             }));

  server.Post(R"(/sessions/([0-9a-f]+)/answer)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = body_object(req);
                const std::optional<std::string> choice = optional_text(body, "choice");
                if (!choice) throw Error(ErrorKind::ParseError, "\"choice\" is required");
                json out;
                const bool found =
                    sessions_.with_session(req.matches[1].str(), [&](Session& s) {
                      AnswerResult r = s.answer(*choice);
                      if (auto* q = std::get_if<Question>(&r)) {
                        out = {{"question", question_to_json(*q)}};
                      } else {
                        out = {{"diagnosis", diagnosis_to_json(std::get<Diagnosis>(r))}};
                      }
                    });
                if (!found) {
                  send_error(res, 404, "NotFound", "unknown or expired session");
                  return;
                }
                send_json(res, 200, out);
              }));

  server.Get("/rules", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const Snapshot snap = store_->snapshot();
    const bool filtered = req.has_param("category");
    const std::string category = filtered ? fold_key(req.get_param_value("category")) : "";
    json list = json::array();
    for (const Rule& r : snap.rules->rules()) {
      if (!filtered || fold_key(r.condition_a) == category) list.push_back(rule_to_json(r));
    }
    send_json(res, 200, list);
  }));

  server.Get(R"(/rules/(-?\d+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, rule_to_json(store_->snapshot().rules->at(path_id(req))));
             }));

  server.Post("/admin/rules",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = body_object(req);
                Rule added;
                store_->mutate([&](RuleBase& rb) {
                  added = rb.add_rule(optional_text(body, "if").value_or(""),
                                      optional_text(body, "and").value_or(""),
                                      optional_text(body, "then").value_or(""),
                                      optional_text(body, "solution").value_or(""));
                });
                send_json(res, 201, rule_to_json(added));
              }));

  server.Put(R"(/admin/rules/(-?\d+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const json body = body_object(req);
               RuleFields fields{optional_text(body, "if"), optional_text(body, "and"),
                                 optional_text(body, "then"), optional_text(body, "solution")};
               const RuleId id = path_id(req);
               Rule updated;
               store_->mutate([&](RuleBase& rb) { updated = rb.update_rule(id, fields); });
               send_json(res, 200, rule_to_json(updated));
             }));

  server.Delete(R"(/admin/rules/(-?\d+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const RuleId id = path_id(req);
                  store_->mutate([&](RuleBase& rb) { rb.delete_rule(id); });
                  res.status = 204;
                }));

  server.Post("/beep", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = body_object(req);
    auto duration = body.find("duration_seconds");
    if (duration == body.end() || !duration->is_number()) {
      throw Error(ErrorKind::ParseError, "\"duration_seconds\" must be a number");
    }
    fuzzy::BeepPattern pattern{duration->get<double>(),
                               body.value("repeating_without_end", false)};
    const fuzzy::PostDiagnosis d = config_.membership.diagnose_beep(pattern);
    json memberships = json::object();
    for (const auto& [value, degree] : config_.membership.fuzzify(pattern.duration_seconds)) {
      memberships[std::string(fuzzy::label(value))] = degree;
    }
    send_json(res, 200,
              {{"linguistic", fuzzy::label(d.linguistic)},
               {"message", d.message},
               {"memberships", std::move(memberships)}});
  }));

  server.Post("/admin/agent/sync",
              guarded([this](const httplib::Request&, httplib::Response& res) {
                if (config_.agent.sources.empty()) {
                  send_error(res, 400, "InvalidConfig", "no agent sources configured");
                  return;
                }
                send_json(res, 200, agent::to_json(sync_agent()));
              }));

  server.Get("/admin/agent/reports",
             guarded([this](const httplib::Request&, httplib::Response& res) {
               json list = json::array();
               for (const agent::SyncReport& r : recent_reports()) {
                 list.push_back(agent::to_json(r));
               }
               send_json(res, 200, list);
             }));
}

int serve(const ServiceConfig& config) {
  std::unique_ptr<RuleStore> store;
  try {
    store = RuleStore::open(config.rulebase_path, config.seed_if_missing);
  } catch (const Error& e) {
    std::cerr << "kbts: cannot load rule-base: " << e.what() << '\n';
    return 2;
  }

  // Signals are taken synchronously by a dedicated thread; block them before
  // any other thread exists so they inherit the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  DiagnosticService service(config, std::move(store));
  httplib::Server server;
  service.bind(server);

  int port = config.listen_port;
  if (port == 0) {
    port = server.bind_to_any_port(config.listen_host);
  } else if (!server.bind_to_port(config.listen_host, port)) {
    port = -1;
  }
  if (port < 0) {
    std::cerr << "kbts: cannot listen on " << config.listen_host << ':' << config.listen_port
              << '\n';
    return 2;
  }
  std::cout << "kbts listening on " << config.listen_host << ':' << port << std::endl;

  std::atomic<bool> done{false};
  std::thread signal_waiter([&] {
    const timespec poll{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&signals, nullptr, &poll) > 0) {
        server.stop();
        return;
      }
    }
  });

  std::jthread periodic;
  if (!config.agent.sources.empty()) {
    periodic = std::jthread([&](std::stop_token stop) {
      agent::run_periodic([&] { return service.sync_agent(); },
                          std::chrono::seconds(config.agent.poll_interval_seconds), stop);
    });
  }

  const bool ok = server.listen_after_bind();
  done = true;
  signal_waiter.join();
  if (periodic.joinable()) {
    periodic.request_stop();
    periodic.join();
  }
  return ok ? 0 : 1;
}

}  // namespace kbts
