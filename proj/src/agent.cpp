#include "kbts/agent.hpp"

#include <atomic>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "kbts/error.hpp"
#include "kbts/text.hpp"

namespace kbts::agent {

void SourceConfig::validate() const {
  if (poll_interval_seconds <= 0) {
    throw Error(ErrorKind::InvalidConfig, "poll_interval_seconds must be positive");
  }
  if (fetch_timeout_seconds <= 0) {
    throw Error(ErrorKind::InvalidConfig, "fetch_timeout_seconds must be positive");
  }
}

DedupResult dedup(const std::vector<Candidate>& candidates, const RuleBase& rb) {
  std::unordered_set<std::string> known;
  for (const Rule& r : rb.rules()) known.insert(pair_key(r.condition_a, r.condition_b));
  DedupResult out;
  for (const Candidate& c : candidates) {
    if (known.insert(pair_key(c.condition_a, c.condition_b)).second) {
      out.fresh.push_back(c);
    } else {
      out.duplicates.push_back(c);
    }
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3)
      << std::setfill('0') << millis.count() << 'Z';
  return out.str();
}

std::size_t SyncReport::total_added() const {
  std::size_t n = 0;
  for (const SourceReport& s : sources) n += s.added;
  return n;
}

std::size_t SyncReport::total_skipped() const {
  std::size_t n = 0;
  for (const SourceReport& s : sources) n += s.skipped_duplicates;
  return n;
}

std::size_t SyncReport::total_malformed() const {
  std::size_t n = 0;
  for (const SourceReport& s : sources) n += s.malformed;
  return n;
}

std::size_t SyncReport::total_candidates() const {
  std::size_t n = 0;
  for (const SourceReport& s : sources) n += s.candidates;
  return n;
}

nlohmann::json to_json(const SourceReport& r) {
  nlohmann::json j{{"url", r.url},
                   {"fetched", r.fetched},
                   {"candidates", r.candidates},
                   {"added", r.added},
                   {"skipped_duplicates", r.skipped_duplicates},
                   {"malformed", r.malformed},
                   {"conflicts", r.conflicts}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

nlohmann::json to_json(const SyncReport& r) {
  nlohmann::json sources = nlohmann::json::array();
  for (const SourceReport& s : r.sources) sources.push_back(to_json(s));
  return {{"started", r.started},
          {"finished", r.finished},
          {"added", r.total_added()},
          {"skipped_duplicates", r.total_skipped()},
          {"malformed", r.total_malformed()},
          {"sources", std::move(sources)}};
}

std::string render(const SyncReport& r) {
  std::ostringstream out;
  out << "sync " << r.started << " -> " << r.finished << '\n';
  for (const SourceReport& s : r.sources) {
    out << "  " << s.url << ": ";
    if (!s.fetched) {
      out << "fetch failed (" << s.error << ")\n";
      continue;
    }
    out << "candidates " << s.candidates << ", added " << s.added << ", duplicates "
        << s.skipped_duplicates << ", malformed " << s.malformed << '\n';
    for (const std::string& c : s.conflicts) out << "    kept existing: " << c << '\n';
  }
  out << "added: " << r.total_added() << '\n'
      << "skipped_duplicates: " << r.total_skipped() << '\n'
      << "malformed: " << r.total_malformed() << '\n';
  return out.str();
}

SyncReport sync(RuleBase& rb, const SourceConfig& config, const Fetcher& fetcher) {
  SyncReport report;
  report.started = utc_timestamp();
  const std::chrono::seconds timeout(config.fetch_timeout_seconds);
  for (const std::string& url : config.sources) {
    SourceReport src;
    src.url = url;
    FetchResult fetched;
    try {
      fetched = fetcher(url, timeout);
    } catch (const std::exception& e) {
      fetched = FetchResult{false, {}, e.what()};
    }
    if (!fetched.ok) {
      src.error = fetched.error.empty() ? "fetch failed" : fetched.error;
      report.sources.push_back(std::move(src));
      continue;
    }
    src.fetched = true;
    Extraction page = extract_rules(fetched.body);
    src.malformed = page.malformed;
    src.candidates = page.candidates.size() + page.malformed;

    DedupResult split = dedup(page.candidates, rb);
    src.skipped_duplicates = split.duplicates.size();
    for (const Candidate& d : split.duplicates) {
      const Rule* existing = rb.find_pair(d.condition_a, d.condition_b);
      if (existing != nullptr && (!equivalent(existing->conclusion, d.conclusion) ||
                                  !equivalent(existing->solution, d.solution))) {
        src.conflicts.push_back("rule " + std::to_string(existing->id) + " (" +
                                existing->condition_a + ", " + existing->condition_b +
                                ")");
      }
    }
    for (const Candidate& c : split.fresh) {
      try {
        rb.add_rule(c.condition_a, c.condition_b, c.conclusion, c.solution);
        ++src.added;
      } catch (const Error&) {
        ++src.malformed;
      }
    }
    report.sources.push_back(std::move(src));
  }
  report.finished = utc_timestamp();
  return report;
}

void AgentLog::append(const SyncReport& report) {
  const std::string line = to_json(report).dump() + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open agent log " + path_.string());
  out << line;
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "cannot write agent log " + path_.string());
}

PeriodicStats run_periodic(const SyncJob& job, std::chrono::milliseconds period,
                           std::stop_token stop,
                           const std::function<void(const SyncReport&)>& on_report) {
  PeriodicStats stats;
  std::mutex mu;
  std::condition_variable_any wake;
  std::atomic<bool> busy{false};
  std::thread worker;
  auto next_tick = std::chrono::steady_clock::now() + period;

  while (true) {
    {
      std::unique_lock lock(mu);
      wake.wait_until(lock, stop, next_tick, [] { return false; });
    }
    if (stop.stop_requested()) break;
    next_tick += period;
    if (busy.load()) {
      ++stats.skipped_ticks;
      continue;
    }
    if (worker.joinable()) worker.join();
    busy = true;
    ++stats.runs;
    worker = std::thread([&job, &on_report, &busy] {
      try {
        SyncReport report = job();
        if (on_report) on_report(report);
      } catch (...) {
        // A failed run leaves the schedule intact; the next tick retries.
      }
      busy = false;
    });
  }
  if (worker.joinable()) worker.join();
  return stats;
}

PeriodicStats run_periodic(RuleBase& rb, const SourceConfig& config,
                           const Fetcher& fetcher, std::stop_token stop, AgentLog* log) {
  config.validate();
  SyncJob job = [&] { return sync(rb, config, fetcher); };
  auto on_report = [log](const SyncReport& r) {
    if (log != nullptr) log->append(r);
  };
  return run_periodic(job, std::chrono::seconds(config.poll_interval_seconds),
                      std::move(stop), on_report);
}

namespace {

FetchResult fetch_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {false, {}, "cannot open " + path};
  std::ostringstream buf;
  buf << in.rdbuf();
  return {true, buf.str(), {}};
}

FetchResult fetch_http(const std::string& url, std::chrono::seconds timeout) {
  const std::size_t scheme_end = url.find("://");
  const std::size_t path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? std::string("/") : url.substr(path_start);
  httplib::Client client(origin);
  if (!client.is_valid()) return {false, {}, "unsupported url " + url};
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_follow_location(true);
  auto res = client.Get(path);
  if (!res) return {false, {}, httplib::to_string(res.error())};
  if (res->status != 200) return {false, {}, "HTTP " + std::to_string(res->status)};
  return {true, std::move(res->body), {}};
}

}  // namespace

FetchResult default_fetch(const std::string& url, std::chrono::seconds timeout) {
  if (url.rfind("file://", 0) == 0) return fetch_file(url.substr(7));
  if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0) {
    return fetch_http(url, timeout);
  }
  return {false, {}, "unsupported url scheme: " + url};
}

}  // namespace kbts::agent
