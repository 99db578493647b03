#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kbts/rule_model.hpp"

namespace kbts::agent {

struct SourceConfig {
  std::vector<std::string> sources;
  int poll_interval_seconds = 3600;
  int fetch_timeout_seconds = 10;

  /// Throws InvalidConfig when intervals are not positive.
  void validate() const;
};

/// Rule found in a page, already normalized.
struct Candidate {
  std::string condition_a;
  std::string condition_b;
  std::string conclusion;
  std::string solution;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Extraction {
  std::vector<Candidate> candidates;
  std::size_t malformed = 0;
};

/// Scans every <table> whose class attribute has the token "kb-rules". The
/// first row of each such table is a header. Every later row contributes its
/// first four cells (tags stripped, entities decoded, normalized) as
/// IF / AND / THEN / solution; rows with fewer cells or an empty field count as
/// malformed. Tolerates unclosed cells, rows and tables.
Extraction extract_rules(std::string_view html);

/// Decodes named (amp, lt, gt, quot, apos, nbsp) and numeric entities.
/// Unknown entities are left as written.
std::string decode_entities(std::string_view text);

struct DedupResult {
  std::vector<Candidate> fresh;
  std::vector<Candidate> duplicates;
};

/// A candidate is a duplicate when its condition pair is already in rb or
/// occurred earlier in candidates. Both partitions keep input order.
DedupResult dedup(const std::vector<Candidate>& candidates, const RuleBase& rb);

struct FetchResult {
  bool ok = false;
  std::string body;
  std::string error;
};

using Fetcher =
    std::function<FetchResult(const std::string& url, std::chrono::seconds timeout)>;

/// file://, http:// and https:// transport.
FetchResult default_fetch(const std::string& url, std::chrono::seconds timeout);

struct SourceReport {
  std::string url;
  bool fetched = false;
  std::string error;
  std::size_t candidates = 0;  // well-formed candidates plus malformed rows
  std::size_t added = 0;
  std::size_t skipped_duplicates = 0;
  std::size_t malformed = 0;
  /// Duplicates whose THEN/solution differ from the stored rule. The stored
  /// rule is kept.
  std::vector<std::string> conflicts;
};

struct SyncReport {
  std::string started;   // ISO-8601 UTC
  std::string finished;
  std::vector<SourceReport> sources;

  std::size_t total_added() const;
  std::size_t total_skipped() const;
  std::size_t total_malformed() const;
  std::size_t total_candidates() const;
};

nlohmann::json to_json(const SourceReport& r);
nlohmann::json to_json(const SyncReport& r);
/// Human-readable multi-line rendering used by the CLI.
std::string render(const SyncReport& r);

/// One pass over all sources. New rules go through RuleBase::add_rule; a
/// failed fetch is recorded and the remaining sources are still processed.
SyncReport sync(RuleBase& rb, const SourceConfig& config, const Fetcher& fetcher);

/// Append-only JSON-lines log of sync reports.
class AgentLog {
 public:
  explicit AgentLog(std::filesystem::path path) : path_(std::move(path)) {}

  /// Throws IoError.
  void append(const SyncReport& report);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

using SyncJob = std::function<SyncReport()>;

struct PeriodicStats {
  std::size_t runs = 0;
  std::size_t skipped_ticks = 0;
};

/// Runs job once per period until stop is requested. The first tick happens
/// one period after the call. A tick that arrives while the previous job is
/// still running is skipped. Returns after the in-flight job, if any, ends.
PeriodicStats run_periodic(const SyncJob& job, std::chrono::milliseconds period,
                           std::stop_token stop,
                           const std::function<void(const SyncReport&)>& on_report = {});

/// Periodic sync of rb against config.sources every poll_interval_seconds,
/// appending each report to log when given. rb is only touched by the sync
/// job, one run at a time.
PeriodicStats run_periodic(RuleBase& rb, const SourceConfig& config,
                           const Fetcher& fetcher, std::stop_token stop,
                           AgentLog* log = nullptr);

/// Current UTC time as 2024-01-02T03:04:05.678Z.
std::string utc_timestamp();

}  // namespace kbts::agent
